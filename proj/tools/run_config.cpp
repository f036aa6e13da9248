#include "run_config.hpp"

#include <vcdet/error.hpp>

#include <nlohmann/json.hpp>

namespace vcdet::cli {

void RunConfig::finalize() {
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  merge.workers = jobs;
  labeler.workers = jobs;
  labeler.tau_occ = merge.tau_occ;
  if (point_cap < 1) throw ConfigError("--point-cap must be >= 1");
  merge.validate();
  labeler.validate();
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["tau_rate"] = merge.tau_rate;
  j["merge_schedule"] = merge.observer_schedule;
  j["tau_contain"] = merge.tau_contain;
  j["contain_radius"] = merge.contain_radius;
  j["min_points"] = merge.min_points;
  j["min_mask_pixels"] = merge.min_mask_pixels;
  j["min_visible_points"] = merge.min_visible_points;
  j["tau_occ"] = merge.tau_occ;
  j["k_views"] = labeler.k_views;
  j["scales"] = labeler.scales;
  j["temperature"] = labeler.temperature;
  j["nms_iou"] = labeler.nms_iou;
  j["point_cap"] = point_cap;
  j["frames"] = max_frames;
  j["seed"] = seed;
  j["provider"] = provider;
  return j.dump();
}

}  // namespace vcdet::cli
