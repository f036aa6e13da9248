#pragma once

#include <vcdet/mask_graph.hpp>
#include <vcdet/ov_labeler.hpp>
#include <vcdet/scene_io.hpp>

#include <cstdint>
#include <string>

namespace vcdet::cli {

constexpr std::size_t kDefaultFrameCount = 45;

/// Every knob of a run. Serialized verbatim into the run metadata; `jobs` is
/// left out because results do not depend on it.
struct RunConfig {
  MergeConfig merge;
  LabelerConfig labeler;
  std::size_t point_cap = kDefaultPointCap;
  std::size_t max_frames = kDefaultFrameCount;
  std::uint64_t seed = 0;
  std::string provider = "fake";
  std::size_t jobs = 1;

  /// Pushes shared values (tau_occ, jobs) into the per-module configs and validates.
  void finalize();
  LoadOptions load_options() const { return {point_cap, seed, max_frames}; }
  std::string to_json() const;  // nlohmann-free header; JSON text
};

}  // namespace vcdet::cli
