#include "vcdet/eval.hpp"

#include "vcdet/box.hpp"
#include "vcdet/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace vcdet {

namespace {

struct RankedPred {
  const std::string* scene;
  std::size_t index;
  const ScoredBox* pred;
};

// Descending score; ties by scene id then index within the scene.
bool ranks_before(const RankedPred& a, const RankedPred& b) {
  if (a.pred->score != b.pred->score) return a.pred->score > b.pred->score;
  if (*a.scene != *b.scene) return *a.scene < *b.scene;
  return a.index < b.index;
}

std::string threshold_key(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// Greedy one-to-one matching of ranked predictions against `gts` (already
// filtered to the relevant boxes). Returns a TP flag per ranked prediction.
std::vector<bool> match_ranked(const std::vector<RankedPred>& ranked,
                               const std::map<std::string, std::vector<const GroundTruthBox*>>& gts,
                               double iou_threshold) {
  std::map<std::string, std::vector<bool>> used;
  for (const auto& [scene, boxes] : gts) used[scene].assign(boxes.size(), false);
  std::vector<bool> tp(ranked.size(), false);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    auto it = gts.find(*ranked[r].scene);
    if (it == gts.end()) continue;
    auto& taken = used[*ranked[r].scene];
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t g = 0; g < it->second.size(); ++g) {
      if (taken[g]) continue;
      const double iou = iou3d(ranked[r].pred->box, it->second[g]->box);
      if (iou > best) {
        best = iou;
        best_idx = g;
      }
    }
    if (best >= iou_threshold && best >= 0.0) {
      taken[best_idx] = true;
      tp[r] = true;
    }
  }
  return tp;
}

}  // namespace

std::vector<std::string> scene_id_mismatches(const PredictionSet& preds, const GroundTruthSet& gts) {
  std::vector<std::string> out;
  for (const auto& [id, _] : preds) {
    if (!gts.contains(id)) out.push_back("scene '" + id + "' has predictions but no ground truth");
  }
  for (const auto& [id, _] : gts) {
    if (!preds.contains(id)) out.push_back("scene '" + id + "' has ground truth but no predictions");
  }
  return out;
}

double average_precision(const std::vector<bool>& ranked_tp, std::size_t num_gt) {
  if (num_gt == 0 || ranked_tp.empty()) return 0.0;
  std::vector<double> precision(ranked_tp.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    tp += ranked_tp[i];
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope: max precision at any rank with recall >= the current one.
  for (std::size_t i = precision.size() - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    if (ranked_tp[i]) ap += precision[i] / static_cast<double>(num_gt);
  }
  return std::clamp(ap, 0.0, 1.0);
}

EvalReport evaluate_map(const PredictionSet& preds, const GroundTruthSet& gts,
                        const std::vector<std::string>& class_names, const std::vector<double>& iou_thresholds) {
  if (const auto bad = scene_id_mismatches(preds, gts); !bad.empty()) {
    std::string msg = "scene id mismatch:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw InputError(msg);
  }
  const int num_classes = static_cast<int>(class_names.size());
  const auto check_class = [&](int c, const std::string& where) {
    if (c < 0 || c >= num_classes) {
      throw InputError("unknown class id " + std::to_string(c) + " in " + where + " (vocabulary has " +
                       std::to_string(num_classes) + " classes)");
    }
  };
  for (const auto& [scene, boxes] : gts)
    for (const auto& g : boxes) check_class(g.class_id, "ground truth of scene '" + scene + "'");
  for (const auto& [scene, boxes] : preds)
    for (const auto& p : boxes) check_class(p.class_id, "predictions of scene '" + scene + "'");

  EvalReport report;
  report.iou_thresholds = iou_thresholds;
  report.map.assign(iou_thresholds.size(), 0.0);
  std::vector<double> sums(iou_thresholds.size(), 0.0);
  std::size_t counted = 0;

  for (int c = 0; c < num_classes; ++c) {
    std::vector<RankedPred> ranked;
    for (const auto& [scene, boxes] : preds) {
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (boxes[i].class_id == c) ranked.push_back({&scene, i, &boxes[i]});
      }
    }
    std::sort(ranked.begin(), ranked.end(), ranks_before);

    std::map<std::string, std::vector<const GroundTruthBox*>> class_gts;
    std::size_t num_gt = 0;
    for (const auto& [scene, boxes] : gts) {
      for (const auto& g : boxes) {
        if (g.class_id != c) continue;
        class_gts[scene].push_back(&g);
        ++num_gt;
      }
    }

    ClassAp entry;
    entry.class_id = c;
    entry.name = class_names[static_cast<std::size_t>(c)];
    entry.num_gt = num_gt;
    entry.num_pred = ranked.size();
    for (double thr : iou_thresholds) entry.ap.push_back(average_precision(match_ranked(ranked, class_gts, thr), num_gt));
    if (num_gt > 0) {
      ++counted;
      for (std::size_t t = 0; t < sums.size(); ++t) sums[t] += entry.ap[t];
    }
    report.classes.push_back(std::move(entry));
  }
  if (counted > 0) {
    for (std::size_t t = 0; t < sums.size(); ++t) report.map[t] = sums[t] / static_cast<double>(counted);
  }
  return report;
}

PrecisionRecall evaluate_pr_binary(const PredictionSet& preds, const GroundTruthSet& gts, double iou_threshold,
                                   double conf_threshold) {
  if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) throw ConfigError("confidence threshold must be in [0, 1]");
  PrecisionRecall out;
  std::map<std::string, std::vector<const GroundTruthBox*>> all_gts;
  for (const auto& [scene, boxes] : gts) {
    for (const auto& g : boxes) all_gts[scene].push_back(&g);
    out.num_gt += boxes.size();
  }
  std::vector<RankedPred> ranked;
  for (const auto& [scene, boxes] : preds) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].score >= conf_threshold) ranked.push_back({&scene, i, &boxes[i]});
    }
  }
  std::sort(ranked.begin(), ranked.end(), ranks_before);
  const auto tp = match_ranked(ranked, all_gts, iou_threshold);
  out.kept = ranked.size();
  out.true_positives = static_cast<std::size_t>(std::count(tp.begin(), tp.end(), true));
  out.precision = out.kept ? static_cast<double>(out.true_positives) / static_cast<double>(out.kept) : 0.0;
  out.recall = out.num_gt ? static_cast<double>(out.true_positives) / static_cast<double>(out.num_gt) : 0.0;
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["iou_thresholds"] = iou_thresholds;
  nlohmann::ordered_json m;
  for (std::size_t t = 0; t < iou_thresholds.size(); ++t) m[threshold_key(iou_thresholds[t])] = map[t];
  j["map"] = m;
  nlohmann::ordered_json cls = nlohmann::ordered_json::array();
  for (const auto& c : classes) {
    nlohmann::ordered_json e;
    e["class_id"] = c.class_id;
    e["name"] = c.name;
    e["num_gt"] = c.num_gt;
    e["num_pred"] = c.num_pred;
    nlohmann::ordered_json ap;
    for (std::size_t t = 0; t < iou_thresholds.size(); ++t) ap[threshold_key(iou_thresholds[t])] = c.ap[t];
    e["ap"] = ap;
    cls.push_back(e);
  }
  j["classes"] = cls;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::size_t name_w = 5;
  for (const auto& c : classes) name_w = std::max(name_w, c.name.size());
  std::ostringstream out;
  char buf[64];
  const auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  out << pad("class", name_w) << "  " << pad("gt", 6) << pad("pred", 6);
  for (double t : iou_thresholds) {
    std::snprintf(buf, sizeof buf, "AP@%g", t);
    out << pad(buf, 9);
  }
  out << "\n";
  for (const auto& c : classes) {
    out << pad(c.name, name_w) << "  " << pad(std::to_string(c.num_gt), 6) << pad(std::to_string(c.num_pred), 6);
    for (double ap : c.ap) {
      std::snprintf(buf, sizeof buf, "%.4f", ap);
      out << pad(buf, 9);
    }
    out << "\n";
  }
  out << pad("mAP", name_w) << "  " << pad("", 12);
  for (double m : map) {
    std::snprintf(buf, sizeof buf, "%.4f", m);
    out << pad(buf, 9);
  }
  out << "\n";
  return out.str();
}

}  // namespace vcdet
