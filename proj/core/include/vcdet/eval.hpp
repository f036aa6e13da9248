#pragma once

#include "vcdet/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace vcdet {

struct GroundTruthBox {
  Box3D box;
  int class_id = 0;
};

struct ScoredBox {
  Box3D box;
  int class_id = 0;  ///< ignored by the class-agnostic protocol
  double score = 0.0;
};

/// Keyed by scene id. std::map keeps scene iteration order deterministic.
using PredictionSet = std::map<std::string, std::vector<ScoredBox>>;
using GroundTruthSet = std::map<std::string, std::vector<GroundTruthBox>>;

struct ClassAp {
  int class_id = 0;
  std::string name;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
  std::vector<double> ap;  ///< one per IoU threshold
};

struct EvalReport {
  std::vector<double> iou_thresholds;
  std::vector<ClassAp> classes;
  std::vector<double> map;  ///< one per IoU threshold, over classes with GT

  std::string to_json() const;
  std::string to_table() const;
};

/// All-points interpolated AP from a ranked list of TP flags.
double average_precision(const std::vector<bool>& ranked_tp, std::size_t num_gt);

/// Open-vocabulary mAP. Predictions of a class are ranked by score (ties:
/// scene id, then index within the scene) and greedily matched to the
/// unmatched GT of that class with the highest IoU >= threshold. Throws
/// InputError on class ids outside [0, class_names.size()) or scene ids
/// present on only one side.
EvalReport evaluate_map(const PredictionSet& preds, const GroundTruthSet& gts,
                        const std::vector<std::string>& class_names,
                        const std::vector<double>& iou_thresholds);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t kept = 0;
  std::size_t num_gt = 0;
};

/// Class-agnostic binary protocol: predictions below conf_threshold are
/// dropped, the rest matched greedily by descending score. No kept
/// predictions gives precision 0.
PrecisionRecall evaluate_pr_binary(const PredictionSet& preds, const GroundTruthSet& gts,
                                   double iou_threshold, double conf_threshold);

/// Lists scene ids present on exactly one side; empty when consistent.
std::vector<std::string> scene_id_mismatches(const PredictionSet& preds, const GroundTruthSet& gts);

}  // namespace vcdet
