#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "reldet/dataset.hpp"

namespace reldet {

struct ScoredBox {
  Box box;
  double score = 0.0;
};

struct MatchResult {
  double score = 0.0;
  bool matched = false;
};

// Greedy matching of one class in one image: predictions in descending score
// order (ties keep the lower index) each claim the unmatched ground truth
// with the highest IoU at or above 0.5.
std::vector<MatchResult> match_detections(const std::vector<ScoredBox>& preds,
                                          const std::vector<Box>& gts, double iou_thresh = 0.5);

// Interpolated average precision over `recall_points` evenly spaced recall
// thresholds (101 for the COCO convention, 11 for the older variant).
// Returns 0 when num_gt is 0.
double average_precision(std::vector<MatchResult> matches, int num_gt, int recall_points = 101);

enum class LabelSpace { kCoarse, kFine };

struct ClassCounts {
  int ground_truth = 0;
  int predictions = 0;
};

struct EvalReport {
  std::map<std::string, double> per_class_ap;  // scored classes only
  double map = 0.0;
  std::map<std::string, ClassCounts> counts;   // every class in the label space
  LabelSpace space = LabelSpace::kFine;
  int recall_points = 101;
};

// mAP@50 of `pred` against `gt` over the chosen label space. Coarse mode maps
// fine labels through coarse_of_fine before scoring. Classes with neither
// ground truth nor predictions are excluded from the mean; classes with
// predictions but no ground truth score 0.
EvalReport evaluate_map(const Dataset& pred, const Dataset& gt, LabelSpace space,
                        int recall_points = 101);

// Fixed-width text table with one row per scored class and a final mAP line.
void render_report(const EvalReport& r, std::ostream& out);

// Machine form: {"space":..., "map":..., "per_class_ap":{...}, "counts":{...}}.
std::string report_json(const EvalReport& r);
void save_report(const EvalReport& r, const std::string& path);

}  // namespace reldet
