#include "reldet/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "reldet/errors.hpp"
#include "reldet/geometry.hpp"

namespace reldet {

std::vector<MatchResult> match_detections(const std::vector<ScoredBox>& preds,
                                          const std::vector<Box>& gts, double iou_thresh) {
  const int np = static_cast<int>(preds.size());
  std::vector<int> order(np);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    return a < b;
  });

  std::vector<bool> gt_taken(gts.size(), false);
  std::vector<MatchResult> out;
  out.reserve(np);
  for (int idx : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
      if (gt_taken[g]) continue;
      double v = iou(preds[idx].box, gts[g]);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    bool matched = best_gt >= 0;
    if (matched) gt_taken[best_gt] = true;
    out.push_back({preds[idx].score, matched});
  }
  return out;
}

double average_precision(std::vector<MatchResult> matches, int num_gt, int recall_points) {
  if (num_gt <= 0) return 0.0;
  std::stable_sort(matches.begin(), matches.end(),
                   [](const MatchResult& a, const MatchResult& b) { return a.score > b.score; });

  std::vector<double> precision, recall;
  int tp = 0;
  int seen = 0;
  for (const auto& m : matches) {
    ++seen;
    if (m.matched) ++tp;
    precision.push_back(static_cast<double>(tp) / seen);
    recall.push_back(static_cast<double>(tp) / num_gt);
  }

  double sum = 0.0;
  for (int k = 0; k < recall_points; ++k) {
    double r = static_cast<double>(k) / (recall_points - 1);
    double best = 0.0;
    for (std::size_t t = 0; t < recall.size(); ++t) {
      if (recall[t] >= r - 1e-12 && precision[t] > best) best = precision[t];
    }
    sum += best;
  }
  return sum / recall_points;
}

namespace {

int space_label(const Dataset& d, int fine, LabelSpace space) {
  return space == LabelSpace::kFine ? fine : d.coarse_of_fine[fine];
}

}  // namespace

EvalReport evaluate_map(const Dataset& pred, const Dataset& gt, LabelSpace space,
                        int recall_points) {
  if (!pred.same_header(gt)) throw ValidationError("prediction and ground-truth headers differ");

  std::map<std::string, const Scene*> gt_by_id;
  for (const auto& scene : gt.scenes) {
    if (!gt_by_id.emplace(scene.image_id, &scene).second)
      throw ValidationError("duplicate image_id in ground truth: '" + scene.image_id + "'");
  }
  for (const auto& scene : pred.scenes) {
    if (!gt_by_id.count(scene.image_id))
      throw ValidationError("unknown image_id in predictions: '" + scene.image_id + "'");
  }

  const std::vector<std::string>& class_names =
      space == LabelSpace::kFine ? gt.fine_classes : gt.coarse_classes;
  const int num_classes = static_cast<int>(class_names.size());

  EvalReport report;
  report.space = space;
  report.recall_points = recall_points;

  // image ids in sorted order for a deterministic accumulation order
  std::vector<std::string> ids;
  for (const auto& [id, scene] : gt_by_id) ids.push_back(id);
  std::map<std::string, const Scene*> pred_by_id;
  for (const auto& scene : pred.scenes) pred_by_id[scene.image_id] = &scene;

  std::vector<std::vector<MatchResult>> matches(num_classes);
  std::vector<int> gt_count(num_classes, 0), pred_count(num_classes, 0);

  for (const auto& id : ids) {
    const Scene* gs = gt_by_id[id];
    std::vector<std::vector<Box>> gt_boxes(num_classes);
    for (const auto& det : gs->detections) {
      if (!det.fine_label)
        throw ValidationError("ground-truth detection in '" + id + "' has no fine label");
      int c = space_label(gt, *det.fine_label, space);
      gt_boxes[c].push_back(det.box);
      ++gt_count[c];
    }

    std::vector<std::vector<ScoredBox>> pred_boxes(num_classes);
    auto it = pred_by_id.find(id);
    if (it != pred_by_id.end()) {
      for (const auto& det : it->second->detections) {
        if (!det.fine_label)
          throw ValidationError("prediction in '" + id + "' has no fine label");
        int c = space_label(pred, *det.fine_label, space);
        pred_boxes[c].push_back({det.box, det.score});
        ++pred_count[c];
      }
    }

    for (int c = 0; c < num_classes; ++c) {
      auto m = match_detections(pred_boxes[c], gt_boxes[c]);
      matches[c].insert(matches[c].end(), m.begin(), m.end());
    }
  }

  double ap_sum = 0.0;
  int scored = 0;
  for (int c = 0; c < num_classes; ++c) {
    report.counts[class_names[c]] = {gt_count[c], pred_count[c]};
    if (gt_count[c] == 0 && pred_count[c] == 0) continue;
    double ap = average_precision(matches[c], gt_count[c], recall_points);
    report.per_class_ap[class_names[c]] = ap;
    ap_sum += ap;
    ++scored;
  }
  report.map = scored > 0 ? ap_sum / scored : 0.0;
  return report;
}

void render_report(const EvalReport& r, std::ostream& out) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-18s %10s %8s %8s\n", "class", "AP@50", "GT", "pred");
  out << buf;
  if (r.per_class_ap.empty()) return;
  for (const auto& [name, ap] : r.per_class_ap) {
    const ClassCounts& c = r.counts.at(name);
    std::snprintf(buf, sizeof(buf), "%-18s %10.6f %8d %8d\n", name.c_str(), ap, c.ground_truth,
                  c.predictions);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-18s %10.6f\n", "mAP", r.map);
  out << buf;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["space"] = r.space == LabelSpace::kFine ? "fine" : "coarse";
  j["recall_points"] = r.recall_points;
  j["map"] = r.map;
  j["per_class_ap"] = nlohmann::ordered_json::object();
  for (const auto& [name, ap] : r.per_class_ap) j["per_class_ap"][name] = ap;
  j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [name, c] : r.counts) {
    j["counts"][name] = {{"gt", c.ground_truth}, {"pred", c.predictions}};
  }
  return j.dump();
}

void save_report(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create report file: " + path);
  out << report_json(r) << "\n";
}

}  // namespace reldet
