#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reldet/dataset.hpp"
#include "reldet/kb.hpp"
#include "reldet/relpredict.hpp"

namespace reldet {

// Greedy non-maximum suppression in descending score order (ties keep the
// lower index). When per_coarse is set, suppression only happens within the
// argmax coarse class. Returns the surviving indices in ascending order.
std::vector<int> nms(const std::vector<Detection>& detections, double iou_thresh,
                     bool per_coarse);

// Per-detection neighbor lists: j is a neighbor of i when their centers are
// at most tau apart (inclusive). Symmetric, and never contains i itself.
using Neighborhood = std::vector<std::vector<int>>;
Neighborhood build_neighborhood(const std::vector<Detection>& detections, double tau);

enum class ScoreMode { kComposed, kRaw };

struct InferConfig {
  double tau_frac = 0.25;
  double nms_iou = 0.5;
  double rel_threshold = 0.5;  // graph-export threshold only
  ScoreMode score_mode = ScoreMode::kComposed;
};

// One fine-grained detection: the surviving box, its predicted fine class,
// the composed score, and how the label was obtained.
struct FineDetection {
  Box box;
  int fine_label = 0;
  double score = 0.0;
  double detector_score = 0.0;
  std::vector<double> coarse_probs;
  Provenance provenance;
  int source_index = 0;  // index in the input scene
};

// Relation estimate for an ordered pair: argmax label (may be no-relation)
// and its probability.
struct RelationEstimate {
  int relation = 0;
  double prob = 1.0;
};

// Supplies the relation estimate for an ordered pair of scene detections,
// identified by their original indices.
using RelationFn = std::function<RelationEstimate(int i, int j)>;

// Inference skeleton with a pluggable relation source: NMS, argmax coarse
// labels, neighborhood construction, per-pair relation estimates, KB query,
// and score composition.
std::vector<FineDetection> infer_scene_with(const Scene& scene, const RelationFn& relation_fn,
                                            const KnowledgeBase& kb, const InferConfig& cfg);

// Model-backed inference.
std::vector<FineDetection> infer_scene(const Scene& scene, const RelModel& model,
                                       const KnowledgeBase& kb, const Dataset& header,
                                       const InferConfig& cfg);

// Inference using the scene's ground-truth rel_labels at probability 1.
std::vector<FineDetection> infer_scene_ground_truth(const Scene& scene, const KnowledgeBase& kb,
                                                    const Dataset& header, const InferConfig& cfg);

// Relation arrow retained for graph export: probability of the argmax real
// relation was at or above the configured threshold.
struct GraphEdge {
  int subject = 0;
  int target = 0;
  int relation = 0;
  double prob = 0.0;
};

struct SceneGraph {
  std::string image_id;
  std::vector<GraphEdge> edges;
};

// Maps inference over every scene, ordered by image_id. The returned dataset
// carries the predicted fine labels, composed scores, and provenance. When
// `graphs` is non-null, also collects the per-scene relation arrows.
Dataset infer_dataset(const Dataset& d, const RelModel& model, const KnowledgeBase& kb,
                      const InferConfig& cfg, std::vector<SceneGraph>* graphs = nullptr);

void save_graphs(const std::vector<SceneGraph>& graphs, const Dataset& header,
                 const std::string& path);

}  // namespace reldet
