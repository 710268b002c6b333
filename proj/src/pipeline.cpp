#include "reldet/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "reldet/errors.hpp"
#include "reldet/geometry.hpp"

namespace reldet {

std::vector<int> nms(const std::vector<Detection>& detections, double iou_thresh,
                     bool per_coarse) {
  const int n = static_cast<int>(detections.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (detections[a].score != detections[b].score)
      return detections[a].score > detections[b].score;
    return a < b;
  });

  std::vector<int> kept;
  for (int idx : order) {
    bool suppressed = false;
    for (int k : kept) {
      if (per_coarse && detections[k].coarse_argmax() != detections[idx].coarse_argmax()) continue;
      if (iou(detections[k].box, detections[idx].box) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Neighborhood build_neighborhood(const std::vector<Detection>& detections, double tau) {
  const int n = static_cast<int>(detections.size());
  Neighborhood nb(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (center_distance(detections[i].box, detections[j].box) <= tau) {
        nb[i].push_back(j);
        nb[j].push_back(i);
      }
    }
  }
  for (auto& list : nb) std::sort(list.begin(), list.end());
  return nb;
}

std::vector<FineDetection> infer_scene_with(const Scene& scene, const RelationFn& relation_fn,
                                            const KnowledgeBase& kb, const InferConfig& cfg) {
  const std::vector<int> survivors = nms(scene.detections, cfg.nms_iou, /*per_coarse=*/true);
  const double tau = cfg.tau_frac * scene.diag();

  std::vector<Detection> surviving;
  surviving.reserve(survivors.size());
  for (int idx : survivors) surviving.push_back(scene.detections[idx]);
  const Neighborhood nb = build_neighborhood(surviving, tau);

  std::vector<FineDetection> out;
  out.reserve(survivors.size());
  for (std::size_t si = 0; si < survivors.size(); ++si) {
    const Detection& det = surviving[si];
    const int subject_coarse = det.coarse_argmax();

    std::vector<NeighborObs> neighbors;
    neighbors.reserve(nb[si].size());
    for (int sj : nb[si]) {
      RelationEstimate est = relation_fn(survivors[si], survivors[sj]);
      neighbors.push_back({surviving[sj].coarse_argmax(), est.relation, est.prob});
    }

    KbQueryResult q = kb.query(subject_coarse, neighbors);
    FineDetection fd;
    fd.box = det.box;
    fd.fine_label = q.fine;
    fd.detector_score = det.score;
    fd.coarse_probs = det.coarse_probs;
    fd.source_index = survivors[si];
    if (q.from_default) {
      fd.provenance = Provenance{true, -1, -1, 0.0};
      fd.score = det.score;
    } else {
      // neighbor indices refer to the surviving (output) detection order
      fd.provenance = Provenance{false, nb[si][q.winning_neighbor],
                                 neighbors[q.winning_neighbor].relation, q.support};
      fd.score = cfg.score_mode == ScoreMode::kComposed ? det.score * q.support : det.score;
    }
    out.push_back(std::move(fd));
  }
  return out;
}

std::vector<FineDetection> infer_scene(const Scene& scene, const RelModel& model,
                                       const KnowledgeBase& kb, const Dataset& header,
                                       const InferConfig& cfg) {
  if (model.relations != header.relations)
    throw ValidationError("model relation list does not match the dataset header");
  if (model.num_coarse != header.num_coarse())
    throw ValidationError("model coarse-class count does not match the dataset header");

  RelationFn fn = [&](int i, int j) {
    int ci = scene.detections[i].coarse_argmax();
    int cj = scene.detections[j].coarse_argmax();
    std::vector<double> p =
        predict_pair(model, pair_features(scene, i, j, ci, cj, model.num_coarse));
    int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    return RelationEstimate{arg, p[arg]};
  };
  return infer_scene_with(scene, fn, kb, cfg);
}

std::vector<FineDetection> infer_scene_ground_truth(const Scene& scene, const KnowledgeBase& kb,
                                                    const Dataset& header,
                                                    const InferConfig& cfg) {
  std::map<std::pair<int, int>, int> labeled;
  for (int i = 0; i < static_cast<int>(scene.detections.size()); ++i) {
    for (const auto& rl : scene.detections[i].rels) labeled[{i, rl.target}] = rl.relation;
  }
  RelationFn fn = [&, labeled](int i, int j) {
    auto it = labeled.find({i, j});
    int rel = it != labeled.end() ? it->second : header.no_relation();
    return RelationEstimate{rel, 1.0};
  };
  return infer_scene_with(scene, fn, kb, cfg);
}

Dataset infer_dataset(const Dataset& d, const RelModel& model, const KnowledgeBase& kb,
                      const InferConfig& cfg, std::vector<SceneGraph>* graphs) {
  Dataset out;
  out.coarse_classes = d.coarse_classes;
  out.fine_classes = d.fine_classes;
  out.relations = d.relations;
  out.coarse_of_fine = d.coarse_of_fine;

  std::vector<int> order(d.scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return d.scenes[a].image_id < d.scenes[b].image_id; });

  for (int idx : order) {
    const Scene& scene = d.scenes[idx];
    std::vector<FineDetection> fds = infer_scene(scene, model, kb, d, cfg);

    Scene pred;
    pred.image_id = scene.image_id;
    pred.width = scene.width;
    pred.height = scene.height;
    for (const auto& fd : fds) {
      Detection det;
      det.box = fd.box;
      det.score = fd.score;
      det.coarse_probs = fd.coarse_probs;
      det.fine_label = fd.fine_label;
      det.provenance = fd.provenance;
      pred.detections.push_back(std::move(det));
    }
    out.scenes.push_back(std::move(pred));

    if (graphs) {
      SceneGraph g;
      g.image_id = scene.image_id;
      const std::vector<int> survivors = nms(scene.detections, cfg.nms_iou, true);
      std::vector<Detection> surviving;
      for (int s : survivors) surviving.push_back(scene.detections[s]);
      const Neighborhood nb = build_neighborhood(surviving, cfg.tau_frac * scene.diag());
      for (std::size_t si = 0; si < survivors.size(); ++si) {
        for (int sj : nb[si]) {
          int i = survivors[si];
          int j = survivors[sj];
          int ci = scene.detections[i].coarse_argmax();
          int cj = scene.detections[j].coarse_argmax();
          std::vector<double> p =
              predict_pair(model, pair_features(scene, i, j, ci, cj, model.num_coarse));
          int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
          if (arg != d.no_relation() && p[arg] >= cfg.rel_threshold) {
            // edge indices refer to the prediction file's detection order
            g.edges.push_back({static_cast<int>(si), sj, arg, p[arg]});
          }
        }
      }
      graphs->push_back(std::move(g));
    }
  }
  return out;
}

void save_graphs(const std::vector<SceneGraph>& graphs, const Dataset& header,
                 const std::string& path) {
  nlohmann::ordered_json j;
  j["scenes"] = nlohmann::ordered_json::array();
  for (const auto& g : graphs) {
    nlohmann::ordered_json js;
    js["image_id"] = g.image_id;
    js["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges) {
      js["edges"].push_back({e.subject, e.target, header.relations[e.relation], e.prob});
    }
    j["scenes"].push_back(std::move(js));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot create graph file: " + path);
  out << j.dump() << "\n";
}

}  // namespace reldet
