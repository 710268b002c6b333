#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reldet/dataset.hpp"

namespace reldet {

// Feature vector for an ordered detection pair (i, j). Layout: one-hot coarse
// class of the subject (K coarse entries), one-hot of the object (K entries),
// then [dx/W, dy/H, log(w_j/w_i), log(h_j/h_i), iou, center_distance/diag,
// area_i/(W*H), area_j/(W*H), union_area/(W*H), 1.0].
using PairFeatures = std::vector<double>;

// Feature vector length for a catalog with `num_coarse` coarse classes.
inline int feature_dim(int num_coarse) { return 2 * num_coarse + 10; }

PairFeatures pair_features(const Scene& scene, int i, int j, int coarse_i, int coarse_j,
                           int num_coarse);

// Softmax classifier over relation labels. Row r of `weights` scores relation
// r; the last row is the reserved no-relation label.
struct RelModel {
  std::vector<std::string> relations;  // L real relation names
  int num_coarse = 0;
  std::vector<std::vector<double>> weights;  // (L+1) x feature_dim(num_coarse)

  int num_labels() const { return static_cast<int>(relations.size()) + 1; }
  int no_relation() const { return static_cast<int>(relations.size()); }

  static RelModel zeros(const std::vector<std::string>& relations, int num_coarse);

  void save(const std::string& path) const;
  static RelModel load(const std::string& path);
};

// softmax(weights * f); entries positive and summing to 1 within 1e-9.
// Throws ValidationError on a feature-length mismatch.
std::vector<double> predict_pair(const RelModel& m, const PairFeatures& f);

// Independent per-pair prediction over the listed ordered pairs, feeding each
// detection's argmax coarse class into the features.
std::map<std::pair<int, int>, std::vector<double>> predict_scene(
    const RelModel& m, const Scene& scene, const std::vector<std::pair<int, int>>& pairs);

struct TrainExample {
  PairFeatures features;
  int label = 0;  // relation index in [0, L]; L is no-relation
};

// Mean cross-entropy plus (l2/2)*||W||^2 with its analytic gradient.
// Throws ValidationError on an empty batch.
std::pair<double, std::vector<std::vector<double>>> loss_and_grad(
    const RelModel& m, const std::vector<TrainExample>& batch, double l2);

struct TrainConfig {
  int iters = 500;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;  // reserved for minibatching; full-batch runs ignore it
};

// Full-batch gradient descent from zero initialization; deterministic given
// the config. Throws ValidationError on an empty set or a non-finite loss.
RelModel train(const std::vector<TrainExample>& examples,
               const std::vector<std::string>& relations, int num_coarse, const TrainConfig& cfg,
               std::vector<double>* loss_history = nullptr);

// Fraction of examples whose argmax prediction equals the label.
double training_accuracy(const RelModel& m, const std::vector<TrainExample>& examples);

// Supervision assembly: for every scene in `selected_ids`, emit the labeled
// relation pairs as positives and every remaining ordered pair whose centers
// are within tau = tau_frac * scene diagonal as no-relation negatives.
std::vector<TrainExample> make_training_set(const Dataset& d,
                                            const std::vector<std::string>& selected_ids,
                                            double tau_frac);

}  // namespace reldet
