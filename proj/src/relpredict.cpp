#include "reldet/relpredict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "reldet/errors.hpp"
#include "reldet/geometry.hpp"

namespace reldet {

using json = nlohmann::json;

PairFeatures pair_features(const Scene& scene, int i, int j, int coarse_i, int coarse_j,
                           int num_coarse) {
  const Box& a = scene.detections[i].box;
  const Box& b = scene.detections[j].box;
  const double w = scene.width;
  const double h = scene.height;
  const double img_area = w * h;

  PairFeatures f(feature_dim(num_coarse), 0.0);
  f[coarse_i] = 1.0;
  f[num_coarse + coarse_j] = 1.0;
  int k = 2 * num_coarse;
  f[k + 0] = (b.cx - a.cx) / w;
  f[k + 1] = (b.cy - a.cy) / h;
  f[k + 2] = std::log(b.w / a.w);
  f[k + 3] = std::log(b.h / a.h);
  f[k + 4] = iou(a, b);
  f[k + 5] = center_distance(a, b) / scene.diag();
  f[k + 6] = a.area() / img_area;
  f[k + 7] = b.area() / img_area;
  f[k + 8] = union_box(a, b).area() / img_area;
  f[k + 9] = 1.0;
  return f;
}

RelModel RelModel::zeros(const std::vector<std::string>& relations, int num_coarse) {
  RelModel m;
  m.relations = relations;
  m.num_coarse = num_coarse;
  m.weights.assign(relations.size() + 1,
                   std::vector<double>(feature_dim(num_coarse), 0.0));
  return m;
}

void RelModel::save(const std::string& path) const {
  json j;
  j["relations"] = relations;
  j["num_coarse"] = num_coarse;
  j["weights"] = weights;
  std::ofstream out(path);
  if (!out) throw IoError("cannot create model file: " + path);
  out << j.dump() << "\n";
}

RelModel RelModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  RelModel m;
  try {
    m.relations = j.at("relations").get<std::vector<std::string>>();
    m.num_coarse = j.at("num_coarse").get<int>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad model file: ") + e.what());
  }
  const int rows = m.num_labels();
  const int cols = feature_dim(m.num_coarse);
  if (static_cast<int>(m.weights.size()) != rows)
    throw ValidationError("model weight row count does not match relations");
  for (const auto& row : m.weights) {
    if (static_cast<int>(row.size()) != cols)
      throw ValidationError("model weight column count does not match num_coarse");
    for (double v : row) {
      if (!std::isfinite(v)) throw ValidationError("model contains a non-finite weight");
    }
  }
  return m;
}

std::vector<double> predict_pair(const RelModel& m, const PairFeatures& f) {
  const int rows = m.num_labels();
  if (m.weights.empty() || m.weights[0].size() != f.size())
    throw ValidationError("feature length does not match model dimensions");
  std::vector<double> logits(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    const auto& row = m.weights[r];
    for (std::size_t k = 0; k < f.size(); ++k) s += row[k] * f[k];
    logits[r] = s;
  }
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - max_logit);
    total += v;
  }
  for (auto& v : logits) v /= total;
  return logits;
}

std::map<std::pair<int, int>, std::vector<double>> predict_scene(
    const RelModel& m, const Scene& scene, const std::vector<std::pair<int, int>>& pairs) {
  std::map<std::pair<int, int>, std::vector<double>> out;
  for (const auto& [i, j] : pairs) {
    int ci = scene.detections[i].coarse_argmax();
    int cj = scene.detections[j].coarse_argmax();
    out[{i, j}] = predict_pair(m, pair_features(scene, i, j, ci, cj, m.num_coarse));
  }
  return out;
}

std::pair<double, std::vector<std::vector<double>>> loss_and_grad(
    const RelModel& m, const std::vector<TrainExample>& batch, double l2) {
  if (batch.empty()) throw ValidationError("loss_and_grad: empty batch");
  const int rows = m.num_labels();
  const std::size_t cols = m.weights[0].size();
  std::vector<std::vector<double>> grad(rows, std::vector<double>(cols, 0.0));
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const auto& ex : batch) {
    std::vector<double> p = predict_pair(m, ex.features);
    loss -= std::log(std::max(p[ex.label], 1e-300)) * inv_n;
    for (int r = 0; r < rows; ++r) {
      double coeff = (p[r] - (r == ex.label ? 1.0 : 0.0)) * inv_n;
      auto& grow = grad[r];
      for (std::size_t k = 0; k < cols; ++k) grow[k] += coeff * ex.features[k];
    }
  }

  if (l2 > 0.0) {
    for (int r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < cols; ++k) {
        loss += 0.5 * l2 * m.weights[r][k] * m.weights[r][k];
        grad[r][k] += l2 * m.weights[r][k];
      }
    }
  }
  return {loss, std::move(grad)};
}

RelModel train(const std::vector<TrainExample>& examples,
               const std::vector<std::string>& relations, int num_coarse, const TrainConfig& cfg,
               std::vector<double>* loss_history) {
  if (examples.empty()) throw ValidationError("train: empty training set");
  const int cols = feature_dim(num_coarse);
  const int labels = static_cast<int>(relations.size()) + 1;
  for (const auto& ex : examples) {
    if (static_cast<int>(ex.features.size()) != cols)
      throw ValidationError("train: feature length does not match num_coarse");
    if (ex.label < 0 || ex.label >= labels)
      throw ValidationError("train: label out of range");
  }

  RelModel m = RelModel::zeros(relations, num_coarse);
  for (int it = 0; it < cfg.iters; ++it) {
    auto [loss, grad] = loss_and_grad(m, examples, cfg.l2);
    if (!std::isfinite(loss))
      throw ValidationError("train: diverged (non-finite loss at iteration " +
                            std::to_string(it) + ")");
    if (loss_history) loss_history->push_back(loss);
    for (int r = 0; r < m.num_labels(); ++r) {
      for (int k = 0; k < cols; ++k) m.weights[r][k] -= cfg.learning_rate * grad[r][k];
    }
  }
  return m;
}

double training_accuracy(const RelModel& m, const std::vector<TrainExample>& examples) {
  if (examples.empty()) return 0.0;
  int correct = 0;
  for (const auto& ex : examples) {
    std::vector<double> p = predict_pair(m, ex.features);
    int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (arg == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<TrainExample> make_training_set(const Dataset& d,
                                            const std::vector<std::string>& selected_ids,
                                            double tau_frac) {
  std::set<std::string> selected(selected_ids.begin(), selected_ids.end());
  std::vector<TrainExample> out;
  for (const auto& scene : d.scenes) {
    if (!selected.count(scene.image_id)) continue;
    const double tau = tau_frac * scene.diag();
    const int n = static_cast<int>(scene.detections.size());
    // labeled relation per ordered pair, no-relation otherwise
    std::map<std::pair<int, int>, int> labeled;
    for (int i = 0; i < n; ++i) {
      for (const auto& rl : scene.detections[i].rels) labeled[{i, rl.target}] = rl.relation;
    }
    for (int i = 0; i < n; ++i) {
      int ci = scene.detections[i].coarse_argmax();
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (center_distance(scene.detections[i].box, scene.detections[j].box) > tau) continue;
        int cj = scene.detections[j].coarse_argmax();
        auto it = labeled.find({i, j});
        int label = it != labeled.end() ? it->second : d.no_relation();
        out.push_back({pair_features(scene, i, j, ci, cj, d.num_coarse()), label});
      }
    }
  }
  return out;
}

}  // namespace reldet
