#include "reldet/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "reldet/errors.hpp"
#include "reldet/rng.hpp"

namespace reldet {

std::vector<AutoRel> auto_annotate_scene(const Scene& scene, const KnowledgeBase& kb, double tau) {
  const int n = static_cast<int>(scene.detections.size());
  for (int i = 0; i < n; ++i) {
    if (!scene.detections[i].fine_label)
      throw ValidationError("auto annotation requires fine labels; scene '" + scene.image_id +
                            "' detection " + std::to_string(i) + " has none");
  }

  std::map<std::pair<int, int>, int> pair_relation;
  for (const auto& t : kb.tuples()) {
    for (int i = 0; i < n; ++i) {
      const Detection& subj = scene.detections[i];
      if (*subj.fine_label != t.fine) continue;
      if (subj.coarse_argmax() != t.subj_coarse) continue;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const Detection& obj = scene.detections[j];
        if (obj.coarse_argmax() != t.obj_coarse) continue;
        if (center_distance(subj.box, obj.box) > tau) continue;
        auto [it, inserted] = pair_relation.insert({{i, j}, t.relation});
        if (!inserted && it->second != t.relation)
          throw ValidationError("ambiguous supervision in scene '" + scene.image_id + "': pair (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                ") matches tuples with different relations");
      }
    }
  }

  std::vector<AutoRel> out;
  out.reserve(pair_relation.size());
  for (const auto& [pair, rel] : pair_relation) out.push_back({pair.first, pair.second, rel});
  return out;
}

AutoResult auto_annotate_dataset(const Dataset& d, const KnowledgeBase& kb, const AutoConfig& cfg,
                                 std::uint64_t seed) {
  if (!(cfg.tau_frac > 0.0) || cfg.tau_frac > std::sqrt(2.0) + 1e-12)
    throw ValidationError("tau_frac must be in (0, sqrt(2)]");
  if (!(cfg.fraction_x > 0.0) || cfg.fraction_x > 1.0)
    throw ValidationError("fraction must be in (0, 1]");

  AutoResult res;
  res.dataset = d;
  res.seed = seed;
  res.fraction = cfg.fraction_x;

  const int n = static_cast<int>(d.scenes.size());
  const int take = std::min<int>(n, static_cast<int>(std::ceil(cfg.fraction_x * n)));
  Rng rng(seed);
  std::vector<int> order = rng.shuffled_indices(n);
  std::vector<int> chosen(order.begin(), order.begin() + take);
  std::sort(chosen.begin(), chosen.end());

  for (auto& scene : res.dataset.scenes) {
    for (auto& det : scene.detections) det.rels.clear();
  }
  for (int idx : chosen) {
    Scene& scene = res.dataset.scenes[idx];
    const double tau = cfg.tau_frac * scene.diag();
    for (const auto& rel : auto_annotate_scene(scene, kb, tau)) {
      scene.detections[rel.subject].rels.push_back({rel.target, rel.relation});
    }
    res.selected_ids.push_back(scene.image_id);
  }
  return res;
}

void save_selection(const AutoResult& r, const std::string& path) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["fraction"] = r.fraction;
  j["selected"] = r.selected_ids;
  std::ofstream out(path);
  if (!out) throw IoError("cannot create selection file: " + path);
  out << j.dump() << "\n";
}

std::vector<std::string> load_selection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open selection file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed selection file: ") + e.what());
  }
  try {
    return j.at("selected").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad selection file: ") + e.what());
  }
}

}  // namespace reldet
