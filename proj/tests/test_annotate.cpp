#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "reldet/annotate.hpp"
#include "reldet/errors.hpp"
#include "reldet/synthgen.hpp"

using namespace reldet;

namespace {

Detection make_det(Box box, int coarse, int fine) {
  Detection det;
  det.box = box;
  det.score = 0.9;
  det.coarse_probs.assign(5, 0.0);
  det.coarse_probs[coarse] = 1.0;
  det.fine_label = fine;
  return det;
}

// table-lamp over a table, centers 30 apart
Scene lamp_table_scene() {
  Scene s;
  s.image_id = "fixture";
  s.width = 200;
  s.height = 200;
  Dataset d = default_header();
  s.detections.push_back(make_det(Box{100, 70, 20, 20}, d.coarse_index("lamp"),
                                  d.fine_index("table-lamp")));
  s.detections.push_back(make_det(Box{100, 100, 60, 30}, d.coarse_index("table"),
                                  d.fine_index("coffee-table")));
  return s;
}

std::set<AutoRel> rel_set(const std::vector<AutoRel>& v) { return {v.begin(), v.end()}; }

std::set<AutoRel> ground_truth_rels(const Scene& s) {
  std::set<AutoRel> out;
  for (int i = 0; i < static_cast<int>(s.detections.size()); ++i) {
    for (const auto& rl : s.detections[i].rels) out.insert({i, rl.target, rl.relation});
  }
  return out;
}

}  // namespace

TEST_SUITE("annotate") {

TEST_CASE("lamp over table within tau is labeled on-top-of") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  Scene s = lamp_table_scene();
  auto rels = auto_annotate_scene(s, kb, 50.0);
  REQUIRE(rels.size() == 1);
  CHECK(rels[0].subject == 0);
  CHECK(rels[0].target == 1);
  CHECK(rels[0].relation == d.relation_index("on-top-of"));
}

TEST_CASE("tight tau filters the pair out") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  Scene s = lamp_table_scene();
  CHECK(auto_annotate_scene(s, kb, 10.0).empty());
}

TEST_CASE("floor-lamp beside a table matches no tuple") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  Scene s = lamp_table_scene();
  s.detections[0].fine_label = d.fine_index("floor-lamp");
  s.detections[1].fine_label = d.fine_index("end-table");
  CHECK(auto_annotate_scene(s, kb, 50.0).empty());
}

TEST_CASE("missing fine label is an error") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  Scene s = lamp_table_scene();
  s.detections[1].fine_label.reset();
  CHECK_THROWS_WITH_AS(auto_annotate_scene(s, kb, 50.0), doctest::Contains("fine labels"),
                       ValidationError);
}

TEST_CASE("two tuples assigning different relations to one pair is ambiguous") {
  Dataset d = default_header();
  std::istringstream kb_text(
      "table-lamp := lamp on-top-of table\n"
      "table-lamp := lamp next-to table\n"
      "default chair := chair\n"
      "default sofacouch := sofacouch\n"
      "default table := end-table\n"
      "default lamp := floor-lamp\n"
      "default rug := rug\n");
  KnowledgeBase kb = KnowledgeBase::parse(kb_text, d);
  Scene s = lamp_table_scene();
  CHECK_THROWS_WITH_AS(auto_annotate_scene(s, kb, 50.0), doctest::Contains("ambiguous"),
                       ValidationError);
}

TEST_CASE("output is independent of detection order") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  GenConfig cfg;
  cfg.num_scenes = 20;
  cfg.seed = 5;
  Dataset gen = gen_dataset(cfg);
  for (const auto& scene : gen.scenes) {
    double tau = 0.25 * scene.diag();
    auto base = auto_annotate_scene(scene, kb, tau);

    // reverse the detection order and remap indices back
    Scene rev = scene;
    std::reverse(rev.detections.begin(), rev.detections.end());
    const int n = static_cast<int>(rev.detections.size());
    for (auto& det : rev.detections) {
      for (auto& rl : det.rels) rl.target = n - 1 - rl.target;
    }
    auto flipped = auto_annotate_scene(rev, kb, tau);
    std::set<AutoRel> remapped;
    for (const auto& r : flipped) remapped.insert({n - 1 - r.subject, n - 1 - r.target, r.relation});
    CHECK(rel_set(base) == remapped);
  }
}

TEST_CASE("every emitted relation satisfies the KB predicate and the tau bound") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  GenConfig cfg;
  cfg.num_scenes = 30;
  cfg.seed = 77;
  Dataset gen = gen_dataset(cfg);
  for (const auto& scene : gen.scenes) {
    double tau = 0.25 * scene.diag();
    for (const auto& r : auto_annotate_scene(scene, kb, tau)) {
      const Detection& subj = scene.detections[r.subject];
      const Detection& obj = scene.detections[r.target];
      CHECK(kb.contains(*subj.fine_label, subj.coarse_argmax(), obj.coarse_argmax(), r.relation));
      CHECK(center_distance(subj.box, obj.box) <= tau);
    }
  }
}

TEST_CASE("emitted set grows monotonically with tau") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  GenConfig cfg;
  cfg.num_scenes = 25;
  cfg.seed = 8;
  Dataset gen = gen_dataset(cfg);
  for (const auto& scene : gen.scenes) {
    auto small = rel_set(auto_annotate_scene(scene, kb, 0.10 * scene.diag()));
    auto mid = rel_set(auto_annotate_scene(scene, kb, 0.25 * scene.diag()));
    auto large = rel_set(auto_annotate_scene(scene, kb, 0.50 * scene.diag()));
    CHECK(std::includes(mid.begin(), mid.end(), small.begin(), small.end()));
    CHECK(std::includes(large.begin(), large.end(), mid.begin(), mid.end()));
  }
}

TEST_CASE("fraction one annotates every scene") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  GenConfig cfg;
  cfg.num_scenes = 12;
  cfg.seed = 4;
  Dataset gen = gen_dataset(cfg);
  AutoResult res = auto_annotate_dataset(gen, kb, {0.25, 1.0}, 9);
  CHECK(res.selected_ids.size() == 12);
}

TEST_CASE("same seed selects the same subset") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  GenConfig cfg;
  cfg.num_scenes = 40;
  cfg.seed = 6;
  Dataset gen = gen_dataset(cfg);
  AutoResult a = auto_annotate_dataset(gen, kb, {0.25, 0.3}, 123);
  AutoResult b = auto_annotate_dataset(gen, kb, {0.25, 0.3}, 123);
  CHECK(a.selected_ids == b.selected_ids);
  CHECK(a.dataset == b.dataset);
  CHECK(a.selected_ids.size() == 12);  // ceil(0.3 * 40)
}

TEST_CASE("AUTO labels equal the generator ground truth") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  GenConfig cfg;
  cfg.num_scenes = 50;
  cfg.seed = 21;
  Dataset gen = gen_dataset(cfg);
  for (const auto& scene : gen.scenes) {
    auto rels = auto_annotate_scene(scene, kb, 0.25 * scene.diag());
    CHECK(rel_set(rels) == ground_truth_rels(scene));
  }
}

TEST_CASE("config ranges are validated") {
  Dataset d = default_header();
  KnowledgeBase kb = default_kb(d);
  Dataset empty = default_header();
  CHECK_THROWS_AS(auto_annotate_dataset(empty, kb, {0.0, 1.0}, 0), ValidationError);
  CHECK_THROWS_AS(auto_annotate_dataset(empty, kb, {0.25, 0.0}, 0), ValidationError);
  CHECK_THROWS_AS(auto_annotate_dataset(empty, kb, {0.25, 1.5}, 0), ValidationError);
}

}  // TEST_SUITE
