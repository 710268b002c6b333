#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "reldet/errors.hpp"
#include "reldet/relpredict.hpp"
#include "reldet/rng.hpp"

using namespace reldet;

namespace {

Scene two_box_scene(Box a, Box b, double w = 100, double h = 100) {
  Scene s;
  s.image_id = "t";
  s.width = w;
  s.height = h;
  for (const Box& box : {a, b}) {
    Detection det;
    det.box = box;
    det.score = 0.9;
    det.coarse_probs = {1, 0, 0, 0, 0};
    s.detections.push_back(det);
  }
  return s;
}

RelModel random_model(Rng& rng, int num_labels, int num_coarse) {
  std::vector<std::string> rels;
  for (int r = 0; r + 1 < num_labels; ++r) rels.push_back("rel" + std::to_string(r));
  RelModel m = RelModel::zeros(rels, num_coarse);
  for (auto& row : m.weights) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  return m;
}

PairFeatures random_features(Rng& rng, int dim) {
  PairFeatures f(dim);
  for (auto& v : f) v = rng.uniform(-1.0, 1.0);
  return f;
}

}  // namespace

TEST_SUITE("relpredict") {

TEST_CASE("pair features of identical boxes") {
  Box b{50, 50, 10, 10};
  Scene s = two_box_scene(b, b);
  PairFeatures f = pair_features(s, 0, 1, 0, 0, 5);
  REQUIRE(static_cast<int>(f.size()) == feature_dim(5));
  int k = 10;
  CHECK(f[k + 0] == 0.0);                        // dx
  CHECK(f[k + 1] == 0.0);                        // dy
  CHECK(f[k + 2] == 0.0);                        // log w ratio
  CHECK(f[k + 3] == 0.0);                        // log h ratio
  CHECK(f[k + 4] == doctest::Approx(1.0));       // iou
  CHECK(f[k + 5] == 0.0);                        // center distance
  CHECK(f[k + 9] == 1.0);                        // bias
}

TEST_CASE("swapping the pair negates deltas and swaps one-hot blocks") {
  Scene s = two_box_scene(Box{30, 40, 10, 20}, Box{60, 80, 20, 10});
  PairFeatures fwd = pair_features(s, 0, 1, 1, 3, 5);
  PairFeatures rev = pair_features(s, 1, 0, 3, 1, 5);
  int k = 10;
  CHECK(fwd[k + 0] == doctest::Approx(-rev[k + 0]));
  CHECK(fwd[k + 1] == doctest::Approx(-rev[k + 1]));
  CHECK(fwd[k + 2] == doctest::Approx(-rev[k + 2]));
  CHECK(fwd[k + 3] == doctest::Approx(-rev[k + 3]));
  CHECK(fwd[1] == 1.0);      // subject one-hot
  CHECK(fwd[5 + 3] == 1.0);  // object one-hot
  CHECK(rev[3] == 1.0);
  CHECK(rev[5 + 1] == 1.0);
}

TEST_CASE("lamp over table vertical delta") {
  // lamp at (50,20), table at (50,60) in a 100x100 scene: dy/H = +0.4
  Scene s = two_box_scene(Box{50, 20, 10, 10}, Box{50, 60, 40, 30});
  PairFeatures f = pair_features(s, 0, 1, 3, 2, 5);
  CHECK(f[10 + 1] == doctest::Approx(0.4));
}

TEST_CASE("one-hot blocks each sum to one and entries are finite") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    Scene s = two_box_scene(Box{rng.uniform(10, 90), rng.uniform(10, 90), rng.uniform(1, 30),
                                rng.uniform(1, 30)},
                            Box{rng.uniform(10, 90), rng.uniform(10, 90), rng.uniform(1, 30),
                                rng.uniform(1, 30)});
    int ci = rng.uniform_int(0, 4);
    int cj = rng.uniform_int(0, 4);
    PairFeatures f = pair_features(s, 0, 1, ci, cj, 5);
    double subj = 0, obj = 0;
    for (int k = 0; k < 5; ++k) subj += f[k];
    for (int k = 5; k < 10; ++k) obj += f[k];
    CHECK(subj == 1.0);
    CHECK(obj == 1.0);
    for (double v : f) CHECK(std::isfinite(v));
  }
}

TEST_CASE("zero weights give the uniform distribution") {
  RelModel m = RelModel::zeros({"a", "b", "c"}, 5);
  PairFeatures f(feature_dim(5), 0.5);
  auto p = predict_pair(m, f);
  REQUIRE(p.size() == 4);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax is invariant to a constant shift of every row") {
  Rng rng(17);
  RelModel m = random_model(rng, 5, 3);
  PairFeatures f = random_features(rng, feature_dim(3));
  auto before = predict_pair(m, f);
  for (auto& row : m.weights) {
    for (auto& v : row) v += 3.7;
  }
  auto after = predict_pair(m, f);
  for (std::size_t k = 0; k < before.size(); ++k) {
    CHECK(before[k] == doctest::Approx(after[k]).epsilon(1e-9));
  }
}

TEST_CASE("predictions are distributions over 1000 random draws") {
  Rng rng(23);
  for (int t = 0; t < 1000; ++t) {
    int labels = rng.uniform_int(2, 6);
    int coarse = rng.uniform_int(1, 5);
    RelModel m = random_model(rng, labels, coarse);
    PairFeatures f = random_features(rng, feature_dim(coarse));
    auto p = predict_pair(m, f);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("feature length mismatch is rejected") {
  RelModel m = RelModel::zeros({"a"}, 5);
  PairFeatures f(3, 0.0);
  CHECK_THROWS_AS(predict_pair(m, f), ValidationError);
}

TEST_CASE("predict_scene matches predict_pair and ignores other pairs") {
  Rng rng(31);
  Scene s = two_box_scene(Box{30, 40, 10, 20}, Box{60, 80, 20, 10});
  Detection third;
  third.box = Box{80, 20, 12, 12};
  third.score = 0.8;
  third.coarse_probs = {0, 0, 0, 1, 0};
  s.detections.push_back(third);

  RelModel m = random_model(rng, 5, 5);
  auto lone = predict_scene(m, s, {{0, 1}});
  auto crowded = predict_scene(m, s, {{0, 1}, {1, 2}, {2, 0}});
  CHECK(lone.at({0, 1}) == crowded.at({0, 1}));

  PairFeatures f = pair_features(s, 0, 1, s.detections[0].coarse_argmax(),
                                 s.detections[1].coarse_argmax(), 5);
  CHECK(lone.at({0, 1}) == predict_pair(m, f));

  CHECK(predict_scene(m, s, {}).empty());
}

TEST_CASE("zero weights, l2 zero: loss is ln(L+1)") {
  RelModel m = RelModel::zeros({"a", "b"}, 2);
  std::vector<TrainExample> batch;
  Rng rng(41);
  for (int i = 0; i < 8; ++i) {
    batch.push_back({random_features(rng, feature_dim(2)), rng.uniform_int(0, 2)});
  }
  auto [loss, grad] = loss_and_grad(m, batch, 0.0);
  CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("duplicating the batch leaves loss and gradient unchanged") {
  Rng rng(43);
  RelModel m = random_model(rng, 4, 3);
  std::vector<TrainExample> batch;
  for (int i = 0; i < 5; ++i) {
    batch.push_back({random_features(rng, feature_dim(3)), rng.uniform_int(0, 3)});
  }
  auto [loss1, grad1] = loss_and_grad(m, batch, 0.01);
  std::vector<TrainExample> doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  auto [loss2, grad2] = loss_and_grad(m, doubled, 0.01);
  CHECK(loss1 == doctest::Approx(loss2).epsilon(1e-12));
  for (std::size_t r = 0; r < grad1.size(); ++r) {
    for (std::size_t k = 0; k < grad1[r].size(); ++k) {
      CHECK(grad1[r][k] == doctest::Approx(grad2[r][k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(47);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    int labels = rng.uniform_int(2, 5);
    int coarse = rng.uniform_int(1, 4);
    RelModel m = random_model(rng, labels, coarse);
    double l2 = draw % 2 == 0 ? 0.0 : 0.01;
    std::vector<TrainExample> batch;
    for (int i = 0; i < 8; ++i) {
      batch.push_back({random_features(rng, feature_dim(coarse)),
                       rng.uniform_int(0, labels - 1)});
    }
    auto [loss, grad] = loss_and_grad(m, batch, l2);

    const double step = 1e-5;
    for (int r = 0; r < m.num_labels(); ++r) {
      for (std::size_t k = 0; k < m.weights[r].size(); ++k) {
        double saved = m.weights[r][k];
        m.weights[r][k] = saved + step;
        double up = loss_and_grad(m, batch, l2).first;
        m.weights[r][k] = saved - step;
        double down = loss_and_grad(m, batch, l2).first;
        m.weights[r][k] = saved;
        double numeric = (up - down) / (2 * step);
        double rel = std::abs(grad[r][k] - numeric) /
                     std::max({std::abs(grad[r][k]), std::abs(numeric), 1e-8});
        worst = std::max(worst, rel);
      }
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("zero iterations returns the zero model") {
  std::vector<TrainExample> batch = {{PairFeatures(feature_dim(2), 0.5), 0}};
  RelModel m = train(batch, {"a"}, 2, {0, 0.5, 0.0, 0});
  for (const auto& row : m.weights) {
    for (double v : row) CHECK(v == 0.0);
  }
}

TEST_CASE("training twice gives identical weights") {
  Rng rng(53);
  std::vector<TrainExample> batch;
  for (int i = 0; i < 20; ++i) {
    batch.push_back({random_features(rng, feature_dim(3)), rng.uniform_int(0, 2)});
  }
  TrainConfig cfg{50, 0.3, 1e-4, 7};
  RelModel a = train(batch, {"x", "y"}, 3, cfg);
  RelModel b = train(batch, {"x", "y"}, 3, cfg);
  CHECK(a.weights == b.weights);
}

TEST_CASE("separable two-relation toy set trains to accuracy one") {
  // on-top-of iff dy/H < -0.2, as a feature-level construction
  Rng rng(59);
  std::vector<TrainExample> batch;
  for (int i = 0; i < 60; ++i) {
    bool on_top = i % 2 == 0;
    double dy = on_top ? rng.uniform(-0.6, -0.25) : rng.uniform(-0.15, 0.5);
    PairFeatures f(feature_dim(2), 0.0);
    f[0] = 1.0;
    f[2 + 1] = 1.0;
    f[4 + 1] = dy;
    f[4 + 9] = 1.0;
    batch.push_back({f, on_top ? 0 : 1});
  }
  std::vector<double> history;
  RelModel m = train(batch, {"on-top-of"}, 2, {500, 0.5, 0.0, 0}, &history);
  CHECK(training_accuracy(m, batch) == 1.0);
  REQUIRE(history.size() == 500);
}

TEST_CASE("loss is non-increasing at small learning rates") {
  Rng rng(61);
  std::vector<TrainExample> batch;
  for (int i = 0; i < 30; ++i) {
    PairFeatures f = random_features(rng, feature_dim(2));
    batch.push_back({f, rng.uniform_int(0, 2)});
  }
  std::vector<double> history;
  train(batch, {"a", "b"}, 2, {200, 0.1, 1e-4, 0}, &history);
  for (std::size_t t = 1; t < history.size(); ++t) {
    CHECK(history[t] <= history[t - 1] + 1e-9);
  }
}

TEST_CASE("empty training set and empty batch are rejected") {
  CHECK_THROWS_AS(train({}, {"a"}, 2, {}), ValidationError);
  RelModel m = RelModel::zeros({"a"}, 2);
  CHECK_THROWS_AS(loss_and_grad(m, {}, 0.0), ValidationError);
}

TEST_CASE("model save/load round-trips") {
  Rng rng(67);
  RelModel m = random_model(rng, 5, 5);
  std::string path = "test_model_roundtrip.json";
  m.save(path);
  RelModel back = RelModel::load(path);
  CHECK(back.relations == m.relations);
  CHECK(back.num_coarse == m.num_coarse);
  CHECK(back.weights == m.weights);
  std::remove(path.c_str());
}

TEST_CASE("make_training_set labels within-tau pairs") {
  Scene s = two_box_scene(Box{30, 30, 10, 10}, Box{40, 30, 10, 10});
  s.detections[0].fine_label = 5;
  s.detections[1].fine_label = 3;
  s.detections[0].rels.push_back({1, 0});
  Detection far;
  far.box = Box{95, 95, 6, 6};
  far.score = 0.8;
  far.coarse_probs = {0, 0, 0, 0, 1};
  far.fine_label = 7;
  s.detections.push_back(far);

  Dataset d;
  d.coarse_classes = {"chair", "sofacouch", "table", "lamp", "rug"};
  d.fine_classes = {"chair", "sofacouch", "coffee-table", "end-table",
                    "console-table", "table-lamp", "floor-lamp", "rug"};
  d.relations = {"on-top-of", "in-front-of", "next-to", "behind"};
  d.coarse_of_fine = {0, 1, 2, 2, 2, 3, 3, 4};
  d.scenes.push_back(s);

  // tau = 0.25 * sqrt(2) * 100 = 35.36: only the (0,1) pair is near
  auto examples = make_training_set(d, {"t"}, 0.25);
  REQUIRE(examples.size() == 2);  // (0,1) positive and (1,0) negative
  CHECK(examples[0].label == 0);
  CHECK(examples[1].label == d.no_relation());

  // unselected scenes contribute nothing
  CHECK(make_training_set(d, {}, 0.25).empty());
}

}  // TEST_SUITE
