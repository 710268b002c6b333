#include "reldet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "reldet/errors.hpp"

namespace reldet {

using json = nlohmann::json;

namespace {

// coarse indices in the default header
enum Coarse { kChair = 0, kSofa = 1, kTable = 2, kLamp = 3, kRug = 4 };
// fine indices
enum Fine {
  kFineChair = 0,
  kFineSofa = 1,
  kCoffeeTable = 2,
  kEndTable = 3,
  kConsoleTable = 4,
  kTableLamp = 5,
  kFloorLamp = 6,
  kFineRug = 7
};
// relation indices
enum Rel { kOnTopOf = 0, kInFrontOf = 1, kNextTo = 2, kBehind = 3 };

enum class Archetype {
  kSofaCoffee,
  kSofaEnd,
  kSofaConsole,
  kChairCoffee,
  kSofaAlone,
  kChairAlone
};

void check_range(const SizeRange& r, const std::string& name) {
  if (!(r.w_min > 0) || r.w_min > r.w_max || !(r.h_min > 0) || r.h_min > r.h_max)
    throw ValidationError("gen config: bad size range for " + name);
}

void check_gap(double lo, double hi, const std::string& name) {
  if (!(lo > 0) || lo > hi) throw ValidationError("gen config: bad " + name + " range");
}

void check_prob(double p, const std::string& name) {
  if (p < 0.0 || p > 1.0) throw ValidationError("gen config: " + name + " outside [0,1]");
}

std::vector<double> softened_one_hot(int true_class, int num_classes, double temperature) {
  std::vector<double> p(num_classes, 0.0);
  if (temperature < 1e-9 || 1.0 / temperature > 700.0) {
    p[true_class] = 1.0;
    return p;
  }
  double hot = std::exp(1.0 / temperature);
  double denom = hot + static_cast<double>(num_classes - 1);
  for (int k = 0; k < num_classes; ++k) p[k] = 1.0 / denom;
  p[true_class] = hot / denom;
  return p;
}

struct Placer {
  const GenConfig& cfg;
  Rng& rng;
  Scene& scene;

  Box sample_box(const SizeRange& r, double cx, double cy) {
    return Box{cx, cy, rng.uniform(r.w_min, r.w_max), rng.uniform(r.h_min, r.h_max)};
  }

  // Emits a detection with a jittered box, softened coarse probabilities and
  // the exact fine label. Returns its index in the scene.
  int emit(Box box, int coarse, int fine) {
    if (cfg.jitter_std > 0.0) {
      box.cx = rng.bounded_normal(box.cx, cfg.jitter_std, 2.0);
      box.cy = rng.bounded_normal(box.cy, cfg.jitter_std, 2.0);
      box.w = std::max(8.0, rng.bounded_normal(box.w, cfg.jitter_std, 2.0));
      box.h = std::max(8.0, rng.bounded_normal(box.h, cfg.jitter_std, 2.0));
    }
    // keep inside the image extent
    double x0 = std::clamp(box.x_min(), 0.0, scene.width);
    double x1 = std::clamp(box.x_max(), 0.0, scene.width);
    double y0 = std::clamp(box.y_min(), 0.0, scene.height);
    double y1 = std::clamp(box.y_max(), 0.0, scene.height);

    Detection det;
    det.box = Box::from_corners(x0, y0, x1, y1);
    det.score = rng.uniform(cfg.score_min, cfg.score_max);
    det.coarse_probs = softened_one_hot(coarse, 5, cfg.prob_temperature);
    det.fine_label = fine;
    scene.detections.push_back(std::move(det));
    return static_cast<int>(scene.detections.size()) - 1;
  }
};

}  // namespace

void GenConfig::validate() const {
  if (num_scenes < 0) throw ValidationError("gen config: num_scenes must be >= 0");
  if (!(width > 0) || !(height > 0)) throw ValidationError("gen config: image size must be positive");
  check_range(sofa, "sofa");
  check_range(chair, "chair");
  check_range(table, "table");
  check_range(lamp, "lamp");
  check_range(rug, "rug");
  check_gap(front_gap_min, front_gap_max, "front gap");
  check_gap(side_gap_min, side_gap_max, "side gap");
  check_gap(behind_gap_min, behind_gap_max, "behind gap");
  if (top_sink_min > top_sink_max) throw ValidationError("gen config: bad top sink range");
  if (jitter_std < 0) throw ValidationError("gen config: jitter_std must be >= 0");
  if (prob_temperature < 0) throw ValidationError("gen config: prob_temperature must be >= 0");
  if (score_min < 0 || score_max > 1 || score_min > score_max)
    throw ValidationError("gen config: score range must lie inside [0,1]");
  if (!(tau_frac > 0) || tau_frac > std::sqrt(2.0) + 1e-12)
    throw ValidationError("gen config: tau_frac must be in (0, sqrt(2)]");
  if (clear_factor < 1.0) throw ValidationError("gen config: clear_factor must be >= 1");
  check_prob(p_lamp_on_table, "p_lamp_on_table");
  check_prob(p_group_rug, "p_group_rug");
  check_prob(p_single_lamp, "p_single_lamp");
  check_prob(p_single_rug, "p_single_rug");
  check_prob(p_single_chair, "p_single_chair");
  if (p_single_lamp + p_single_rug + p_single_chair > 1.0 + 1e-12)
    throw ValidationError("gen config: single-object probabilities sum past 1");
}

Dataset default_header() {
  Dataset d;
  d.coarse_classes = {"chair", "sofacouch", "table", "lamp", "rug"};
  d.fine_classes = {"chair",      "sofacouch",  "coffee-table", "end-table",
                    "console-table", "table-lamp", "floor-lamp",   "rug"};
  d.relations = {"on-top-of", "in-front-of", "next-to", "behind"};
  d.coarse_of_fine = {kChair, kSofa, kTable, kTable, kTable, kLamp, kLamp, kRug};
  return d;
}

std::string default_kb_text() {
  return "# Relational knowledge base for synthetic living-room scenes.\n"
         "table-lamp := lamp on-top-of table\n"
         "coffee-table := table in-front-of sofacouch\n"
         "coffee-table := table in-front-of chair\n"
         "end-table := table next-to sofacouch\n"
         "console-table := table behind sofacouch\n"
         "\n"
         "default chair := chair\n"
         "default sofacouch := sofacouch\n"
         "default table := end-table\n"
         "default lamp := floor-lamp\n"
         "default rug := rug\n";
}

KnowledgeBase default_kb(const Dataset& header) {
  std::istringstream in(default_kb_text());
  return KnowledgeBase::parse(in, header);
}

Scene gen_scene(const GenConfig& cfg, Rng& rng, const std::string& image_id, int variant) {
  Scene scene;
  scene.image_id = image_id;
  scene.width = cfg.width;
  scene.height = cfg.height;
  Placer placer{cfg, rng, scene};

  const double W = cfg.width;
  const double H = cfg.height;

  // One furniture group on the left, free-standing singles on the right.
  // The zones keep unrelated tuple-pattern pairs beyond clear_factor * tau.
  // The wheel rotates by `variant`; every table relation appears twice per
  // turn, so the relation classes stay balanced in any window of scenes.
  static const Archetype archetype_wheel[] = {
      Archetype::kSofaCoffee,  Archetype::kSofaEnd,     Archetype::kSofaConsole,
      Archetype::kSofaAlone,   Archetype::kChairCoffee, Archetype::kSofaEnd,
      Archetype::kSofaConsole, Archetype::kChairAlone};
  const Archetype archetype = archetype_wheel[((variant % 8) + 8) % 8];

  // seat band per archetype: tables in front go below the seat, consoles
  // above, so the wide vertical gaps still land inside the image
  double band_lo = 0.30, band_hi = 0.70;
  switch (archetype) {
    case Archetype::kSofaCoffee:
    case Archetype::kChairCoffee: band_lo = 0.22; band_hi = 0.34; break;
    case Archetype::kSofaEnd:     band_lo = 0.45; band_hi = 0.55; break;
    case Archetype::kSofaConsole: band_lo = 0.66; band_hi = 0.78; break;
    case Archetype::kSofaAlone:
    case Archetype::kChairAlone:  break;
  }
  const double seat_cx = rng.uniform(0.18 * W, 0.22 * W);
  const double seat_cy = rng.uniform(band_lo * H, band_hi * H);

  const bool seat_is_chair =
      archetype == Archetype::kChairCoffee || archetype == Archetype::kChairAlone;
  Box seat_box = placer.sample_box(seat_is_chair ? cfg.chair : cfg.sofa, seat_cx, seat_cy);
  const int seat_idx =
      placer.emit(seat_box, seat_is_chair ? kChair : kSofa, seat_is_chair ? kFineChair : kFineSofa);

  int table_idx = -1;
  int table_fine = -1;
  int table_rel = -1;
  Box table_box;
  switch (archetype) {
    case Archetype::kSofaCoffee:
    case Archetype::kChairCoffee:
      table_fine = kCoffeeTable;
      table_rel = kInFrontOf;
      table_box = placer.sample_box(cfg.table, seat_cx + rng.uniform(-40, 40),
                                    seat_cy + rng.uniform(cfg.front_gap_min, cfg.front_gap_max));
      break;
    case Archetype::kSofaEnd:
      table_fine = kEndTable;
      table_rel = kNextTo;
      table_box = placer.sample_box(cfg.table, seat_cx - rng.uniform(cfg.side_gap_min, cfg.side_gap_max),
                                    seat_cy + rng.uniform(-12, 12));
      break;
    case Archetype::kSofaConsole:
      table_fine = kConsoleTable;
      table_rel = kBehind;
      table_box = placer.sample_box(cfg.table, seat_cx + rng.uniform(-40, 40),
                                    seat_cy - rng.uniform(cfg.behind_gap_min, cfg.behind_gap_max));
      break;
    case Archetype::kSofaAlone:
    case Archetype::kChairAlone:
      break;
  }
  if (table_fine >= 0) {
    table_idx = placer.emit(table_box, kTable, table_fine);
    scene.detections[table_idx].rels.push_back({seat_idx, table_rel});

    if (rng.bernoulli(cfg.p_lamp_on_table)) {
      double lw = rng.uniform(cfg.lamp.w_min, cfg.lamp.w_max);
      double lh = rng.uniform(cfg.lamp.h_min, cfg.lamp.h_max);
      // only when the lamp fits above the table inside the image
      if (table_box.y_min() > lh + 12.0) {
        double max_off = std::max(0.0, (table_box.w - lw) / 2.0 - 5.0);
        double lcx = table_box.cx + rng.uniform(-max_off, max_off);
        double sink = rng.uniform(cfg.top_sink_min, cfg.top_sink_max);
        double lcy = table_box.y_min() + sink - lh / 2.0;
        int lamp_idx = placer.emit(Box{lcx, lcy, lw, lh}, kLamp, kTableLamp);
        scene.detections[lamp_idx].rels.push_back({table_idx, kOnTopOf});
      }
    }
  }

  if (rng.bernoulli(cfg.p_group_rug)) {
    // under the seat when it fits, above it otherwise
    double rug_dy = rng.uniform(30, 60);
    if (seat_cy + rug_dy + cfg.rug.h_max / 2 + 6 > H) rug_dy = -rug_dy;
    placer.emit(placer.sample_box(cfg.rug, seat_cx + rng.uniform(-40, 40), seat_cy + rug_dy),
                kRug, kFineRug);
  }

  auto single_pos = [&](double half_w, double half_h) {
    double cx = rng.uniform(0.55 * W + half_w, 0.75 * W);
    double cy = rng.uniform(std::max(0.18 * H, half_h + 4.0), 0.82 * H);
    return std::pair<double, double>{cx, cy};
  };
  double draw = rng.next_double();
  if (draw < cfg.p_single_lamp) {
    auto [cx, cy] = single_pos(cfg.lamp.w_max / 2, cfg.lamp.h_max / 2);
    placer.emit(placer.sample_box(cfg.lamp, cx, cy), kLamp, kFloorLamp);
  } else if (draw < cfg.p_single_lamp + cfg.p_single_rug) {
    auto [cx, cy] = single_pos(cfg.rug.w_max / 2, cfg.rug.h_max / 2);
    placer.emit(placer.sample_box(cfg.rug, cx, cy), kRug, kFineRug);
  } else if (draw < cfg.p_single_lamp + cfg.p_single_rug + cfg.p_single_chair) {
    auto [cx, cy] = single_pos(cfg.chair.w_max / 2, cfg.chair.h_max / 2);
    placer.emit(placer.sample_box(cfg.chair, cx, cy), kChair, kFineChair);
  }
  return scene;
}

Dataset gen_dataset(const GenConfig& cfg) {
  cfg.validate();
  Dataset d = default_header();
  d.scenes.reserve(cfg.num_scenes);
  char id[32];
  for (int i = 0; i < cfg.num_scenes; ++i) {
    Rng rng = Rng::for_index(cfg.seed, static_cast<std::uint64_t>(i));
    std::snprintf(id, sizeof(id), "scene-%06d", i);
    d.scenes.push_back(gen_scene(cfg, rng, id, i));
  }
  return d;
}

namespace {

void read_size(const json& j, const std::string& key, SizeRange& r) {
  const auto& js = j.at(key);
  r.w_min = js.at("w")[0].get<double>();
  r.w_max = js.at("w")[1].get<double>();
  r.h_min = js.at("h")[0].get<double>();
  r.h_max = js.at("h")[1].get<double>();
}

}  // namespace

GenConfig GenConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gen config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed gen config: ") + e.what());
  }

  GenConfig cfg;
  static const std::vector<std::string> known = {
      "num_scenes",     "seed",          "width",          "height",        "sofa",
      "chair",          "table",         "lamp",           "rug",           "front_gap",
      "side_gap",       "behind_gap",    "top_sink",       "jitter_std",    "prob_temperature",
      "score_min",      "score_max",     "tau_frac",       "clear_factor",  "p_lamp_on_table",
      "p_group_rug",    "p_single_lamp", "p_single_rug",   "p_single_chair"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError("gen config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("num_scenes")) cfg.num_scenes = j["num_scenes"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("width")) cfg.width = j["width"].get<double>();
    if (j.contains("height")) cfg.height = j["height"].get<double>();
    if (j.contains("sofa")) read_size(j, "sofa", cfg.sofa);
    if (j.contains("chair")) read_size(j, "chair", cfg.chair);
    if (j.contains("table")) read_size(j, "table", cfg.table);
    if (j.contains("lamp")) read_size(j, "lamp", cfg.lamp);
    if (j.contains("rug")) read_size(j, "rug", cfg.rug);
    if (j.contains("front_gap")) {
      cfg.front_gap_min = j["front_gap"][0].get<double>();
      cfg.front_gap_max = j["front_gap"][1].get<double>();
    }
    if (j.contains("side_gap")) {
      cfg.side_gap_min = j["side_gap"][0].get<double>();
      cfg.side_gap_max = j["side_gap"][1].get<double>();
    }
    if (j.contains("behind_gap")) {
      cfg.behind_gap_min = j["behind_gap"][0].get<double>();
      cfg.behind_gap_max = j["behind_gap"][1].get<double>();
    }
    if (j.contains("top_sink")) {
      cfg.top_sink_min = j["top_sink"][0].get<double>();
      cfg.top_sink_max = j["top_sink"][1].get<double>();
    }
    if (j.contains("jitter_std")) cfg.jitter_std = j["jitter_std"].get<double>();
    if (j.contains("prob_temperature")) cfg.prob_temperature = j["prob_temperature"].get<double>();
    if (j.contains("score_min")) cfg.score_min = j["score_min"].get<double>();
    if (j.contains("score_max")) cfg.score_max = j["score_max"].get<double>();
    if (j.contains("tau_frac")) cfg.tau_frac = j["tau_frac"].get<double>();
    if (j.contains("clear_factor")) cfg.clear_factor = j["clear_factor"].get<double>();
    if (j.contains("p_lamp_on_table")) cfg.p_lamp_on_table = j["p_lamp_on_table"].get<double>();
    if (j.contains("p_group_rug")) cfg.p_group_rug = j["p_group_rug"].get<double>();
    if (j.contains("p_single_lamp")) cfg.p_single_lamp = j["p_single_lamp"].get<double>();
    if (j.contains("p_single_rug")) cfg.p_single_rug = j["p_single_rug"].get<double>();
    if (j.contains("p_single_chair")) cfg.p_single_chair = j["p_single_chair"].get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad gen config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace reldet
