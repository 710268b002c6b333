#include "reldet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "reldet/errors.hpp"

namespace reldet {

using json = nlohmann::json;

int Detection::coarse_argmax() const {
  int best = 0;
  for (int k = 1; k < static_cast<int>(coarse_probs.size()); ++k) {
    if (coarse_probs[k] > coarse_probs[best]) best = k;
  }
  return best;
}

double Scene::diag() const { return std::hypot(width, height); }

namespace {

int index_of(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw ValidationError("line " + std::to_string(line_no) + ": " + msg);
}

void check_names(const std::vector<std::string>& names, const std::string& what, int line_no) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) fail(line_no, "empty " + what + " name");
    if (n.find_first_of(" \t\n\r") != std::string::npos)
      fail(line_no, what + " name contains whitespace: '" + n + "'");
    if (!seen.insert(n).second) fail(line_no, "duplicate " + what + " name: '" + n + "'");
  }
}

// Clamp a box to [0,W]x[0,H] in corner space. Detectors commonly emit boxes
// hanging slightly off the image; a box entirely outside is rejected.
Box clamp_box(const Box& b, double width, double height, int line_no) {
  if (!(b.w > 0.0) || !(b.h > 0.0)) fail(line_no, "box has non-positive width or height");
  double x0 = std::clamp(b.x_min(), 0.0, width);
  double x1 = std::clamp(b.x_max(), 0.0, width);
  double y0 = std::clamp(b.y_min(), 0.0, height);
  double y1 = std::clamp(b.y_max(), 0.0, height);
  if (!(x1 > x0) || !(y1 > y0)) fail(line_no, "box lies entirely outside the image extent");
  return Box::from_corners(x0, y0, x1, y1);
}

Detection parse_detection(const json& jd, const Dataset& d, const Scene& scene, int line_no) {
  Detection det;
  if (!jd.contains("box") || !jd["box"].is_array() || jd["box"].size() != 4)
    fail(line_no, "detection 'box' must be [cx,cy,w,h]");
  det.box = Box{jd["box"][0].get<double>(), jd["box"][1].get<double>(),
                jd["box"][2].get<double>(), jd["box"][3].get<double>()};
  det.box = clamp_box(det.box, scene.width, scene.height, line_no);

  det.score = jd.at("score").get<double>();
  if (det.score < 0.0 || det.score > 1.0) fail(line_no, "score outside [0,1]");

  const auto& jp = jd.at("coarse_probs");
  if (!jp.is_array() || static_cast<int>(jp.size()) != d.num_coarse())
    fail(line_no, "coarse_probs length does not match the coarse class list");
  double sum = 0.0;
  for (const auto& v : jp) {
    double p = v.get<double>();
    if (p < 0.0) fail(line_no, "negative coarse probability");
    det.coarse_probs.push_back(p);
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-3)
    fail(line_no, "coarse_probs sum to " + std::to_string(sum) + ", expected 1 within 1e-3");
  for (auto& p : det.coarse_probs) p /= sum;

  if (jd.contains("fine_label") && !jd["fine_label"].is_null()) {
    const std::string name = jd["fine_label"].get<std::string>();
    int idx = d.fine_index(name);
    if (idx < 0) fail(line_no, "unknown fine class: '" + name + "'");
    det.fine_label = idx;
  }

  if (jd.contains("rels")) {
    for (const auto& jr : jd["rels"]) {
      if (!jr.is_array() || jr.size() != 2) fail(line_no, "rel entries must be [target, relation]");
      RelLabel rl;
      rl.target = jr[0].get<int>();
      const std::string rname = jr[1].get<std::string>();
      rl.relation = d.relation_index(rname);
      if (rl.relation < 0) fail(line_no, "unknown relation: '" + rname + "'");
      det.rels.push_back(rl);
    }
  }

  if (jd.contains("provenance")) {
    const auto& jp2 = jd["provenance"];
    Provenance prov;
    if (jp2.is_string() && jp2.get<std::string>() == "default") {
      prov.is_default = true;
    } else if (jp2.is_object()) {
      prov.is_default = false;
      prov.neighbor = jp2.at("neighbor").get<int>();
      const std::string rname = jp2.at("relation").get<std::string>();
      prov.relation = d.relation_index(rname);
      if (prov.relation < 0) fail(line_no, "unknown relation in provenance: '" + rname + "'");
      prov.prob = jp2.at("p").get<double>();
    } else {
      fail(line_no, "provenance must be \"default\" or an object");
    }
    det.provenance = prov;
  }
  return det;
}

// JSON string escaping for the hand-built writer.
std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string real6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Probability vector at 6 decimal digits, adjusted to sum to exactly
// 1.000000 so the written file re-validates and round-trips byte-identically.
std::string probs6(const std::vector<double>& probs) {
  std::vector<std::int64_t> micro(probs.size());
  std::int64_t total = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    micro[i] = std::llround(probs[i] * 1e6);
    total += micro[i];
    if (probs[i] > probs[largest]) largest = i;
  }
  micro[largest] += 1000000 - total;
  std::string out = "[";
  for (std::size_t i = 0; i < micro.size(); ++i) {
    if (i) out += ",";
    out += real6(static_cast<double>(micro[i]) * 1e-6);
  }
  out += "]";
  return out;
}

}  // namespace

int Dataset::coarse_index(const std::string& name) const { return index_of(coarse_classes, name); }
int Dataset::fine_index(const std::string& name) const { return index_of(fine_classes, name); }
int Dataset::relation_index(const std::string& name) const { return index_of(relations, name); }

bool Dataset::same_header(const Dataset& other) const {
  return coarse_classes == other.coarse_classes && fine_classes == other.fine_classes &&
         relations == other.relations && coarse_of_fine == other.coarse_of_fine;
}

Dataset parse_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw ValidationError("line 1: missing header line");
  ++line_no;
  json jh;
  try {
    jh = json::parse(line);
  } catch (const json::exception& e) {
    fail(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!jh.is_object() || jh.value("type", "") != "header")
    fail(line_no, "first line must be the header object");
  try {
    d.coarse_classes = jh.at("coarse_classes").get<std::vector<std::string>>();
    d.fine_classes = jh.at("fine_classes").get<std::vector<std::string>>();
    d.relations = jh.at("relations").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(line_no, std::string("bad header: ") + e.what());
  }
  check_names(d.coarse_classes, "coarse class", line_no);
  check_names(d.fine_classes, "fine class", line_no);
  check_names(d.relations, "relation", line_no);

  if (!jh.contains("coarse_of_fine") || !jh["coarse_of_fine"].is_object())
    fail(line_no, "header missing coarse_of_fine map");
  d.coarse_of_fine.assign(d.num_fine(), -1);
  for (const auto& [fine_name, coarse_name] : jh["coarse_of_fine"].items()) {
    int f = d.fine_index(fine_name);
    if (f < 0) fail(line_no, "coarse_of_fine names unknown fine class: '" + fine_name + "'");
    int c = d.coarse_index(coarse_name.get<std::string>());
    if (c < 0)
      fail(line_no, "coarse_of_fine names unknown coarse class: '" + coarse_name.get<std::string>() + "'");
    d.coarse_of_fine[f] = c;
  }
  for (int f = 0; f < d.num_fine(); ++f) {
    if (d.coarse_of_fine[f] < 0)
      fail(line_no, "coarse_of_fine missing entry for fine class '" + d.fine_classes[f] + "'");
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json js;
    try {
      js = json::parse(line);
    } catch (const json::exception& e) {
      fail(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (js.value("type", "") != "scene") fail(line_no, "expected a scene object");
    Scene scene;
    try {
      scene.image_id = js.at("image_id").get<std::string>();
      scene.width = js.at("width").get<double>();
      scene.height = js.at("height").get<double>();
    } catch (const json::exception& e) {
      fail(line_no, std::string("bad scene: ") + e.what());
    }
    if (!(scene.width > 0.0) || !(scene.height > 0.0))
      fail(line_no, "scene width and height must be positive");
    if (js.contains("detections")) {
      for (const auto& jd : js["detections"]) {
        scene.detections.push_back(parse_detection(jd, d, scene, line_no));
      }
    }
    const int n = static_cast<int>(scene.detections.size());
    for (int i = 0; i < n; ++i) {
      for (const auto& rl : scene.detections[i].rels) {
        if (rl.target < 0 || rl.target >= n)
          fail(line_no, "rel target " + std::to_string(rl.target) + " out of range");
        if (rl.target == i) fail(line_no, "rel target refers to the subject itself");
      }
    }
    d.scenes.push_back(std::move(scene));
  }
  return d;
}

void write_dataset(const Dataset& d, std::ostream& out) {
  std::string header = "{\"type\":\"header\",\"coarse_classes\":[";
  for (int i = 0; i < d.num_coarse(); ++i) {
    if (i) header += ",";
    header += "\"" + escape(d.coarse_classes[i]) + "\"";
  }
  header += "],\"fine_classes\":[";
  for (int i = 0; i < d.num_fine(); ++i) {
    if (i) header += ",";
    header += "\"" + escape(d.fine_classes[i]) + "\"";
  }
  header += "],\"relations\":[";
  for (int i = 0; i < d.num_relations(); ++i) {
    if (i) header += ",";
    header += "\"" + escape(d.relations[i]) + "\"";
  }
  header += "],\"coarse_of_fine\":{";
  for (int f = 0; f < d.num_fine(); ++f) {
    if (f) header += ",";
    header += "\"" + escape(d.fine_classes[f]) + "\":\"" +
              escape(d.coarse_classes[d.coarse_of_fine[f]]) + "\"";
  }
  header += "}}";
  out << header << "\n";

  for (const auto& scene : d.scenes) {
    std::string s = "{\"type\":\"scene\",\"image_id\":\"" + escape(scene.image_id) +
                    "\",\"width\":" + real6(scene.width) + ",\"height\":" + real6(scene.height) +
                    ",\"detections\":[";
    for (std::size_t k = 0; k < scene.detections.size(); ++k) {
      const Detection& det = scene.detections[k];
      if (k) s += ",";
      s += "{\"box\":[" + real6(det.box.cx) + "," + real6(det.box.cy) + "," + real6(det.box.w) +
           "," + real6(det.box.h) + "],\"score\":" + real6(det.score) + ",\"coarse_probs\":" +
           probs6(det.coarse_probs);
      if (det.fine_label) {
        s += ",\"fine_label\":\"" + escape(d.fine_classes[*det.fine_label]) + "\"";
      }
      if (!det.rels.empty()) {
        s += ",\"rels\":[";
        for (std::size_t r = 0; r < det.rels.size(); ++r) {
          if (r) s += ",";
          s += "[" + std::to_string(det.rels[r].target) + ",\"" +
               escape(d.relations[det.rels[r].relation]) + "\"]";
        }
        s += "]";
      }
      if (det.provenance) {
        if (det.provenance->is_default) {
          s += ",\"provenance\":\"default\"";
        } else {
          s += ",\"provenance\":{\"neighbor\":" + std::to_string(det.provenance->neighbor) +
               ",\"relation\":\"" + escape(d.relations[det.provenance->relation]) +
               "\",\"p\":" + real6(det.provenance->prob) + "}";
        }
      }
      s += "}";
    }
    s += "]}";
    out << s << "\n";
  }
  if (!out) throw IoError("failed writing dataset stream");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return parse_dataset(in);
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create dataset file: " + path);
  write_dataset(d, out);
}

}  // namespace reldet
