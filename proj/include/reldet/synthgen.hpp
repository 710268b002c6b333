#pragma once

#include <cstdint>
#include <string>

#include "reldet/dataset.hpp"
#include "reldet/kb.hpp"
#include "reldet/rng.hpp"

namespace reldet {

struct SizeRange {
  double w_min = 0.0, w_max = 0.0, h_min = 0.0, h_max = 0.0;
};

// Synthetic living-room scene generator configuration. The placement zones
// keep every related pair well inside tau = tau_frac * diagonal and every
// unrelated pair matching a KB tuple pattern beyond clear_factor * tau, so
// annotation and inference margins hold by construction.
struct GenConfig {
  int num_scenes = 200;
  std::uint64_t seed = 0;
  // wide aspect: vertical relation offsets stay large against the image
  // height while the horizontal extent keeps unrelated groups far apart
  double width = 2560.0;
  double height = 720.0;

  SizeRange sofa{240, 320, 100, 140};
  SizeRange chair{80, 120, 90, 130};
  SizeRange table{120, 170, 60, 90};
  SizeRange lamp{32, 52, 60, 95};
  SizeRange rug{260, 420, 130, 210};

  // relation geometry, pixels between subject and object centers; the
  // vertical gaps span close to half the image height, and the generator
  // shifts the seat band per archetype so the pair stays in frame
  double front_gap_min = 288.0, front_gap_max = 374.0;   // table below seat
  double side_gap_min = 220.0, side_gap_max = 300.0;     // table left of seat, level with it
  double behind_gap_min = 288.0, behind_gap_max = 374.0; // table above seat
  double top_sink_min = -2.0, top_sink_max = 8.0;        // lamp bottom into table top

  // noise; labels are never perturbed
  double jitter_std = 2.0;        // box jitter, clipped at 2 sigma
  double prob_temperature = 0.15; // coarse_probs softening

  double score_min = 0.7, score_max = 1.0;

  double tau_frac = 0.25;     // separation reference
  double clear_factor = 1.15; // unrelated pattern pairs beyond clear_factor * tau

  // at most one free-standing single per scene; the remainder is none
  double p_lamp_on_table = 0.55;
  double p_group_rug = 0.25;
  double p_single_lamp = 0.3;
  double p_single_rug = 0.25;
  double p_single_chair = 0.2;

  // Throws ValidationError on out-of-range fields.
  void validate() const;

  // Reads a JSON object mirroring these fields; unknown keys are an error.
  static GenConfig from_json_file(const std::string& path);
};

// Class catalog shared by the generator and the default knowledge base:
// 5 coarse classes, 8 fine classes, 4 relations.
Dataset default_header();

// Knowledge-base text matching the generator's layout rules.
std::string default_kb_text();
KnowledgeBase default_kb(const Dataset& header);

// One scene with exact fine labels and relation tuples consistent with the
// default knowledge base. `variant` rotates through the furniture-group
// archetypes so any window of scenes carries a balanced relation mix.
Scene gen_scene(const GenConfig& cfg, Rng& rng, const std::string& image_id, int variant);

// num_scenes scenes from a seeded counter-based stream.
Dataset gen_dataset(const GenConfig& cfg);

}  // namespace reldet
