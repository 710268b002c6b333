#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reldet/dataset.hpp"
#include "reldet/kb.hpp"

namespace reldet {

struct AutoConfig {
  double tau_frac = 0.25;   // tau as a fraction of the image diagonal, in (0, sqrt(2)]
  double fraction_x = 1.0;  // fraction of scenes whose fine labels may be used, in (0, 1]
};

struct AutoRel {
  int subject = 0;
  int target = 0;
  int relation = 0;

  friend auto operator<=>(const AutoRel&, const AutoRel&) = default;
};

// Derives relationship labels for one scene: for each KB tuple
// (c, c1, c2, r) and each ordered pair (i, j) with fine(i)=c, coarse(i)=c1,
// coarse(j)=c2 and center distance at most tau, emits (i, j, r). Duplicates
// collapse; a pair matching two tuples with different relations is an error
// (ambiguous supervision), as is a detection without a fine label.
std::vector<AutoRel> auto_annotate_scene(const Scene& scene, const KnowledgeBase& kb, double tau);

struct AutoResult {
  Dataset dataset;                         // input with rel_labels filled on the subset
  std::vector<std::string> selected_ids;   // image ids of the annotated scenes
  std::uint64_t seed = 0;
  double fraction = 1.0;
};

// Applies auto_annotate_scene to a deterministic, seeded sample of
// ceil(fraction_x * N) scenes with tau = tau_frac * scene diagonal. Scenes
// outside the sample carry empty rel_labels.
AutoResult auto_annotate_dataset(const Dataset& d, const KnowledgeBase& kb, const AutoConfig& cfg,
                                 std::uint64_t seed);

// Sidecar JSON recording the sampled subset: {"seed":..., "fraction":...,
// "selected":[...]}.
void save_selection(const AutoResult& r, const std::string& path);
std::vector<std::string> load_selection(const std::string& path);

}  // namespace reldet
