#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reldet/geometry.hpp"

namespace reldet {

// Ground-truth relationship attached to a detection: this detection is the
// subject, `target` indexes the object detection in the same scene, and
// `relation` indexes the dataset relation list (never the no-relation label).
struct RelLabel {
  int target = 0;
  int relation = 0;

  friend bool operator==(const RelLabel&, const RelLabel&) = default;
};

// How an inferred fine label was obtained: via a knowledge-base match
// supported by neighbor `neighbor` with relation `relation` at probability
// `prob`, or via the per-coarse default fallback.
struct Provenance {
  bool is_default = true;
  int neighbor = -1;
  int relation = -1;
  double prob = 0.0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// One detected object: box, detector score, coarse-class probability vector,
// plus optional ground-truth or predicted labels.
struct Detection {
  Box box;
  double score = 0.0;
  std::vector<double> coarse_probs;
  std::optional<int> fine_label;
  std::vector<RelLabel> rels;
  std::optional<Provenance> provenance;

  // Index of the most probable coarse class.
  int coarse_argmax() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct Scene {
  std::string image_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<Detection> detections;

  double diag() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Class catalog plus scenes. `relations` holds the L real relation names;
// the reserved no-relation label is index L and has no name.
struct Dataset {
  std::vector<std::string> coarse_classes;
  std::vector<std::string> fine_classes;
  std::vector<std::string> relations;
  std::vector<int> coarse_of_fine;  // fine index -> coarse index
  std::vector<Scene> scenes;

  int num_coarse() const { return static_cast<int>(coarse_classes.size()); }
  int num_fine() const { return static_cast<int>(fine_classes.size()); }
  int num_relations() const { return static_cast<int>(relations.size()); }
  // Index of the reserved no-relation label.
  int no_relation() const { return num_relations(); }

  // Lookups by name; -1 when absent.
  int coarse_index(const std::string& name) const;
  int fine_index(const std::string& name) const;
  int relation_index(const std::string& name) const;

  // True when the two datasets share the same class catalog.
  bool same_header(const Dataset& other) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Reads the JSONL dataset format: one header line followed by one line per
// scene. Boxes are clamped to the image extent; probability vectors are
// renormalized when their sum is within 1e-3 of 1 and rejected otherwise.
// Throws ValidationError naming the offending line.
Dataset parse_dataset(std::istream& in);

// Writes the JSONL dataset format with reals at 6 decimal digits and keys in
// the documented order. Probability vectors are emitted summing to exactly
// 1.000000 in 6-digit space so that written files re-validate unchanged.
void write_dataset(const Dataset& d, std::ostream& out);

// File wrappers; throw IoError when the path cannot be opened.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

}  // namespace reldet
