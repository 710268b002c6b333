#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "reldet/dataset.hpp"

namespace reldet {

// One knowledge-base rule: a subject of coarse class `subj_coarse` is of fine
// class `fine` when relation `relation` holds toward an object of coarse
// class `obj_coarse`. The fine class always refines its own coarse class.
struct KbTuple {
  int fine = 0;
  int subj_coarse = 0;
  int obj_coarse = 0;
  int relation = 0;

  friend auto operator<=>(const KbTuple&, const KbTuple&) = default;
};

// A neighbor observation fed to a query: the neighbor's coarse class, the
// relation from the subject toward it (may be the no-relation label), and the
// probability supporting that relation.
struct NeighborObs {
  int coarse = 0;
  int relation = 0;
  double support = 1.0;
};

struct KbQueryResult {
  int fine = 0;
  double support = 1.0;
  bool from_default = false;
  // Index into the neighbor list of the winning supporter; -1 for defaults.
  int winning_neighbor = -1;
};

class KnowledgeBase {
public:
  // Parses the line-oriented KB text against the dataset's class catalog.
  // Rule lines `<fine> := <coarse> <relation> <coarse>`, default lines
  // `default <coarse> := <fine>`, '#' comments and blank lines.
  static KnowledgeBase parse(std::istream& in, const Dataset& d);
  static KnowledgeBase load(const std::string& path, const Dataset& d);

  // Membership test for the tuple (fine, subj, obj, relation).
  bool contains(int fine, int subj_coarse, int obj_coarse, int relation) const;

  // Fine class for a subject of coarse class `subject_coarse` given its
  // neighborhood. Among fine classes licensed by at least one neighbor, picks
  // the one whose best supporting neighbor has maximal support; ties break to
  // the lexicographically smallest fine-class name. Neighbors carrying the
  // no-relation label never match. Falls back to the per-coarse default with
  // support 1 when nothing matches.
  KbQueryResult query(int subject_coarse, const std::vector<NeighborObs>& neighbors) const;

  const std::vector<KbTuple>& tuples() const { return tuples_; }
  int default_fine(int coarse) const { return defaults_[coarse]; }
  const std::vector<int>& defaults() const { return defaults_; }

private:
  std::vector<KbTuple> tuples_;        // sorted, unique
  std::vector<int> defaults_;          // coarse index -> fine index
  std::vector<std::string> fine_names_;  // for tie-breaking
  int no_relation_ = 0;
};

}  // namespace reldet
