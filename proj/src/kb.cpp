#include "reldet/kb.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "reldet/errors.hpp"

namespace reldet {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) tokens.push_back(tok);
  return tokens;
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw ValidationError("kb line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

KnowledgeBase KnowledgeBase::parse(std::istream& in, const Dataset& d) {
  KnowledgeBase kb;
  kb.fine_names_ = d.fine_classes;
  kb.no_relation_ = d.no_relation();
  kb.defaults_.assign(d.num_coarse(), -1);

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;

    if (tokens[0] == "default") {
      if (tokens.size() != 4 || tokens[2] != ":=")
        fail(line_no, "expected 'default <coarse> := <fine>'");
      int coarse = d.coarse_index(tokens[1]);
      if (coarse < 0) fail(line_no, "unknown coarse class: '" + tokens[1] + "'");
      int fine = d.fine_index(tokens[3]);
      if (fine < 0) fail(line_no, "unknown fine class: '" + tokens[3] + "'");
      if (d.coarse_of_fine[fine] != coarse)
        fail(line_no, "default '" + tokens[3] + "' does not refine coarse class '" + tokens[1] + "'");
      if (kb.defaults_[coarse] >= 0) fail(line_no, "duplicate default for coarse class '" + tokens[1] + "'");
      kb.defaults_[coarse] = fine;
      continue;
    }

    if (tokens.size() != 5 || tokens[1] != ":=")
      fail(line_no, "expected '<fine> := <coarse> <relation> <coarse>'");
    KbTuple t;
    t.fine = d.fine_index(tokens[0]);
    if (t.fine < 0) fail(line_no, "unknown fine class: '" + tokens[0] + "'");
    t.subj_coarse = d.coarse_index(tokens[2]);
    if (t.subj_coarse < 0) fail(line_no, "unknown coarse class: '" + tokens[2] + "'");
    t.relation = d.relation_index(tokens[3]);
    if (t.relation < 0) fail(line_no, "unknown relation: '" + tokens[3] + "'");
    t.obj_coarse = d.coarse_index(tokens[4]);
    if (t.obj_coarse < 0) fail(line_no, "unknown coarse class: '" + tokens[4] + "'");
    if (d.coarse_of_fine[t.fine] != t.subj_coarse)
      fail(line_no, "fine class '" + tokens[0] + "' does not refine coarse class '" + tokens[2] + "'");
    kb.tuples_.push_back(t);
  }

  std::sort(kb.tuples_.begin(), kb.tuples_.end());
  kb.tuples_.erase(std::unique(kb.tuples_.begin(), kb.tuples_.end()), kb.tuples_.end());

  for (int c = 0; c < d.num_coarse(); ++c) {
    if (kb.defaults_[c] < 0)
      throw ValidationError("kb: missing default for coarse class '" + d.coarse_classes[c] + "'");
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load(const std::string& path, const Dataset& d) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kb file: " + path);
  return parse(in, d);
}

bool KnowledgeBase::contains(int fine, int subj_coarse, int obj_coarse, int relation) const {
  return std::binary_search(tuples_.begin(), tuples_.end(),
                            KbTuple{fine, subj_coarse, obj_coarse, relation});
}

KbQueryResult KnowledgeBase::query(int subject_coarse,
                                   const std::vector<NeighborObs>& neighbors) const {
  KbQueryResult best;
  bool found = false;
  for (const auto& t : tuples_) {
    if (t.subj_coarse != subject_coarse) continue;
    for (int n = 0; n < static_cast<int>(neighbors.size()); ++n) {
      const NeighborObs& nb = neighbors[n];
      if (nb.relation == no_relation_) continue;
      if (nb.coarse != t.obj_coarse || nb.relation != t.relation) continue;
      bool better = false;
      if (!found) {
        better = true;
      } else if (nb.support > best.support) {
        better = true;
      } else if (nb.support == best.support) {
        if (fine_names_[t.fine] < fine_names_[best.fine]) {
          better = true;
        } else if (t.fine == best.fine && n < best.winning_neighbor) {
          better = true;
        }
      }
      if (better) {
        best = KbQueryResult{t.fine, nb.support, false, n};
        found = true;
      }
    }
  }
  if (!found) return KbQueryResult{defaults_[subject_coarse], 1.0, true, -1};
  return best;
}

}  // namespace reldet
