#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylorank/tree.hpp"

namespace phylorank {

enum class TraitState : int { alpha = 0, beta = 1 };

inline const char* to_cstring(TraitState s) {
  return s == TraitState::alpha ? "alpha" : "beta";
}

class StatesError : public std::runtime_error {
 public:
  explicit StatesError(const std::string& msg) : std::runtime_error("states: " + msg) {}
};

// Binary character on the leaves, indexed by vertex id.
struct LeafStates {
  std::vector<std::optional<TraitState>> by_vertex;

  bool complete(const PhyloTree& t) const {
    for (VertexId v : t.leaves())
      if (!by_vertex[v]) return false;
    return true;
  }

  TraitState at(VertexId v) const {
    if (!by_vertex[v]) throw StatesError("vertex has no state");
    return *by_vertex[v];
  }
};

// Two-column TSV: <leaf_label> \t <alpha|beta>, one leaf per line.
inline LeafStates parse_states_tsv(const PhyloTree& t, const std::string& text) {
  LeafStates states;
  states.by_vertex.assign(t.vertex_count(), std::nullopt);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw StatesError("line " + std::to_string(lineno) + ": expected <label>\\t<state>");
    const std::string label = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    VertexId leaf = t.find_leaf(label);
    if (leaf == kNoVertex)
      throw StatesError("line " + std::to_string(lineno) + ": unknown leaf '" + label + "'");
    if (states.by_vertex[leaf])
      throw StatesError("line " + std::to_string(lineno) + ": duplicate entry for '" + label + "'");
    if (value == "alpha") states.by_vertex[leaf] = TraitState::alpha;
    else if (value == "beta") states.by_vertex[leaf] = TraitState::beta;
    else
      throw StatesError("line " + std::to_string(lineno) + ": state must be alpha or beta");
  }
  return states;
}

inline std::string write_states_tsv(const PhyloTree& t, const LeafStates& states) {
  std::string out;
  for (VertexId v : t.leaves()) {
    out += t.label(v);
    out += '\t';
    out += to_cstring(states.at(v));
    out += '\n';
  }
  return out;
}

}  // namespace phylorank
