#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

#include "phylorank/tree.hpp"

namespace phylorank {

class NewickError : public std::runtime_error {
 public:
  NewickError(std::size_t offset, const std::string& msg)
      : std::runtime_error("newick: " + msg + " (at byte " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset;
};

namespace detail {

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : text_(text) {}

  PhyloTree parse() {
    skip_space();
    VertexId root = builder_.add_root();
    node(root);
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ';') fail("expected ';'");
    ++pos_;
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    try {
      return builder_.finish();
    } catch (const TreeError& e) {
      throw NewickError(pos_, e.what());
    }
  }

 private:
  void node(VertexId v) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      node(builder_.add_child(v));
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) fail("unbalanced '('");
        if (text_[pos_] == ',') {
          ++pos_;
          node(builder_.add_child(v));
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
      std::string label = read_label();
      if (!label.empty()) builder_.set_label(v, label);
    } else {
      std::string label = read_label();
      if (label.empty()) fail("expected a leaf label");
      builder_.set_label(v, label);
    }
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      builder_.set_length(v, read_number());
    }
  }

  std::string read_label() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  double read_number() {
    skip_space();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("malformed branch length");
    if (value < 0.0) fail("negative branch length");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ',' || c == ':' || c == ';' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw NewickError(pos_, msg); }

  std::string_view text_;
  std::size_t pos_ = 0;
  TreeBuilder builder_;
};

inline std::string format_length(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace detail

inline PhyloTree parse_newick(std::string_view text) {
  return detail::NewickParser(text).parse();
}

struct NewickOptions {
  bool lengths = true;
  bool interior_labels = true;
};

// Canonical serialization: children ordered by the smallest leaf label in
// their clade, so isomorphic trees (labels included) print identically.
inline std::string write_newick(const PhyloTree& t, NewickOptions opts = {}) {
  struct Writer {
    const PhyloTree& t;
    NewickOptions opts;
    // returns the minimal leaf label in the clade
    std::string emit(VertexId v, std::string& out) const {
      if (t.is_leaf(v)) {
        out += t.label(v);
        if (opts.lengths && v != t.root() && t.has_length(v))
          out += ":" + detail::format_length(t.edge_length(v));
        return t.label(v);
      }
      std::vector<std::pair<std::string, std::string>> parts;  // (min label, text)
      for (VertexId c : t.children(v)) {
        std::string text;
        std::string min_label = emit(c, text);
        parts.emplace_back(std::move(min_label), std::move(text));
      }
      std::sort(parts.begin(), parts.end());
      out += "(";
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ",";
        out += parts[i].second;
      }
      out += ")";
      if (opts.interior_labels && !t.label(v).empty()) out += t.label(v);
      if (opts.lengths && v != t.root() && t.has_length(v))
        out += ":" + detail::format_length(t.edge_length(v));
      return parts.front().first;
    }
  };
  std::string out;
  Writer{t, opts}.emit(t.root(), out);
  out += ";";
  return out;
}

// Label-blind canonical form; equal strings <=> equal tree shapes.
inline std::string shape_key(const PhyloTree& t, VertexId v) {
  if (t.is_leaf(v)) return "L";
  std::vector<std::string> parts;
  for (VertexId c : t.children(v)) parts.push_back(shape_key(t, c));
  std::sort(parts.begin(), parts.end());
  std::string out = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  out += ")";
  return out;
}

inline std::string shape_key(const PhyloTree& t) { return shape_key(t, t.root()); }

// Key for labeled-tree identity (topology + labels, lengths ignored).
inline std::string topology_key(const PhyloTree& t) {
  return write_newick(t, {.lengths = false, .interior_labels = false});
}

}  // namespace phylorank
