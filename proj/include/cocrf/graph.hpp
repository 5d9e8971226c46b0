#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cocrf/detail/text.hpp"
#include "cocrf/error.hpp"

namespace cocrf {

using Label = int;
using Labeling = std::vector<Label>;

/// Ground-truth value ignored by evaluation and co-occurrence counting.
inline constexpr Label kVoidLabel = 255;

/// Position of p relative to q on a directed edge (p, q).
enum class Relation : std::uint8_t { Above = 0, Below = 1, LeftOf = 2, RightOf = 3 };

inline constexpr int kNumRelations = 4;
inline constexpr std::array<Relation, kNumRelations> kAllRelations{
    Relation::Above, Relation::Below, Relation::LeftOf, Relation::RightOf};

constexpr Relation opposite(Relation r) {
  switch (r) {
    case Relation::Above: return Relation::Below;
    case Relation::Below: return Relation::Above;
    case Relation::LeftOf: return Relation::RightOf;
    case Relation::RightOf: return Relation::LeftOf;
  }
  return r;
}

constexpr int index(Relation r) { return static_cast<int>(r); }

struct SuperpixelNode {
  int id = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  std::int64_t area = 1;
  std::vector<double> features;

  friend bool operator==(const SuperpixelNode&, const SuperpixelNode&) = default;
};

/// Stored once with p < q; `relation` is p's position w.r.t. q.
struct Edge {
  int p = 0;
  int q = 0;
  Relation relation = Relation::Above;
  double boundary_length = 1.0;
  std::vector<double> pairwise_features;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct SuperpixelGraph {
  std::vector<SuperpixelNode> nodes;
  std::vector<Edge> edges;
  int feat_dim = 0;
  int pfeat_dim = 0;
  int num_classes = 2;
  std::optional<Labeling> ground_truth;

  std::size_t size() const noexcept { return nodes.size(); }

  friend bool operator==(const SuperpixelGraph&, const SuperpixelGraph&) = default;
};

namespace detail {

inline void check_labels(const SuperpixelGraph& g, const Labeling& y, bool allow_void) {
  if (y.size() != g.nodes.size())
    throw Error(Errc::LengthMismatch, "labeling has " + std::to_string(y.size()) + " entries for " +
                                          std::to_string(g.nodes.size()) + " nodes");
  for (Label l : y) {
    if (allow_void && l == kVoidLabel) continue;
    if (l < 0 || l >= g.num_classes)
      throw Error(Errc::DimensionMismatch, "label " + std::to_string(l) + " outside 0.." +
                                               std::to_string(g.num_classes - 1));
  }
}

}  // namespace detail

/// Throws on any structural violation. Parsed graphs have already been
/// through this; hand-built graphs should call it once.
inline void validate(const SuperpixelGraph& g) {
  if (g.feat_dim < 0 || g.pfeat_dim < 0 || g.num_classes < 1)
    throw Error(Errc::MalformedHeader, "negative dimension or class count");
  const int n = static_cast<int>(g.nodes.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = g.nodes[i];
    if (node.id != i) throw Error(Errc::MalformedRecord, "node ids must be dense and ordered, got " + std::to_string(node.id) + " at position " + std::to_string(i));
    if (node.area < 1) throw Error(Errc::MalformedRecord, "node " + std::to_string(i) + " has area < 1");
    if (static_cast<int>(node.features.size()) != g.feat_dim)
      throw Error(Errc::DimensionMismatch, "node " + std::to_string(i) + " feature length differs from feat_dim");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    if (e.p == e.q) throw Error(Errc::DuplicateEdge, "self-loop on node " + std::to_string(e.p));
    if (e.p < 0 || e.q < 0 || e.p >= n || e.q >= n) throw Error(Errc::DanglingEdgeEndpoint, "edge endpoint out of range");
    if (e.p > e.q) throw Error(Errc::MalformedRecord, "edge not stored with p < q");
    if (!seen.emplace(e.p, e.q).second)
      throw Error(Errc::DuplicateEdge, "duplicate edge (" + std::to_string(e.p) + "," + std::to_string(e.q) + ")");
    if (!(e.boundary_length > 0.0)) throw Error(Errc::NonPositiveBoundaryLength, "edge boundary length must be positive");
    if (static_cast<int>(e.pairwise_features.size()) != g.pfeat_dim)
      throw Error(Errc::DimensionMismatch, "edge pairwise feature length differs from pfeat_dim");
  }
  if (g.ground_truth) detail::check_labels(g, *g.ground_truth, true);
}

/// Edge indices grouped by relation; the four lists partition the edge set.
inline std::array<std::vector<int>, kNumRelations> relation_sets(const SuperpixelGraph& g) {
  std::array<std::vector<int>, kNumRelations> sets;
  for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) sets[index(g.edges[i].relation)].push_back(i);
  return sets;
}

inline SuperpixelGraph parse_graph(std::istream& in) {
  detail::LineReader reader(in);
  SuperpixelGraph g;

  auto tok = reader.expect(Errc::MalformedHeader, "SPGRAPH header");
  if (tok.size() != 2 || tok[0] != "SPGRAPH" || tok[1] != "1")
    throw Error(Errc::MalformedHeader, "expected 'SPGRAPH 1'", reader.line());

  tok = reader.expect(Errc::MalformedHeader, "nodes header");
  if (tok.size() != 6 || tok[0] != "nodes" || tok[2] != "feat_dim" || tok[4] != "classes")
    throw Error(Errc::MalformedHeader, "expected 'nodes <n> feat_dim <d> classes <K>'", reader.line());
  const auto n = reader.integer(tok[1], Errc::MalformedHeader);
  g.feat_dim = static_cast<int>(reader.integer(tok[3], Errc::MalformedHeader));
  g.num_classes = static_cast<int>(reader.integer(tok[5], Errc::MalformedHeader));
  if (n < 0 || g.feat_dim < 0 || g.num_classes < 1)
    throw Error(Errc::MalformedHeader, "invalid counts in nodes header", reader.line());

  g.nodes.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    tok = reader.expect(Errc::MalformedRecord, "node line");
    if (tok.empty() || tok[0] != "node") throw Error(Errc::MalformedRecord, "expected 'node' line", reader.line());
    if (static_cast<int>(tok.size()) != 5 + g.feat_dim)
      throw Error(Errc::DimensionMismatch, "node line has " + std::to_string(tok.size() - 5) + " features, expected " + std::to_string(g.feat_dim), reader.line());
    SuperpixelNode node;
    node.id = static_cast<int>(reader.integer(tok[1]));
    if (node.id != i) throw Error(Errc::MalformedRecord, "node ids must be dense 0..n-1 in order", reader.line());
    node.centroid_row = reader.real(tok[2]);
    node.centroid_col = reader.real(tok[3]);
    node.area = reader.integer(tok[4]);
    if (node.area < 1) throw Error(Errc::MalformedRecord, "area must be >= 1", reader.line());
    node.features.reserve(static_cast<std::size_t>(g.feat_dim));
    for (int k = 0; k < g.feat_dim; ++k) node.features.push_back(reader.real(tok[5 + k]));
    g.nodes.push_back(std::move(node));
  }

  tok = reader.expect(Errc::MalformedHeader, "edges header");
  if (tok.size() != 4 || tok[0] != "edges" || tok[2] != "pfeat_dim")
    throw Error(Errc::MalformedHeader, "expected 'edges <m> pfeat_dim <e>'", reader.line());
  const auto m = reader.integer(tok[1], Errc::MalformedHeader);
  g.pfeat_dim = static_cast<int>(reader.integer(tok[3], Errc::MalformedHeader));
  if (m < 0 || g.pfeat_dim < 0) throw Error(Errc::MalformedHeader, "invalid counts in edges header", reader.line());

  std::set<std::pair<int, int>> seen;
  g.edges.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    tok = reader.expect(Errc::MalformedRecord, "edge line");
    if (tok.empty() || tok[0] != "edge") throw Error(Errc::MalformedRecord, "expected 'edge' line", reader.line());
    if (static_cast<int>(tok.size()) != 5 + g.pfeat_dim)
      throw Error(Errc::DimensionMismatch, "edge line has wrong number of pairwise features", reader.line());
    Edge e;
    e.p = static_cast<int>(reader.integer(tok[1]));
    e.q = static_cast<int>(reader.integer(tok[2]));
    auto rel = reader.integer(tok[3]);
    if (rel < 0 || rel > 3) throw Error(Errc::MalformedRecord, "relation must be 0..3", reader.line());
    e.relation = static_cast<Relation>(rel);
    e.boundary_length = reader.real(tok[4]);
    if (e.p < 0 || e.q < 0 || e.p >= n || e.q >= n)
      throw Error(Errc::DanglingEdgeEndpoint, "edge references a missing node", reader.line());
    if (e.p == e.q) throw Error(Errc::DuplicateEdge, "self-loop on node " + std::to_string(e.p), reader.line());
    if (e.p > e.q) {
      std::swap(e.p, e.q);
      e.relation = opposite(e.relation);
    }
    if (!seen.emplace(e.p, e.q).second) throw Error(Errc::DuplicateEdge, "duplicate edge", reader.line());
    if (!(e.boundary_length > 0.0)) throw Error(Errc::NonPositiveBoundaryLength, "boundary length must be positive", reader.line());
    e.pairwise_features.reserve(static_cast<std::size_t>(g.pfeat_dim));
    for (int k = 0; k < g.pfeat_dim; ++k) e.pairwise_features.push_back(reader.real(tok[5 + k]));
    g.edges.push_back(std::move(e));
  }

  // Optional ground truth: exactly one label line per node when present.
  std::vector<std::string_view> rest;
  if (reader.next(rest)) {
    Labeling labels(static_cast<std::size_t>(n), -1);
    std::int64_t count = 0;
    do {
      if (rest[0] == "edge") {
        if (rest.size() >= 3 && rest[1] == rest[2])
          throw Error(Errc::DuplicateEdge, "self-loop on node " + std::string(rest[1]), reader.line());
        throw Error(Errc::MalformedHeader, "more edge lines than the edges header declares", reader.line());
      }
      if (rest.size() != 3 || rest[0] != "label") throw Error(Errc::MalformedRecord, "expected 'label <id> <class>'", reader.line());
      auto id = reader.integer(rest[1]);
      auto cls = reader.integer(rest[2]);
      if (id < 0 || id >= n) throw Error(Errc::DanglingEdgeEndpoint, "label references a missing node", reader.line());
      if (labels[id] != -1) throw Error(Errc::MalformedRecord, "node labeled twice", reader.line());
      if ((cls < 0 || cls >= g.num_classes) && cls != kVoidLabel)
        throw Error(Errc::DimensionMismatch, "class outside 0..K-1", reader.line());
      labels[id] = static_cast<Label>(cls);
      ++count;
    } while (reader.next(rest));
    if (count != n) throw Error(Errc::MalformedRecord, "label block must cover every node", reader.line());
    g.ground_truth = std::move(labels);
  }
  return g;
}

inline SuperpixelGraph parse_graph(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_graph(in);
}

inline std::string write_graph(const SuperpixelGraph& g, const Labeling* labels_override = nullptr) {
  using detail::format_real;
  std::string out;
  out += "SPGRAPH 1\n";
  out += "nodes " + std::to_string(g.nodes.size()) + " feat_dim " + std::to_string(g.feat_dim) + " classes " +
         std::to_string(g.num_classes) + "\n";
  for (const auto& node : g.nodes) {
    out += "node " + std::to_string(node.id) + ' ' + format_real(node.centroid_row) + ' ' +
           format_real(node.centroid_col) + ' ' + std::to_string(node.area);
    detail::append_reals(out, node.features);
    out += '\n';
  }
  out += "edges " + std::to_string(g.edges.size()) + " pfeat_dim " + std::to_string(g.pfeat_dim) + "\n";
  for (const auto& e : g.edges) {
    out += "edge " + std::to_string(e.p) + ' ' + std::to_string(e.q) + ' ' + std::to_string(index(e.relation)) + ' ' +
           format_real(e.boundary_length);
    detail::append_reals(out, e.pairwise_features);
    out += '\n';
  }
  const Labeling* labels = labels_override ? labels_override : (g.ground_truth ? &*g.ground_truth : nullptr);
  if (labels) {
    for (std::size_t i = 0; i < labels->size(); ++i)
      out += "label " + std::to_string(i) + ' ' + std::to_string((*labels)[i]) + '\n';
  }
  return out;
}

inline SuperpixelGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_graph(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::Io, "write failed for " + path);
}

}  // namespace cocrf
