#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cocrf/cooccur.hpp"
#include "cocrf/error.hpp"
#include "cocrf/features.hpp"
#include "cocrf/graph.hpp"

namespace cocrf {

/// Learned parameters, stacked as [unary | pairwise].
struct WeightVector {
  std::vector<double> unary;
  std::vector<double> pairwise;

  std::size_t size() const noexcept { return unary.size() + pairwise.size(); }

  std::vector<double> stacked() const {
    std::vector<double> out(unary);
    out.insert(out.end(), pairwise.begin(), pairwise.end());
    return out;
  }

  static WeightVector split(std::span<const double> w, std::size_t unary_dim) {
    return {std::vector<double>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(unary_dim)),
            std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(unary_dim), w.end())};
  }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

/// Shape of the pairwise weight block. Each edge contributes one payload
/// vector (its pairwise features, or its boundary length when the graph has
/// none) into the sub-block of its relation, or into a single shared block.
struct PairwiseLayout {
  bool relation_blocks = true;
  int channel_dim = 1;

  int blocks() const noexcept { return relation_blocks ? kNumRelations : 1; }
  int dim() const noexcept { return blocks() * channel_dim; }
  int block_of(Relation r) const noexcept { return relation_blocks ? index(r) : 0; }

  static PairwiseLayout for_graph(const SuperpixelGraph& g, bool relation_blocks = true) {
    return {relation_blocks, std::max(1, g.pfeat_dim)};
  }

  friend bool operator==(const PairwiseLayout&, const PairwiseLayout&) = default;
};

inline std::span<const double> edge_payload(const Edge& e) {
  if (!e.pairwise_features.empty()) return e.pairwise_features;
  return {&e.boundary_length, 1};
}

enum class PairwiseKind { Plain, Mutex, CoOccur };

inline std::string_view to_string(PairwiseKind k) {
  switch (k) {
    case PairwiseKind::Plain: return "plain";
    case PairwiseKind::Mutex: return "mutex";
    case PairwiseKind::CoOccur: return "cooccur";
  }
  return "?";
}

inline PairwiseKind parse_pairwise_kind(std::string_view s) {
  if (s == "plain") return PairwiseKind::Plain;
  if (s == "mutex") return PairwiseKind::Mutex;
  if (s == "cooccur") return PairwiseKind::CoOccur;
  throw Error(Errc::InvalidArgument, "unknown pairwise mode '" + std::string(s) + "'");
}

struct PairwiseMode {
  PairwiseKind kind = PairwiseKind::Plain;
  double alpha = 1.0;
};

inline constexpr double kClampScale = 1e6;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline void check_dims(const SuperpixelGraph& g, const WeightVector& w, const UnaryFeatureMap& map,
                       const PairwiseLayout& layout) {
  if (map.num_classes != g.num_classes) throw Error(Errc::DimensionMismatch, "feature map and graph disagree on K");
  if (map.feat_dim != g.feat_dim) throw Error(Errc::DimensionMismatch, "feature map and graph disagree on feat_dim");
  if (layout.channel_dim != std::max(1, g.pfeat_dim))
    throw Error(Errc::DimensionMismatch, "pairwise layout does not match the graph's pfeat_dim");
  if (static_cast<int>(w.unary.size()) != map.unary_dim())
    throw Error(Errc::DimensionMismatch, "unary weight block has length " + std::to_string(w.unary.size()) +
                                             ", expected " + std::to_string(map.unary_dim()));
  if (static_cast<int>(w.pairwise.size()) != layout.dim())
    throw Error(Errc::DimensionMismatch, "pairwise weight block has length " + std::to_string(w.pairwise.size()) +
                                             ", expected " + std::to_string(layout.dim()));
}

}  // namespace detail

/// A graph with its per-node unary payloads computed once.
struct PreparedGraph {
  const SuperpixelGraph* graph = nullptr;
  int num_classes = 0;
  int payload_dim = 0;
  std::vector<double> payloads;  // nodes x payload_dim

  std::span<const double> payload(std::size_t p) const {
    return {payloads.data() + p * static_cast<std::size_t>(payload_dim), static_cast<std::size_t>(payload_dim)};
  }
};

inline PreparedGraph prepare(const SuperpixelGraph& g, const UnaryFeatureMap& map) {
  if (map.num_classes != g.num_classes) throw Error(Errc::DimensionMismatch, "feature map and graph disagree on K");
  if (map.feat_dim != g.feat_dim) throw Error(Errc::DimensionMismatch, "feature map and graph disagree on feat_dim");
  PreparedGraph out{&g, map.num_classes, map.payload_dim(), {}};
  out.payloads.reserve(g.nodes.size() * static_cast<std::size_t>(out.payload_dim));
  for (const auto& node : g.nodes) {
    const auto x = map.payload(node.features);
    out.payloads.insert(out.payloads.end(), x.begin(), x.end());
  }
  return out;
}

/// Psi(x, y): summed unary block vectors followed by summed pairwise payloads
/// of disagreeing edges, placed by relation.
inline std::vector<double> joint_feature_map(const PreparedGraph& pg, std::span<const Label> y,
                                             const PairwiseLayout& layout) {
  const auto& g = *pg.graph;
  if (y.size() != g.nodes.size()) throw Error(Errc::LengthMismatch, "labeling length differs from node count");
  if (layout.channel_dim != std::max(1, g.pfeat_dim)) throw Error(Errc::DimensionMismatch, "layout does not match graph");
  const std::size_t block = static_cast<std::size_t>(pg.payload_dim);
  const std::size_t du = block * static_cast<std::size_t>(pg.num_classes);
  std::vector<double> psi(du + static_cast<std::size_t>(layout.dim()), 0.0);
  for (std::size_t p = 0; p < g.nodes.size(); ++p) {
    if (y[p] < 0 || y[p] >= pg.num_classes) throw Error(Errc::DimensionMismatch, "label outside 0..K-1");
    const auto x = pg.payload(p);
    const std::size_t off = block * static_cast<std::size_t>(y[p]);
    for (std::size_t k = 0; k < block; ++k) psi[off + k] += x[k];
  }
  for (const auto& e : g.edges) {
    if (y[e.p] == y[e.q]) continue;
    const auto v = edge_payload(e);
    const std::size_t off = du + static_cast<std::size_t>(layout.block_of(e.relation)) * layout.channel_dim;
    for (std::size_t k = 0; k < v.size(); ++k) psi[off + k] += v[k];
  }
  return psi;
}

inline std::vector<double> joint_feature_map(const SuperpixelGraph& g, const Labeling& y, const UnaryFeatureMap& map,
                                             const PairwiseLayout& layout) {
  detail::check_labels(g, y, false);
  return joint_feature_map(prepare(g, map), y, layout);
}

/// Everything inference needs, flattened: unary costs per (node, label) and
/// one scalar weight per edge. The edge cost for labels a != b is
///   alpha * theta_e                       (Plain)
///   alpha * theta_e * g_r(a, b)           (CoOccur / Mutex, allowed pair)
///   alpha * M * (1 + |theta_e|)           (forbidden pair)
/// and 0 when a == b.
class CrfInstance {
 public:
  struct EdgeTerm {
    int p = 0;
    int q = 0;
    Relation relation = Relation::Above;
    double theta = 0.0;
  };

  CrfInstance() = default;
  CrfInstance(int num_nodes, int num_classes)
      : num_nodes_(num_nodes), num_classes_(num_classes), unary_(static_cast<std::size_t>(num_nodes) * num_classes, 0.0) {
    for (auto& m : multiplier_) m.assign(static_cast<std::size_t>(num_classes) * num_classes, 1.0);
    for (auto& f : forbidden_) f.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
    for (auto& m : multiplier_)
      for (int a = 0; a < num_classes; ++a) m[static_cast<std::size_t>(a) * num_classes + a] = 0.0;
  }

  int num_nodes() const noexcept { return num_nodes_; }
  int num_classes() const noexcept { return num_classes_; }
  const std::vector<EdgeTerm>& edges() const noexcept { return edges_; }
  double alpha() const noexcept { return alpha_; }
  double clamp() const noexcept { return clamp_; }

  double unary(int p, Label k) const { return unary_[static_cast<std::size_t>(p) * num_classes_ + k]; }
  double& unary(int p, Label k) { return unary_[static_cast<std::size_t>(p) * num_classes_ + k]; }

  void add_edge(int p, int q, Relation r, double theta) { edges_.push_back({p, q, r, theta}); }
  void set_alpha(double alpha) { alpha_ = alpha; }
  void set_clamp(double m) { clamp_ = m; }

  /// Installs per-relation multipliers from a table (CoOccur) or its
  /// thresholded form (Mutex).
  void set_context(const CoOccurrenceTable& table, PairwiseKind kind) {
    if (table.num_classes() != num_classes_) throw Error(Errc::DimensionMismatch, "co-occurrence table has wrong class count");
    for (auto r : kAllRelations)
      for (Label a = 0; a < num_classes_; ++a)
        for (Label b = 0; b < num_classes_; ++b) {
          const std::size_t i = static_cast<std::size_t>(a) * num_classes_ + b;
          if (a == b) continue;
          std::optional<double> g;
          if (kind == PairwiseKind::Mutex) {
            if (table.adjacent(r, a, b) > 0) g = 1.0;
          } else {
            g = table.multiplier(r, a, b);
          }
          forbidden_[index(r)][i] = g ? 0 : 1;
          multiplier_[index(r)][i] = g.value_or(0.0);
        }
  }

  bool forbidden(Relation r, Label a, Label b) const {
    return forbidden_[index(r)][static_cast<std::size_t>(a) * num_classes_ + b] != 0;
  }

  double pair_cost(const EdgeTerm& e, Label a, Label b) const {
    if (a == b) return 0.0;
    const std::size_t i = static_cast<std::size_t>(a) * num_classes_ + b;
    if (forbidden_[index(e.relation)][i]) return alpha_ * clamp_ * (1.0 + std::abs(e.theta));
    return alpha_ * e.theta * multiplier_[index(e.relation)][i];
  }

  double evaluate(std::span<const Label> y) const {
    double unary_sum = 0.0;
    for (int p = 0; p < num_nodes_; ++p) unary_sum += unary(p, y[p]);
    double pair_sum = 0.0;
    for (const auto& e : edges_) pair_sum += pair_cost(e, y[e.p], y[e.q]);
    return unary_sum + pair_sum;
  }

  double max_abs_unary() const {
    double m = 0.0;
    for (double u : unary_) m = std::max(m, std::abs(u));
    return m;
  }

 private:
  int num_nodes_ = 0;
  int num_classes_ = 0;
  std::vector<double> unary_;
  std::vector<EdgeTerm> edges_;
  std::array<std::vector<double>, kNumRelations> multiplier_;
  std::array<std::vector<char>, kNumRelations> forbidden_;
  double alpha_ = 1.0;
  double clamp_ = 0.0;
};

inline CrfInstance build_instance(const PreparedGraph& pg, const WeightVector& w, const PairwiseLayout& layout,
                                  const PairwiseMode& mode, const CoOccurrenceTable* table) {
  const auto& g = *pg.graph;
  const int K = pg.num_classes;
  const std::size_t block = static_cast<std::size_t>(pg.payload_dim);
  if (layout.channel_dim != std::max(1, g.pfeat_dim))
    throw Error(Errc::DimensionMismatch, "pairwise layout does not match the graph's pfeat_dim");
  if (w.unary.size() != block * static_cast<std::size_t>(K))
    throw Error(Errc::DimensionMismatch, "unary weight block has length " + std::to_string(w.unary.size()) +
                                             ", expected " + std::to_string(block * K));
  if (static_cast<int>(w.pairwise.size()) != layout.dim())
    throw Error(Errc::DimensionMismatch, "pairwise weight block has length " + std::to_string(w.pairwise.size()) +
                                             ", expected " + std::to_string(layout.dim()));
  if (mode.kind != PairwiseKind::Plain && table == nullptr)
    throw Error(Errc::MissingTable, std::string(to_string(mode.kind)) + " mode needs a co-occurrence table");
  if (!(mode.alpha > 0.0)) throw Error(Errc::InvalidArgument, "alpha must be positive");

  const int n = static_cast<int>(g.nodes.size());
  CrfInstance inst(n, K);
  const std::span<const double> w1(w.unary);
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < K; ++k) inst.unary(p, k) = detail::dot(w1.subspan(block * k, block), pg.payload(p));
  const std::span<const double> w2(w.pairwise);
  for (const auto& e : g.edges) {
    const auto wb = w2.subspan(static_cast<std::size_t>(layout.block_of(e.relation)) * layout.channel_dim,
                               static_cast<std::size_t>(layout.channel_dim));
    inst.add_edge(e.p, e.q, e.relation, detail::dot(wb, edge_payload(e)));
  }
  inst.set_alpha(mode.alpha);
  inst.set_clamp(kClampScale * (1.0 + inst.max_abs_unary()));
  if (mode.kind != PairwiseKind::Plain) inst.set_context(*table, mode.kind);
  return inst;
}

inline CrfInstance build_instance(const SuperpixelGraph& g, const WeightVector& w, const UnaryFeatureMap& map,
                                  const PairwiseLayout& layout, const PairwiseMode& mode,
                                  const CoOccurrenceTable* table) {
  detail::check_dims(g, w, map, layout);
  return build_instance(prepare(g, map), w, layout, mode, table);
}

/// E(y, x; w) under the given pairwise mode.
inline double energy(const SuperpixelGraph& g, const Labeling& y, const WeightVector& w, const UnaryFeatureMap& map,
                     const PairwiseLayout& layout, const PairwiseMode& mode = {},
                     const CoOccurrenceTable* table = nullptr) {
  detail::check_labels(g, y, false);
  return build_instance(g, w, map, layout, mode, table).evaluate(y);
}

/// A trained CRF: how node features become unary payloads, how pairwise
/// weights are blocked, the weights themselves, and the pairwise mode that
/// was in effect when the model was exported.
struct CrfModel {
  UnaryFeatureMap unary_map;
  PairwiseLayout layout;
  WeightVector weights;
  PairwiseMode mode;
  std::vector<std::string> pairwise_channels;  // informational, in edge feature order
};

inline CrfInstance build_instance(const SuperpixelGraph& g, const CrfModel& model, const PairwiseMode& mode,
                                  const CoOccurrenceTable* table) {
  return build_instance(g, model.weights, model.unary_map, model.layout, mode, table);
}

}  // namespace cocrf
