#pragma once

// Random instance generators and brute-force oracles shared by the unit and
// acceptance tests. The oracles are written directly from the model
// definitions and deliberately avoid CrfInstance and the solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "cocrf/cooccur.hpp"
#include "cocrf/energy.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/inference.hpp"

namespace testing_support {

using namespace cocrf;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen_); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

struct GraphShape {
  int min_nodes = 1;
  int max_nodes = 8;
  int min_classes = 2;
  int max_classes = 3;
  int feat_dim = 3;
  int pfeat_dim = 2;
  double edge_probability = 0.4;
};

/// Random graph with random features, relations and boundary lengths.
/// Edges are canonical (p < q) and unique.
inline SuperpixelGraph random_graph(Rng& rng, const GraphShape& shape) {
  SuperpixelGraph g;
  const int n = rng.uniform_int(shape.min_nodes, shape.max_nodes);
  g.num_classes = rng.uniform_int(shape.min_classes, shape.max_classes);
  g.feat_dim = shape.feat_dim;
  g.pfeat_dim = shape.pfeat_dim;
  for (int i = 0; i < n; ++i) {
    SuperpixelNode node{i, rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform_int(1, 50), {}};
    for (int k = 0; k < shape.feat_dim; ++k) node.features.push_back(rng.uniform(-2, 2));
    g.nodes.push_back(std::move(node));
  }
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      if (!rng.coin(shape.edge_probability)) continue;
      Edge e;
      e.p = p;
      e.q = q;
      e.relation = static_cast<Relation>(rng.uniform_int(0, 3));
      e.boundary_length = rng.uniform_int(1, 20);
      for (int k = 0; k < shape.pfeat_dim; ++k) e.pairwise_features.push_back(rng.uniform(0, 3));
      g.edges.push_back(std::move(e));
    }
  return g;
}

inline Labeling random_labeling(Rng& rng, int n, int K) {
  Labeling y(static_cast<std::size_t>(n));
  for (auto& l : y) l = rng.uniform_int(0, K - 1);
  return y;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline WeightVector random_weights(Rng& rng, const SuperpixelGraph& g, const PairwiseLayout& layout) {
  return {random_vector(rng, static_cast<std::size_t>(g.num_classes * g.feat_dim)),
          random_vector(rng, static_cast<std::size_t>(layout.dim()))};
}

/// Random count table satisfying the invariants, with a fair share of
/// never-adjacent pairs.
inline CoOccurrenceTable random_table(Rng& rng, int K) {
  CoOccurrenceTable t(K);
  for (Label a = 0; a < K; ++a)
    for (Label b = a + 1; b < K; ++b) {
      const int n = rng.uniform_int(0, 6);
      t.set_coexist(a, b, n);
      for (auto r : kAllRelations) t.set_adjacent(r, a, b, rng.coin(0.35) ? 0 : rng.uniform_int(0, n));
    }
  return t;
}

// ---------------------------------------------------------------------------
// Oracles

/// Energy straight from the definitions: raw (unstandardized) features as
/// unary payload, edge payload = pairwise features or boundary length.
inline double oracle_energy(const SuperpixelGraph& g, const Labeling& y, const WeightVector& w, bool relation_blocks,
                            PairwiseKind kind, double alpha, const CoOccurrenceTable* table) {
  const int K = g.num_classes, d = g.feat_dim;
  double unary = 0.0, max_abs = 0.0;
  for (std::size_t p = 0; p < g.nodes.size(); ++p)
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += w.unary[static_cast<std::size_t>(k * d + j)] * g.nodes[p].features[j];
      max_abs = std::max(max_abs, std::abs(s));
      if (y[p] == k) unary += s;
    }
  const double M = 1e6 * (1.0 + max_abs);
  const int cd = std::max(1, g.pfeat_dim);
  double pair = 0.0;
  for (const auto& e : g.edges) {
    const Label a = y[e.p], b = y[e.q];
    if (a == b) continue;
    const int block = relation_blocks ? static_cast<int>(e.relation) : 0;
    double theta = 0.0;
    for (int j = 0; j < cd; ++j) {
      const double f = g.pfeat_dim == 0 ? e.boundary_length : e.pairwise_features[j];
      theta += w.pairwise[static_cast<std::size_t>(block * cd + j)] * f;
    }
    if (kind == PairwiseKind::Plain) {
      pair += alpha * theta;
      continue;
    }
    const auto n = table->coexist(a, b);
    const auto ni = table->adjacent(e.relation, a, b);
    if (ni == 0)
      pair += alpha * M * (1.0 + std::abs(theta));
    else if (kind == PairwiseKind::Mutex)
      pair += alpha * theta;
    else
      pair += alpha * theta * static_cast<double>(n) / static_cast<double>(ni);
  }
  return unary + pair;
}

inline double oracle_hamming(const Labeling& truth, const Labeling& y, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p)
    if (truth[p] != y[p]) s += c[truth[p]];
  return s;
}

/// Every labeling of n nodes over K classes, in lexicographic order, built
/// by counting in base K.
inline std::vector<Labeling> all_labelings(int n, int K) {
  std::vector<Labeling> out;
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::uint64_t>(K);
  out.reserve(total);
  for (std::uint64_t code = 0; code < total; ++code) {
    Labeling y(static_cast<std::size_t>(n));
    std::uint64_t c = code;
    for (int p = n - 1; p >= 0; --p) {
      y[p] = static_cast<Label>(c % K);
      c /= K;
    }
    out.push_back(std::move(y));
  }
  return out;
}

struct Argmin {
  Labeling labels;
  double value = std::numeric_limits<double>::infinity();
};

/// Minimum of f over all labelings; ties go to the lexicographically
/// smallest labeling.
template <typename F>
Argmin brute_force(int n, int K, F&& f) {
  Argmin best;
  for (auto& y : all_labelings(n, K)) {
    const double v = f(y);
    if (v < best.value || (v == best.value && y < best.labels)) {
      best.value = v;
      best.labels = y;
    }
  }
  return best;
}

inline bool contains_forbidden_pair(const SuperpixelGraph& g, const Labeling& y, const CoOccurrenceTable& t) {
  for (const auto& e : g.edges)
    if (y[e.p] != y[e.q] && t.adjacent(e.relation, y[e.p], y[e.q]) == 0) return true;
  return false;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cocrf_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
