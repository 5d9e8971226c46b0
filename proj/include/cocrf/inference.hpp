#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cocrf/cooccur.hpp"
#include "cocrf/energy.hpp"
#include "cocrf/error.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/maxflow.hpp"

namespace cocrf {

enum class Algorithm { Exhaustive, Icm, AlphaExpansion };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Exhaustive: return "exhaustive";
    case Algorithm::Icm: return "icm";
    case Algorithm::AlphaExpansion: return "expansion";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "exhaustive") return Algorithm::Exhaustive;
  if (s == "icm") return Algorithm::Icm;
  if (s == "expansion" || s == "alpha-expansion") return Algorithm::AlphaExpansion;
  throw Error(Errc::InvalidArgument, "unknown inference algorithm '" + std::string(s) + "'");
}

/// Exhaustive search refuses state spaces larger than this.
inline constexpr std::uint64_t kExhaustiveStateCap = std::uint64_t{1} << 20;

struct InferenceConfig {
  Algorithm algorithm = Algorithm::AlphaExpansion;
  int max_sweeps = 20;
  int restarts = 3;
  std::uint64_t seed = 1;
  PairwiseMode mode;
};

struct InferenceResult {
  Labeling labels;
  double energy = 0.0;
  /// Energy after initialization and after every sweep (local searches only).
  std::vector<double> trace;
};

/// Per-class weights of the weighted Hamming loss.
struct LossSpec {
  std::vector<double> class_weights;

  double weight(Label truth) const { return truth == kVoidLabel ? 0.0 : class_weights.at(static_cast<std::size_t>(truth)); }

  static LossSpec uniform(int num_classes) { return {std::vector<double>(num_classes, 1.0)}; }

  /// Weights inversely proportional to each class's pixel share (superpixel
  /// areas) in the corpus, normalized to mean 1. Classes that never appear
  /// get the mean weight of the observed ones before normalization.
  static LossSpec inverse_frequency(std::span<const SuperpixelGraph> corpus, int num_classes) {
    std::vector<double> mass(num_classes, 0.0);
    double total = 0.0;
    for (const auto& g : corpus) {
      if (!g.ground_truth) throw Error(Errc::MissingGroundTruth, "loss weights need labeled graphs");
      for (std::size_t p = 0; p < g.nodes.size(); ++p) {
        const Label l = (*g.ground_truth)[p];
        if (l == kVoidLabel) continue;
        mass[l] += static_cast<double>(g.nodes[p].area);
        total += static_cast<double>(g.nodes[p].area);
      }
    }
    if (total == 0.0) return uniform(num_classes);
    std::vector<double> w(num_classes, 0.0);
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < num_classes; ++k)
      if (mass[k] > 0.0) {
        w[k] = total / mass[k];
        sum += w[k];
        ++present;
      }
    const double fill = sum / present;
    for (int k = 0; k < num_classes; ++k)
      if (mass[k] == 0.0) w[k] = fill;
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / num_classes;
    for (auto& v : w) v /= mean;
    return {std::move(w)};
  }
};

/// sum_p c_{y_p} [y_p != y2_p].
inline double weighted_hamming(std::span<const Label> y, std::span<const Label> y2, const LossSpec& loss) {
  if (y.size() != y2.size()) throw Error(Errc::LengthMismatch, "labelings differ in length");
  double s = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p)
    if (y[p] != y2[p]) s += loss.weight(y[p]);
  return s;
}

namespace detail {

inline bool lexicographically_less(std::span<const Label> a, std::span<const Label> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Keeps the lowest-energy labeling seen; exact ties go to the
// lexicographically smaller labeling.
struct BestSoFar {
  Labeling labels;
  double energy = std::numeric_limits<double>::infinity();

  void offer(std::span<const Label> y, double e) {
    if (e < energy || (e == energy && lexicographically_less(y, labels))) {
      labels.assign(y.begin(), y.end());
      energy = e;
    }
  }
};

inline std::vector<std::vector<int>> incident_edges(const CrfInstance& inst) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(inst.num_nodes()));
  for (int i = 0; i < static_cast<int>(inst.edges().size()); ++i) {
    out[inst.edges()[i].p].push_back(i);
    out[inst.edges()[i].q].push_back(i);
  }
  return out;
}

// Cost of giving node p label k with all other labels fixed.
inline double local_cost(const CrfInstance& inst, const std::vector<int>& incident, const Labeling& y, int p, Label k) {
  double c = inst.unary(p, k);
  for (int id : incident) {
    const auto& e = inst.edges()[id];
    c += e.p == p ? inst.pair_cost(e, k, y[e.q]) : inst.pair_cost(e, y[e.p], k);
  }
  return c;
}

inline Labeling unary_argmin(const CrfInstance& inst) {
  Labeling y(static_cast<std::size_t>(inst.num_nodes()), 0);
  for (int p = 0; p < inst.num_nodes(); ++p)
    for (Label k = 1; k < inst.num_classes(); ++k)
      if (inst.unary(p, k) < inst.unary(p, y[p])) y[p] = k;
  return y;
}

}  // namespace detail

/// Global minimizer by enumeration in lexicographic order.
inline InferenceResult solve_exhaustive(const CrfInstance& inst) {
  const int n = inst.num_nodes(), K = inst.num_classes();
  std::uint64_t states = 1;
  for (int p = 0; p < n; ++p) {
    states *= static_cast<std::uint64_t>(K);
    if (states > kExhaustiveStateCap)
      throw Error(Errc::StateSpaceTooLarge, std::to_string(K) + "^" + std::to_string(n) + " labelings exceed the exhaustive cap");
  }
  Labeling y(static_cast<std::size_t>(n), 0);
  detail::BestSoFar best;
  for (;;) {
    const double e = inst.evaluate(y);
    // Enumeration is already lexicographic, so strict improvement suffices.
    if (e < best.energy) {
      best.labels = y;
      best.energy = e;
    }
    int p = n - 1;
    while (p >= 0 && y[p] == K - 1) y[p--] = 0;
    if (p < 0) break;
    ++y[p];
  }
  return {std::move(best.labels), best.energy, {}};
}

/// Iterated conditional modes. The first run starts from the per-node unary
/// minimum, further restarts from seeded random labelings.
inline InferenceResult solve_icm(const CrfInstance& inst, const InferenceConfig& cfg) {
  const int n = inst.num_nodes(), K = inst.num_classes();
  const auto incident = detail::incident_edges(inst);
  detail::BestSoFar best;
  std::vector<double> best_trace;
  for (int run = 0; run < std::max(1, cfg.restarts); ++run) {
    Labeling y;
    if (run == 0) {
      y = detail::unary_argmin(inst);
    } else {
      std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(run));
      std::uniform_int_distribution<int> pick(0, K - 1);
      y.resize(static_cast<std::size_t>(n));
      for (auto& l : y) l = pick(rng);
    }
    std::vector<double> trace{inst.evaluate(y)};
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      bool changed = false;
      for (int p = 0; p < n; ++p) {
        const double current = detail::local_cost(inst, incident[p], y, p, y[p]);
        Label arg = y[p];
        double low = current;
        for (Label k = 0; k < K; ++k) {
          if (k == y[p]) continue;
          const double c = detail::local_cost(inst, incident[p], y, p, k);
          if (c < low) {
            low = c;
            arg = k;
          }
        }
        if (arg != y[p]) {
          y[p] = arg;
          changed = true;
        }
      }
      trace.push_back(inst.evaluate(y));
      if (!changed) break;
    }
    const double before = best.energy;
    best.offer(y, trace.back());
    if (best.energy != before || best_trace.empty()) best_trace = trace;
  }
  return {std::move(best.labels), best.energy, std::move(best_trace)};
}

/// Best alpha-expansion move from `y` as a binary min-cut. Pairwise terms
/// that violate submodularity are raised on the (keep, switch) entry until
/// they satisfy it, which never lowers the modeled energy of any move.
inline Labeling expansion_move(const CrfInstance& inst, const Labeling& y, Label alpha) {
  const int n = inst.num_nodes();
  const int source = n, sink = n + 1;
  MaxFlow flow(n + 2);
  // x_p = 0 keeps y_p (source side), x_p = 1 switches to alpha (sink side).
  std::vector<double> cost0(static_cast<std::size_t>(n)), cost1(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    cost0[p] = inst.unary(p, y[p]);
    cost1[p] = inst.unary(p, alpha);
  }
  for (const auto& e : inst.edges()) {
    const double A = inst.pair_cost(e, y[e.p], y[e.q]);
    const double B = inst.pair_cost(e, y[e.p], alpha);
    const double C = inst.pair_cost(e, alpha, y[e.q]);
    const double D = inst.pair_cost(e, alpha, alpha);
    // V = A + (C - A) x_p + (D - C) x_q + (B + C - A - D)(1 - x_p) x_q
    cost1[e.p] += C - A;
    cost1[e.q] += D - C;
    const double cross = B + C - A - D;
    if (cross > 0.0) flow.add_edge(e.p, e.q, cross);
  }
  for (int p = 0; p < n; ++p) {
    const double d = cost1[p] - cost0[p];
    if (d > 0.0)
      flow.add_edge(source, p, d);
    else if (d < 0.0)
      flow.add_edge(p, sink, -d);
  }
  flow.solve(source, sink);
  Labeling next = y;
  for (int p = 0; p < n; ++p)
    if (!flow.source_side(p)) next[p] = alpha;
  return next;
}

/// Alpha-expansion from the best constant labeling; a move is accepted only
/// when it strictly lowers the true energy.
inline InferenceResult solve_alpha_expansion(const CrfInstance& inst, const InferenceConfig& cfg) {
  const int n = inst.num_nodes(), K = inst.num_classes();
  Labeling y(static_cast<std::size_t>(n), 0);
  double current = inst.evaluate(y);
  for (Label k = 1; k < K; ++k) {
    Labeling c(static_cast<std::size_t>(n), k);
    const double e = inst.evaluate(c);
    if (e < current) {
      current = e;
      y = std::move(c);
    }
  }
  std::vector<double> trace{current};
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    bool improved = false;
    for (Label alpha = 0; alpha < K; ++alpha) {
      auto candidate = expansion_move(inst, y, alpha);
      const double e = inst.evaluate(candidate);
      if (e < current) {
        current = e;
        y = std::move(candidate);
        improved = true;
      }
    }
    trace.push_back(current);
    if (!improved) break;
  }
  return {std::move(y), current, std::move(trace)};
}

inline InferenceResult solve(const CrfInstance& inst, const InferenceConfig& cfg) {
  if (inst.num_nodes() == 0) return {{}, 0.0, {}};
  switch (cfg.algorithm) {
    case Algorithm::Exhaustive: return solve_exhaustive(inst);
    case Algorithm::Icm: return solve_icm(inst, cfg);
    case Algorithm::AlphaExpansion: return solve_alpha_expansion(inst, cfg);
  }
  throw Error(Errc::InvalidArgument, "unknown algorithm");
}

/// argmin_y E(y). Uses cfg.mode for the pairwise term.
inline InferenceResult map_inference(const SuperpixelGraph& g, const CrfModel& model, const InferenceConfig& cfg,
                                     const CoOccurrenceTable* table = nullptr) {
  return solve(build_instance(g, model, cfg.mode, table), cfg);
}

/// Subtracts c_{truth_p} from every label other than truth_p, so that the
/// instance energy becomes E(y) - Delta(truth, y).
inline void absorb_loss(CrfInstance& inst, std::span<const Label> truth, const LossSpec& loss) {
  if (static_cast<int>(truth.size()) != inst.num_nodes()) throw Error(Errc::LengthMismatch, "ground truth length mismatch");
  for (int p = 0; p < inst.num_nodes(); ++p) {
    const double c = loss.weight(truth[p]);
    for (Label k = 0; k < inst.num_classes(); ++k)
      if (k != truth[p]) inst.unary(p, k) -= c;
  }
}

/// argmin_y E(y) - Delta(y_true, y); `energy` of the result holds that
/// augmented objective.
inline InferenceResult loss_augmented_inference(const SuperpixelGraph& g, const Labeling& truth, const CrfModel& model,
                                                const LossSpec& loss, const InferenceConfig& cfg,
                                                const CoOccurrenceTable* table = nullptr) {
  if (static_cast<int>(loss.class_weights.size()) != g.num_classes)
    throw Error(Errc::DimensionMismatch, "loss weights do not match class count");
  auto inst = build_instance(g, model, cfg.mode, table);
  absorb_loss(inst, truth, loss);
  return solve(inst, cfg);
}

}  // namespace cocrf
