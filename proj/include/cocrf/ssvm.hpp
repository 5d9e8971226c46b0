#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cocrf/detail/parallel.hpp"
#include "cocrf/energy.hpp"
#include "cocrf/error.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/inference.hpp"

namespace cocrf {

/// One aggregated cutting plane: <w, dpsi> >= loss - xi.
struct Constraint {
  std::vector<double> dpsi;
  double loss = 0.0;
};

struct QpResult {
  std::vector<double> w;
  double xi = 0.0;
  double primal = 0.0;  // 1/2 |w|^2 + C xi
  double dual = 0.0;    // restricted-problem lower bound
  std::vector<double> multipliers;
  int iterations = 0;
};

/// Solves min 1/2 |w|^2 + C xi  s.t. <w, dpsi_j> >= loss_j - xi, xi >= 0
/// through its dual
///   max sum_j l_j loss_j - 1/2 |sum_j l_j dpsi_j|^2,  l >= 0, sum_j l_j <= C
/// by pairwise coordinate ascent (an implicit multiplier carries the unused
/// budget C - sum_j l_j). Stops at a duality gap of `tolerance` relative to
/// max(1, primal). `warm_start`, when given, seeds the multipliers of the
/// leading constraints; the dual objective then never drops below the
/// previous optimum.
inline QpResult qp_solve(std::span<const Constraint> working_set, double C,
                         std::span<const double> warm_start = {}, double tolerance = 1e-8,
                         int max_iterations = 1000000) {
  if (working_set.empty()) throw Error(Errc::InvalidArgument, "working set is empty");
  if (!(C > 0.0)) throw Error(Errc::InvalidArgument, "C must be positive");
  const std::size_t J = working_set.size();
  const std::size_t dim = working_set.front().dpsi.size();
  for (const auto& c : working_set)
    if (c.dpsi.size() != dim) throw Error(Errc::DimensionMismatch, "constraints differ in dimension");

  // Index 0 is the budget slack (zero direction, zero loss).
  const std::size_t V = J + 1;
  std::vector<double> gram(V * V, 0.0);
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = i; j < J; ++j) {
      const double v = detail::dot(working_set[i].dpsi, working_set[j].dpsi);
      gram[(i + 1) * V + (j + 1)] = v;
      gram[(j + 1) * V + (i + 1)] = v;
    }
  std::vector<double> loss(V, 0.0);
  for (std::size_t j = 0; j < J; ++j) loss[j + 1] = working_set[j].loss;

  std::vector<double> lambda(V, 0.0);
  double used = 0.0;
  for (std::size_t j = 0; j < std::min(J, warm_start.size()); ++j) {
    lambda[j + 1] = std::max(0.0, warm_start[j]);
    used += lambda[j + 1];
  }
  if (used > C) {
    for (std::size_t j = 1; j < V; ++j) lambda[j] *= C / used;
    used = C;
  }
  lambda[0] = C - used;

  // grad_k = loss_k - <w, dpsi_k> = loss_k - (H lambda)_k
  std::vector<double> grad(V);
  for (std::size_t k = 0; k < V; ++k) {
    double hl = 0.0;
    for (std::size_t j = 0; j < V; ++j) hl += gram[k * V + j] * lambda[j];
    grad[k] = loss[k] - hl;
  }

  auto objectives = [&](double& primal, double& dual) {
    double wnorm2 = 0.0, lin = 0.0, gmax = 0.0;
    for (std::size_t k = 0; k < V; ++k) {
      lin += lambda[k] * loss[k];
      wnorm2 += lambda[k] * (loss[k] - grad[k]);
      gmax = std::max(gmax, grad[k]);
    }
    primal = 0.5 * wnorm2 + C * gmax;
    dual = lin - 0.5 * wnorm2;
  };

  QpResult out;
  double primal = 0.0, dual = 0.0;
  int it = 0;
  for (; it < max_iterations; ++it) {
    objectives(primal, dual);
    if (primal - dual <= tolerance * std::max(1.0, std::abs(primal))) break;
    std::size_t up = 0, down = V;
    for (std::size_t k = 1; k < V; ++k)
      if (grad[k] > grad[up]) up = k;
    for (std::size_t k = 0; k < V; ++k)
      if (lambda[k] > 0.0 && (down == V || grad[k] < grad[down])) down = k;
    if (down == V || up == down || grad[up] <= grad[down]) break;
    const double curvature = gram[up * V + up] + gram[down * V + down] - 2.0 * gram[up * V + down];
    double t = curvature > 0.0 ? (grad[up] - grad[down]) / curvature : lambda[down];
    t = std::min(t, lambda[down]);
    if (!(t > 0.0)) break;
    lambda[up] += t;
    lambda[down] -= t;
    if (lambda[down] < 1e-15 * C) {
      lambda[up] += lambda[down];
      lambda[down] = 0.0;
    }
    for (std::size_t k = 0; k < V; ++k) grad[k] -= t * (gram[k * V + up] - gram[k * V + down]);
  }
  // Recompute the gradient from scratch to drop accumulated drift.
  for (std::size_t k = 0; k < V; ++k) {
    double hl = 0.0;
    for (std::size_t j = 0; j < V; ++j) hl += gram[k * V + j] * lambda[j];
    grad[k] = loss[k] - hl;
  }
  objectives(primal, dual);

  out.w.assign(dim, 0.0);
  for (std::size_t j = 0; j < J; ++j)
    if (lambda[j + 1] != 0.0)
      for (std::size_t d = 0; d < dim; ++d) out.w[d] += lambda[j + 1] * working_set[j].dpsi[d];
  out.xi = 0.0;
  for (std::size_t j = 0; j < J; ++j)
    out.xi = std::max(out.xi, working_set[j].loss - detail::dot(out.w, working_set[j].dpsi));
  out.primal = primal;
  out.dual = dual;
  out.multipliers.assign(lambda.begin() + 1, lambda.end());
  out.iterations = it;
  return out;
}

struct SsvmConfig {
  double C = 100.0;
  double epsilon = 1e-3;
  int max_iterations = 200;
  InferenceConfig inference;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool use_cache = true;
};

enum class TrainStatus { Converged, MaxIterationsReached };

struct IterationRecord {
  int iteration = 0;
  double lower_bound = 0.0;  // restricted-QP optimum before this iteration's cut
  double primal = 0.0;
  double violation = 0.0;  // aggregated violation of the most violated constraint
  double xi = 0.0;
  double seconds = 0.0;
  bool from_cache = false;
};

struct TrainingState {
  WeightVector w;
  std::vector<Constraint> working_set;
  std::vector<IterationRecord> history;
  double xi = 0.0;
  TrainStatus status = TrainStatus::Converged;
};

struct TrainResult {
  CrfModel model;
  TrainingState state;
};

namespace detail {

struct TrainingExample {
  PreparedGraph prepared;
  Labeling truth;
  std::vector<double> psi_truth;
  std::vector<Labeling> cache;
};

inline void add_scaled(std::vector<double>& acc, std::span<const double> v, double scale) {
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += scale * v[i];
}

}  // namespace detail

/// Checks that a corpus can be trained on: labeled, void-free, and sharing
/// K, feat_dim and pfeat_dim.
inline void check_training_corpus(std::span<const SuperpixelGraph> corpus) {
  if (corpus.empty()) throw Error(Errc::InconsistentCorpus, "training corpus is empty");
  const auto& first = corpus.front();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& g = corpus[i];
    if (g.num_classes != first.num_classes || g.feat_dim != first.feat_dim || g.pfeat_dim != first.pfeat_dim)
      throw Error(Errc::InconsistentCorpus, "graph " + std::to_string(i) + " disagrees on K, feat_dim or pfeat_dim");
    if (!g.ground_truth) throw Error(Errc::MissingGroundTruth, "graph " + std::to_string(i) + " has no ground truth");
    for (Label l : *g.ground_truth)
      if (l == kVoidLabel) throw Error(Errc::InconsistentCorpus, "graph " + std::to_string(i) + " has void labels");
  }
}

/// 1-slack cutting-plane structured SVM with margin rescaling. Learning
/// always uses the plain pairwise term with alpha = 1; `cfg.inference.mode`
/// is ignored here.
inline TrainResult train(std::span<const SuperpixelGraph> corpus, const UnaryFeatureMap& map, const PairwiseLayout& layout,
                         const LossSpec& loss, const SsvmConfig& cfg) {
  if (!(cfg.C > 0.0)) throw Error(Errc::InvalidArgument, "C must be positive");
  if (!(cfg.epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
  check_training_corpus(corpus);
  const int K = corpus.front().num_classes;
  if (static_cast<int>(loss.class_weights.size()) != K) throw Error(Errc::DimensionMismatch, "loss weights do not match K");
  if (layout.channel_dim != std::max(1, corpus.front().pfeat_dim))
    throw Error(Errc::DimensionMismatch, "pairwise layout does not match the corpus");

  InferenceConfig oracle_cfg = cfg.inference;
  oracle_cfg.mode = PairwiseMode{PairwiseKind::Plain, 1.0};

  const std::size_t m = corpus.size();
  const std::size_t du = static_cast<std::size_t>(map.unary_dim());
  const std::size_t dim = du + static_cast<std::size_t>(layout.dim());

  std::vector<detail::TrainingExample> examples(m);
  detail::parallel_for(m, cfg.jobs, [&](std::size_t i) {
    auto& ex = examples[i];
    ex.prepared = prepare(corpus[i], map);
    ex.truth = *corpus[i].ground_truth;
    ex.psi_truth = joint_feature_map(ex.prepared, ex.truth, layout);
  });

  TrainResult result;
  auto& state = result.state;
  state.w = {std::vector<double>(du, 0.0), std::vector<double>(static_cast<std::size_t>(layout.dim()), 0.0)};
  std::vector<double> w(dim, 0.0);
  std::vector<double> multipliers;
  double lower_bound = 0.0;
  const auto start = std::chrono::steady_clock::now();

  // Aggregated constraint and its violation for the labelings `picks`.
  auto aggregate = [&](const std::vector<Labeling>& picks) {
    Constraint c{std::vector<double>(dim, 0.0), 0.0};
    for (std::size_t i = 0; i < m; ++i) {
      const auto psi = joint_feature_map(examples[i].prepared, picks[i], layout);
      detail::add_scaled(c.dpsi, psi, 1.0 / static_cast<double>(m));
      detail::add_scaled(c.dpsi, examples[i].psi_truth, -1.0 / static_cast<double>(m));
      c.loss += weighted_hamming(examples[i].truth, picks[i], loss) / static_cast<double>(m);
    }
    return c;
  };
  auto violation_of = [&](const Constraint& c) { return c.loss - detail::dot(w, c.dpsi); };

  // Per-example margin violation of one labeling under the current w.
  auto example_violation = [&](std::size_t i, const Labeling& y) {
    const auto psi = joint_feature_map(examples[i].prepared, y, layout);
    double d = 0.0;
    for (std::size_t k = 0; k < dim; ++k) d += w[k] * (psi[k] - examples[i].psi_truth[k]);
    return weighted_hamming(examples[i].truth, y, loss) - d;
  };

  state.status = TrainStatus::MaxIterationsReached;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    IterationRecord rec;
    rec.iteration = iter;
    rec.lower_bound = lower_bound;
    rec.xi = state.xi;

    std::vector<Labeling> picks(m);
    bool from_cache = false;
    if (cfg.use_cache && !state.working_set.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        picks[i] = examples[i].truth;
        double best = 0.0;
        for (const auto& y : examples[i].cache) {
          const double v = example_violation(i, y);
          if (v > best) {
            best = v;
            picks[i] = y;
          }
        }
      }
      const auto cached = aggregate(picks);
      from_cache = violation_of(cached) > state.xi + cfg.epsilon;
    }

    if (!from_cache) {
      const WeightVector current = WeightVector::split(w, du);
      detail::parallel_for(m, cfg.jobs, [&](std::size_t i) {
        auto inst = build_instance(examples[i].prepared, current, layout, oracle_cfg.mode, nullptr);
        absorb_loss(inst, examples[i].truth, loss);
        InferenceResult r;
        try {
          r = solve(inst, oracle_cfg);
        } catch (const Error& e) {
          if (e.code() == Errc::StateSpaceTooLarge) throw;
          throw Error(Errc::InferenceFailure, e.what());
        }
        picks[i] = std::move(r.labels);
      });
      // An approximate oracle may miss a cached labeling that is worse.
      for (std::size_t i = 0; i < m; ++i) {
        double best = example_violation(i, picks[i]);
        for (const auto& y : examples[i].cache) {
          const double v = example_violation(i, y);
          if (v > best) {
            best = v;
            picks[i] = y;
          }
        }
      }
    }

    auto cut = aggregate(picks);
    rec.violation = violation_of(cut);
    rec.from_cache = from_cache;
    rec.primal = 0.5 * detail::dot(w, w) + cfg.C * state.xi;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    state.history.push_back(rec);

    if (!from_cache && rec.violation <= state.xi + cfg.epsilon) {
      state.status = TrainStatus::Converged;
      break;
    }

    for (std::size_t i = 0; i < m; ++i) {
      if (picks[i] == examples[i].truth) continue;
      auto& cache = examples[i].cache;
      if (std::find(cache.begin(), cache.end(), picks[i]) == cache.end()) cache.push_back(picks[i]);
    }
    state.working_set.push_back(std::move(cut));
    auto qp = qp_solve(state.working_set, cfg.C, multipliers);
    w = qp.w;
    multipliers = qp.multipliers;
    state.xi = qp.xi;
    lower_bound = qp.dual;
  }

  state.w = WeightVector::split(w, du);
  result.model.unary_map = map;
  result.model.layout = layout;
  result.model.weights = state.w;
  result.model.mode = PairwiseMode{PairwiseKind::Plain, 1.0};
  return result;
}

}  // namespace cocrf
