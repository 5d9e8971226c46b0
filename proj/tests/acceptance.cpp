// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cocrf/model.hpp"
#include "cocrf/pipeline.hpp"
#include "fixtures.hpp"
#include "support.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace cocrf;
using testing_support::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double dyadic(Rng& rng, double lo, double hi, double denom = 8.0) { return std::round(rng.uniform(lo, hi) * denom) / denom; }

// Random instance from the small family; `exact` snaps every number to a
// dyadic grid so that sums are exact and ties are real ties.
struct Instance {
  SuperpixelGraph graph;
  CrfModel model;
  CoOccurrenceTable table;
  double alpha = 1.0;
};

Instance random_instance(Rng& rng, bool exact, int max_nodes = 8) {
  Instance in;
  testing_support::GraphShape shape{1, max_nodes, 2, 3, rng.uniform_int(1, 3), rng.uniform_int(0, 2), 0.45};
  in.graph = testing_support::random_graph(rng, shape);
  const auto layout = PairwiseLayout::for_graph(in.graph, rng.coin());
  auto w = testing_support::random_weights(rng, in.graph, layout);
  if (exact) {
    for (auto& node : in.graph.nodes)
      for (auto& f : node.features) f = dyadic(rng, -2, 2, 4);
    for (auto& e : in.graph.edges)
      for (auto& f : e.pairwise_features) f = dyadic(rng, 0, 3, 4);
    for (auto& v : w.unary) v = dyadic(rng, -1, 1);
    for (auto& v : w.pairwise) v = dyadic(rng, -1, 1);
  }
  in.model = {UnaryFeatureMap::raw(in.graph.num_classes, in.graph.feat_dim), layout, w, {}, {}};
  in.table = testing_support::random_table(rng, in.graph.num_classes);
  in.alpha = std::vector<double>{0.5, 1.0, 1.5, 2.0}[rng.uniform_int(0, 3)];
  return in;
}

// Lexicographically first labeling whose value is within `tol` of the minimum.
template <typename F>
testing_support::Argmin enumerate_min(int n, int K, F&& value) {
  const auto all = testing_support::all_labelings(n, K);
  std::vector<double> v(all.size());
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < all.size(); ++i) low = std::min(low, v[i] = value(all[i]));
  const double tol = 1e-9 * std::max(1.0, std::abs(low));
  for (std::size_t i = 0; i < all.size(); ++i)
    if (v[i] <= low + tol) return {all[i], low};
  return {};
}

InferenceConfig exhaustive(PairwiseKind kind = PairwiseKind::Plain, double alpha = 1.0) {
  InferenceConfig cfg;
  cfg.algorithm = Algorithm::Exhaustive;
  cfg.mode = {kind, alpha};
  return cfg;
}

constexpr PairwiseKind kKinds[] = {PairwiseKind::Plain, PairwiseKind::Mutex, PairwiseKind::CoOccur};

// ---------------------------------------------------------------------------

Outcome exhaustive_oracle() {
  Outcome out;
  Rng rng(101);
  const auto start = Clock::now();
  int solves = 0;
  for (int trial = 0; trial < 500 && out.pass; ++trial) {
    const auto in = random_instance(rng, trial % 2 == 0);
    const auto& g = in.graph;
    const bool blocks = in.model.layout.relation_blocks;
    for (auto kind : kKinds) {
      const auto got = map_inference(g, in.model, exhaustive(kind, in.alpha), &in.table);
      const auto oracle = enumerate_min(static_cast<int>(g.nodes.size()), g.num_classes, [&](const Labeling& y) {
        return testing_support::oracle_energy(g, y, in.model.weights, blocks, kind, in.alpha, &in.table);
      });
      const double tol = 1e-9 * std::max(1.0, std::abs(oracle.value));
      out.require(got.labels == oracle.labels, "trial " + std::to_string(trial) + " " + std::string(to_string(kind)) +
                                                   ": labeling differs from enumeration");
      out.require(std::abs(got.energy - oracle.value) <= tol, "trial " + std::to_string(trial) + ": energy differs");
      ++solves;
    }
  }
  const double secs = seconds_since(start);
  out.require(secs < 60.0, "took " + fmt(secs) + " s");
  if (out.pass) out.detail = "500 graphs, " + std::to_string(solves) + " solves, " + fmt(secs) + " s";
  return out;
}

Outcome loss_augmented_oracle() {
  Outcome out;
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 500 && out.pass; ++trial) {
    const bool exact = trial % 2 == 0;
    const auto in = random_instance(rng, exact);
    const auto& g = in.graph;
    const int n = static_cast<int>(g.nodes.size());
    const auto truth = testing_support::random_labeling(rng, n, g.num_classes);
    LossSpec loss{testing_support::random_vector(rng, static_cast<std::size_t>(g.num_classes), 0.25, 2.0)};
    if (exact)
      for (auto& c : loss.class_weights) c = std::max(0.125, dyadic(rng, 0.25, 2.0));
    for (auto kind : kKinds) {
      const auto cfg = exhaustive(kind, in.alpha);
      const auto got = loss_augmented_inference(g, truth, in.model, loss, cfg, &in.table);
      const auto oracle = enumerate_min(n, g.num_classes, [&](const Labeling& y) {
        return testing_support::oracle_energy(g, y, in.model.weights, in.model.layout.relation_blocks, kind, in.alpha, &in.table) -
               testing_support::oracle_hamming(truth, y, loss.class_weights);
      });
      out.require(got.labels == oracle.labels, "trial " + std::to_string(trial) + ": labeling differs from brute force");
      const double recomputed = energy(g, got.labels, in.model.weights, in.model.unary_map, in.model.layout, cfg.mode, &in.table) -
                                weighted_hamming(truth, got.labels, loss);
      const double err = std::abs(recomputed - got.energy) / std::max(1.0, std::abs(recomputed));
      worst = std::max(worst, err);
      out.require(err <= 1e-9, "trial " + std::to_string(trial) + ": recomputed objective off by " + fmt(err));
    }
  }
  if (out.pass) out.detail = "500 graphs x 3 modes, worst relative objective error " + fmt(worst);
  return out;
}

Outcome submodular_exactness() {
  Outcome out;
  Rng rng(303);
  int instances = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n = rng.uniform_int(8, 12);
    auto g = testing_support::random_graph(rng, {n, n, 2, 2, 2, 1, 0.4});
    for (auto& node : g.nodes)
      for (auto& f : node.features) f = dyadic(rng, -2, 2, 4);
    for (auto& e : g.edges) e.pairwise_features[0] = dyadic(rng, 0, 3, 4);
    const auto layout = PairwiseLayout::for_graph(g);
    WeightVector w{testing_support::random_vector(rng, 4), testing_support::random_vector(rng, 4)};
    for (auto& v : w.unary) v = dyadic(rng, -1, 1);
    for (auto& v : w.pairwise) v = dyadic(rng, 0, 1);
    const CrfModel model{UnaryFeatureMap::raw(2, 2), layout, w, {}, {}};
    InferenceConfig cfg;
    cfg.algorithm = Algorithm::AlphaExpansion;
    const double expansion = map_inference(g, model, cfg).energy;
    const double exact = map_inference(g, model, exhaustive()).energy;
    out.require(expansion == exact, "trial " + std::to_string(trial) + ": expansion " + fmt(expansion, 17) + " vs " +
                                        fmt(exact, 17));
    ++instances;
  }
  if (out.pass) out.detail = std::to_string(instances) + " instances, n in [8, 12]";
  return out;
}

Outcome ssvm_certificate() {
  Outcome out;
  Rng rng(404);
  const int K = 3;
  std::vector<SuperpixelGraph> corpus;
  for (int i = 0; i < 30; ++i) {
    auto g = testing_support::random_graph(rng, {2, 8, K, K, K, 0, 0.35});
    const auto y = testing_support::random_labeling(rng, static_cast<int>(g.nodes.size()), K);
    for (std::size_t p = 0; p < y.size(); ++p)
      for (int k = 0; k < K; ++k) g.nodes[p].features[k] = (k == y[p] ? 1.0 : 0.0) + rng.uniform(-0.2, 0.2);
    g.ground_truth = y;
    corpus.push_back(std::move(g));
  }
  const auto map = UnaryFeatureMap::raw(K, K);
  const auto layout = PairwiseLayout::for_graph(corpus[0]);
  const auto loss = LossSpec::uniform(K);
  SsvmConfig cfg;
  cfg.inference.algorithm = Algorithm::Exhaustive;
  cfg.max_iterations = 200;
  cfg.epsilon = 1e-3;

  const auto start = Clock::now();
  const auto res = train(corpus, map, layout, loss, cfg);
  const double secs = seconds_since(start);
  const auto& h = res.state.history;
  out.require(res.state.status == TrainStatus::Converged, "did not converge within 200 iterations");
  out.require(h.size() <= 200, "ran " + std::to_string(h.size()) + " iterations");

  // Most violated aggregated constraint, recomputed by enumeration.
  const auto& w = res.model.weights;
  double violation = 0.0;
  for (const auto& g : corpus) {
    const double e_truth = testing_support::oracle_energy(g, *g.ground_truth, w, true, PairwiseKind::Plain, 1.0, nullptr);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& y : testing_support::all_labelings(static_cast<int>(g.nodes.size()), K)) {
      const double e = testing_support::oracle_energy(g, y, w, true, PairwiseKind::Plain, 1.0, nullptr);
      worst = std::max(worst, testing_support::oracle_hamming(*g.ground_truth, y, loss.class_weights) - (e - e_truth));
    }
    violation += worst / static_cast<double>(corpus.size());
  }
  out.require(violation <= res.state.xi + cfg.epsilon + 1e-9,
              "violation " + fmt(violation, 9) + " exceeds xi + eps = " + fmt(res.state.xi + cfg.epsilon, 9));

  for (std::size_t t = 1; t < h.size(); ++t)
    out.require(h[t].lower_bound >= h[t - 1].lower_bound - 1e-9 * std::max(1.0, std::abs(h[t - 1].lower_bound)),
                "QP objective decreased at iteration " + std::to_string(h[t].iteration));

  int errors = 0;
  for (const auto& g : corpus) errors += map_inference(g, res.model, exhaustive()).labels != *g.ground_truth;
  out.require(errors == 0, std::to_string(errors) + " training graphs mislabeled");
  out.require(secs < 300.0, "took " + fmt(secs) + " s");
  if (out.pass)
    out.detail = std::to_string(h.size()) + " iterations, violation " + fmt(violation, 4) + " <= xi " + fmt(res.state.xi, 4) +
                 " + 1e-3, " + fmt(secs) + " s";
  return out;
}

Outcome cooccurrence_correctness() {
  Outcome out;
  const auto t = build_cooccurrence(testing_support::four_image_corpus());
  struct Count {
    Relation r;
    Label a, b;
    std::int64_t n, ni;
    std::optional<double> g;
  };
  const Count expected[] = {
      {Relation::Above, 0, 1, 4, 2, 2.0},         {Relation::Below, 0, 1, 4, 1, 4.0},
      {Relation::LeftOf, 0, 1, 4, 0, std::nullopt}, {Relation::RightOf, 0, 1, 4, 0, std::nullopt},
      {Relation::Below, 1, 0, 4, 2, 2.0},         {Relation::LeftOf, 1, 2, 2, 2, 1.0},
      {Relation::RightOf, 2, 1, 2, 2, 1.0},       {Relation::RightOf, 0, 2, 2, 1, 2.0},
      {Relation::Above, 0, 2, 2, 0, std::nullopt},
  };
  for (const auto& c : expected) {
    const std::string at = "relation " + std::to_string(index(c.r)) + " (" + std::to_string(c.a) + "," + std::to_string(c.b) + ")";
    out.require(t.coexist(c.a, c.b) == c.n, "N at " + at);
    out.require(t.adjacent(c.r, c.a, c.b) == c.ni, "N^i at " + at);
    out.require(t.frequency(c.r, c.a, c.b) == static_cast<double>(c.ni) / static_cast<double>(c.n), "f at " + at);
    out.require(t.multiplier(c.r, c.a, c.b) == c.g, "g at " + at);
  }
  try {
    t.check_invariants();
  } catch (const Error& e) {
    out.require(false, e.what());
  }

  Rng rng(505);
  int fixtures = 0;
  for (int trial = 0; trial < 300; ++trial) {
    // Symmetry on tables built from random labeled corpora.
    std::vector<SuperpixelGraph> corpus;
    const int K = rng.uniform_int(2, 3);
    for (int i = 0; i < rng.uniform_int(1, 5); ++i) {
      auto g = testing_support::random_graph(rng, {1, 6, K, K, 2, 0, 0.5});
      g.ground_truth = testing_support::random_labeling(rng, static_cast<int>(g.nodes.size()), K);
      corpus.push_back(std::move(g));
    }
    const auto built = build_cooccurrence(corpus);
    for (Label a = 0; a < K; ++a)
      for (Label b = 0; b < K; ++b) {
        out.require(built.coexist(a, b) == built.coexist(b, a), "coexist not symmetric");
        for (auto r : kAllRelations)
          out.require(built.adjacent(r, a, b) == built.adjacent(opposite(r), b, a), "relation counts not mirrored");
      }

    // Mutex MAP equals CoOccur MAP under the thresholded table.
    const auto& g = corpus.front();
    const auto layout = PairwiseLayout::for_graph(g);
    const CrfModel model{UnaryFeatureMap::raw(K, 2), layout, testing_support::random_weights(rng, g, layout), {}, {}};
    const double alpha = rng.uniform(0.5, 2.0);
    const auto table = rng.coin() ? built : testing_support::random_table(rng, K);
    const auto thresholded = table.thresholded();
    const auto mutex = map_inference(g, model, exhaustive(PairwiseKind::Mutex, alpha), &table);
    const auto cooccur = map_inference(g, model, exhaustive(PairwiseKind::CoOccur, alpha), &thresholded);
    out.require(mutex.labels == cooccur.labels && mutex.energy == cooccur.energy,
                "Mutex and thresholded CoOccur disagree on fixture " + std::to_string(trial));
    ++fixtures;
  }
  if (out.pass) out.detail = "hand counts exact, " + std::to_string(fixtures) + " Mutex/CoOccur fixtures agree";
  return out;
}

Outcome forbidden_pair_exclusion() {
  Outcome out;
  Rng rng(606);
  int checked = 0, plain_violations = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto in = random_instance(rng, false, 6);
    const double scale = std::pow(10.0, rng.uniform(0, 2));
    for (auto& v : in.model.weights.unary) v *= scale;
    const auto& g = in.graph;
    bool feasible = false;
    for (const auto& y : testing_support::all_labelings(static_cast<int>(g.nodes.size()), g.num_classes))
      if (!testing_support::contains_forbidden_pair(g, y, in.table)) {
        feasible = true;
        break;
      }
    if (!feasible) continue;
    ++checked;
    const auto got = map_inference(g, in.model, exhaustive(PairwiseKind::CoOccur, in.alpha), &in.table);
    out.require(!testing_support::contains_forbidden_pair(g, got.labels, in.table),
                "trial " + std::to_string(trial) + ": MAP uses a forbidden pair");
    plain_violations += testing_support::contains_forbidden_pair(g, map_inference(g, in.model, exhaustive()).labels, in.table);
  }
  out.require(checked >= 100, "only " + std::to_string(checked) + " feasible fixtures");
  if (out.pass)
    out.detail = std::to_string(checked) + " fixtures, none forbidden (plain MAP would violate " +
                 std::to_string(plain_violations) + ")";
  return out;
}

Outcome metrics_fixtures() {
  Outcome out;
  for (const auto& f : testing_support::metrics_fixtures()) {
    const auto r = metrics(f.matrix(), f.foreground);
    out.require(std::abs(r.global_accuracy - f.global_accuracy) <= 1e-12, std::string(f.name) + ": S_a");
    out.require(std::abs(r.foreground_iou - f.foreground_iou) <= 1e-12, std::string(f.name) + ": S_o");
    out.require(std::abs(r.f_score - f.f_score) <= 1e-12, std::string(f.name) + ": F");
    out.require(std::abs(r.average_accuracy - f.average_accuracy) <= 1e-12, std::string(f.name) + ": average accuracy");
  }
  out.require(std::abs(f_measure(1.0, 1.0) - 1.0) <= 1e-12, "F(1, 1)");
  out.require(std::abs(f_measure(0.5, 0.5) - 0.5) <= 1e-12, "F(0.5, 0.5)");
  if (out.pass) out.detail = "5 fixtures to 1e-12, F(1,1) = 1, F(0.5,0.5) = 0.5";
  return out;
}

Outcome slic_counts() {
  Outcome out;
  RgbImage uniform(100, 100);
  std::fill(uniform.data.begin(), uniform.data.end(), 128);
  const auto r = slic_segment(uniform, {100, 10.0, 10});
  out.require(r.count >= 80 && r.count <= 120, "uniform image gave " + std::to_string(r.count) + " superpixels");
  std::vector<std::int64_t> area(static_cast<std::size_t>(r.count), 0);
  bool covered = r.ids.size() == 10000;
  for (int id : r.ids) {
    covered = covered && id >= 0 && id < r.count;
    if (id >= 0 && id < r.count) ++area[id];
  }
  for (auto a : area) covered = covered && a > 0;
  out.require(covered, "coverage");
  out.require(detail::connected_components(r.width, r.height, r.ids).second == r.count, "regions are not 4-connected");

  const auto natural = read_image(std::string(COCRF_TEST_DATA) + "/astronaut_256.png");
  const auto n = slic_segment(natural, {700, 10.0, 10});
  out.require(n.count >= 560 && n.count <= 840, "natural image gave " + std::to_string(n.count) + " superpixels");
  out.require(detail::connected_components(n.width, n.height, n.ids).second == n.count, "natural regions are not 4-connected");
  if (out.pass) out.detail = "uniform " + std::to_string(r.count) + "/100, natural " + std::to_string(n.count) + "/700";
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_files(const fs::path& a, const fs::path& b, std::string& why) {
  const auto fa = pipeline::list_files(a), fb = pipeline::list_files(b);
  if (fa.size() != fb.size()) {
    why = "file counts differ in " + a.string();
    return false;
  }
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (fa[i].filename() == "resolved.config") continue;
    if (fa[i].filename() != fb[i].filename() || slurp(fa[i]) != slurp(fb[i])) {
      why = fa[i].filename().string() + " differs";
      return false;
    }
  }
  return true;
}

// Shared by the pipeline and determinism criteria.
struct PipelineRun {
  fs::path root;
  pipeline::TrainOptions train;
  pipeline::PredictOptions predict;
  std::vector<pipeline::NamedGraph> train_set, validation, test;
  CoOccurrenceTable table;
  std::string model_text;
  bool ok = false;
};

PipelineRun g_run;

Outcome end_to_end() {
  Outcome out;
  auto& run = g_run;
  run.root = testing_support::scratch_dir("acceptance_pipeline");
  const auto start = Clock::now();
  testing_support::write_scenes(run.root, 50, 7);

  pipeline::SuperpixelOptions sp;
  sp.slic = {100, 20.0, 10};
  sp.num_classes = 3;
  sp.truth_dir = run.root / "truth";
  sp.color_features = true;
  sp.jobs = detail::default_jobs();
  const auto summary = pipeline::run_superpixels(run.root / "images", run.root / "graphs", sp);
  out.require(summary.failures() == 0 && summary.images.size() == 50, "superpixel stage failed on some images");
  double mean_count = 0.0;
  for (const auto& im : summary.images) mean_count += im.superpixels / 50.0;

  const auto corpus = pipeline::load_corpus(run.root / "graphs", sp.jobs);
  run.train_set.assign(corpus.begin(), corpus.begin() + 30);
  run.validation.assign(corpus.begin() + 30, corpus.begin() + 40);
  run.test.assign(corpus.begin() + 40, corpus.end());
  run.table = pipeline::run_stats(run.train_set);

  run.train.ssvm.C = 10.0;
  run.train.ssvm.jobs = 1;
  const auto trained = pipeline::run_train(pipeline::graphs_of(run.train_set), run.train);
  run.model_text = write_model(trained.model);
  write_text_file((run.root / "model.txt").string(), run.model_text);

  run.predict.inference.mode = {PairwiseKind::CoOccur, 1.0};
  run.predict.jobs = 1;
  const auto tuned = pipeline::run_tune_alpha(run.validation, trained.model, pipeline::parse_grid(pipeline::kDefaultAlphaGrid),
                                              run.predict, &run.table);
  run.predict.inference.mode.alpha = tuned.best_alpha;
  const auto preds = pipeline::predict_corpus(run.test, trained.model, run.predict, &run.table);
  pipeline::write_predictions(run.test, preds, run.root / "pred", run.root / "graphs");
  double slowest = 0.0;
  for (const auto& p : preds) slowest = std::max(slowest, p.seconds);

  const auto predicted = pipeline::load_corpus(run.root / "pred");
  const auto evaluated = pipeline::run_eval(predicted, run.test, pipeline::PixelSources{run.root / "graphs", run.root / "truth"});
  const auto sp_metrics = metrics(evaluated.superpixel);
  const auto px_metrics = metrics(*evaluated.pixel);
  const double secs = seconds_since(start);

  out.require(evaluated.images == 10, "evaluated " + std::to_string(evaluated.images) + " images");
  out.require(slowest < 1.0, "slowest prediction took " + fmt(slowest) + " s");
  out.require(secs < 600.0, "pipeline took " + fmt(secs) + " s");
  run.ok = out.pass;
  if (out.pass)
    out.detail = "50 images, " + fmt(mean_count, 4) + " superpixels/image, " + std::to_string(trained.state.history.size()) +
                 " SSVM iterations, alpha " + fmt(tuned.best_alpha) + ", test S_a " + fmt(sp_metrics.global_accuracy, 4) +
                 " (pixel " + fmt(px_metrics.global_accuracy, 4) + "), slowest image " + fmt(slowest * 1000, 3) + " ms, total " +
                 fmt(secs) + " s";
  return out;
}

Outcome determinism() {
  Outcome out;
  auto& run = g_run;
  if (!run.ok) {
    out.require(false, "pipeline run unavailable");
    return out;
  }
  std::string why;
  // Same images, more threads: identical graph files.
  pipeline::SuperpixelOptions sp;
  sp.slic = {100, 20.0, 10};
  sp.num_classes = 3;
  sp.truth_dir = run.root / "truth";
  sp.color_features = true;
  sp.jobs = 1;
  pipeline::run_superpixels(run.root / "images", run.root / "graphs_again", sp);
  out.require(same_files(run.root / "graphs", run.root / "graphs_again", why), why);

  auto train = run.train;
  train.ssvm.jobs = 3;
  const auto again = pipeline::run_train(pipeline::graphs_of(run.train_set), train);
  const auto text = write_model(again.model);
  out.require(text == run.model_text, "model bytes differ between runs");

  auto predict = run.predict;
  predict.jobs = 3;
  const auto preds = pipeline::predict_corpus(run.test, again.model, predict, &run.table);
  pipeline::write_predictions(run.test, preds, run.root / "pred_again", run.root / "graphs");
  out.require(same_files(run.root / "pred", run.root / "pred_again", why), why);
  if (out.pass) out.detail = "graphs, model (" + std::to_string(text.size()) + " bytes) and predictions byte-identical";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exhaustive-oracle-equivalence", exhaustive_oracle},
      {"loss-augmented-oracle", loss_augmented_oracle},
      {"submodular-exactness", submodular_exactness},
      {"ssvm-certificate", ssvm_certificate},
      {"cooccurrence-correctness", cooccurrence_correctness},
      {"forbidden-pair-exclusion", forbidden_pair_exclusion},
      {"metrics", metrics_fixtures},
      {"slic", slic_counts},
      {"end-to-end-pipeline", end_to_end},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %-30s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
