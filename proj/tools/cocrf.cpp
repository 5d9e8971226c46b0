// cocrf: superpixel CRF segmentation with co-occurrence context.
//
//   cocrf superpixels --images DIR --out DIR [--truth DIR] [--classes K]
//   cocrf stats       --graphs DIR --out TABLE
//   cocrf train       --graphs DIR --out MODEL [--c C] [--loss inverse|uniform]
//   cocrf tune-alpha  --graphs DIR --model MODEL --cooccur TABLE --out CSV
//   cocrf predict     --graphs DIR --model MODEL --out DIR [--pairwise-mode M]
//   cocrf eval        --predictions DIR --truth DIR --out PREFIX
//
// Every subcommand accepts --config FILE with "key = value" lines naming its
// long flags; flags given on the command line win.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cocrf/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cocrf;
using namespace cocrf::pipeline;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fills options that were not given on the command line from a key = value
// file. Keys are long flag names without the leading dashes.
void apply_config_file(CLI::App& app, const std::string& path) {
  const auto cfg = read_config_file(path);
  for (const auto& [key, value] : cfg) {
    auto* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") throw UsageError("unknown config key '" + key + "' for " + app.get_name());
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string format_seconds(double s) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << s;
  return os.str();
}

// ---------------------------------------------------------------------------

struct Common {
  std::string config;
  int jobs = detail::default_jobs();
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value file with defaults for this subcommand");
  sub->add_option("--jobs", c.jobs, "worker threads for per-image stages")->check(CLI::PositiveNumber);
}

struct SuperpixelArgs {
  Common common;
  std::string images, out, truth, channels = "boundary,luv,hist,lbp";
  SuperpixelOptions opt;
};

int cmd_superpixels(SuperpixelArgs& a) {
  if (!a.truth.empty()) a.opt.truth_dir = a.truth;
  a.opt.jobs = a.common.jobs;
  if (a.channels == "none") {
    a.opt.pairwise_features = false;
    a.opt.pairwise.channels.clear();
  } else {
    a.opt.pairwise.channels.clear();
    for (const auto& name : split_list(a.channels)) a.opt.pairwise.channels.push_back(parse_channel(name));
  }
  const auto summary = run_superpixels(a.images, a.out, a.opt);
  for (const auto& s : summary.skipped) std::cerr << "warning: skipping " << s << " (not a PNG or PPM image)\n";
  for (const auto& img : summary.images) {
    if (img.error.empty())
      std::cout << img.name << ": " << img.superpixels << " superpixels\n";
    else
      std::cerr << "error: " << img.name << ": " << img.error << "\n";
  }
  return summary.failures() > 0 ? kData : kOk;
}

struct StatsArgs {
  Common common;
  std::string graphs, out;
  double smoothing = 0.0;
};

int cmd_stats(StatsArgs& a) {
  const auto corpus = load_corpus(a.graphs, a.common.jobs);
  auto table = run_stats(corpus);
  table.set_smoothing(a.smoothing);
  write_text_file(a.out, write_cooccurrence(table));
  write_text_file(a.out + ".config", format_config({{"command", "stats"},
                                                    {"graphs", a.graphs},
                                                    {"out", a.out},
                                                    {"smoothing", detail::format_real(a.smoothing)}}));
  std::cout << "co-occurrence table over " << corpus.size() << " graphs written to " << a.out << "\n";
  return kOk;
}

struct TrainArgs {
  Common common;
  std::string graphs, out, log, loss = "inverse", unary = "auto", algorithm = "expansion", channels;
  int relations = 4;
  bool no_standardize = false, no_cache = false;
  TrainOptions opt;
};

int cmd_train(TrainArgs& a) {
  if (!(a.opt.ssvm.C > 0.0)) throw UsageError("--c: C must be > 0");
  if (!(a.opt.ssvm.epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
  if (a.loss != "inverse" && a.loss != "uniform") throw UsageError("--loss must be inverse or uniform");
  if (a.relations != 1 && a.relations != 4) throw UsageError("--relations must be 1 or 4");
  if (a.unary == "auto")
    a.opt.unary = UnaryChoice::Auto;
  else if (a.unary == "raw")
    a.opt.unary = UnaryChoice::Raw;
  else if (a.unary == "svm")
    a.opt.unary = UnaryChoice::Svm;
  else
    throw UsageError("--unary must be auto, raw or svm");
  a.opt.inverse_frequency_loss = a.loss == "inverse";
  a.opt.relation_blocks = a.relations == 4;
  a.opt.standardize = !a.no_standardize;
  a.opt.ssvm.use_cache = !a.no_cache;
  a.opt.ssvm.inference.algorithm = parse_algorithm(a.algorithm);
  a.opt.ssvm.inference.seed = a.opt.ssvm.seed;
  a.opt.ssvm.jobs = a.common.jobs;
  a.opt.pairwise_channels = split_list(a.channels);
  if (a.log.empty()) a.log = a.out + ".log.csv";

  const auto corpus = load_corpus(a.graphs, a.common.jobs);
  const auto outcome = run_train(graphs_of(corpus), a.opt);
  write_text_file(a.out, write_model(outcome.model));
  write_text_file(a.log, training_log_csv(outcome.state));
  auto cfg = describe(a.opt);
  cfg["graphs"] = a.graphs;
  cfg["out"] = a.out;
  cfg["log"] = a.log;
  write_text_file(a.out + ".config", format_config(cfg));

  const auto& h = outcome.state.history;
  std::cout << "trained on " << corpus.size() << " graphs in " << h.size() << " iterations, xi "
            << detail::format_real(outcome.state.xi) << "\n";
  if (outcome.state.status == TrainStatus::MaxIterationsReached)
    std::cerr << "warning: reached --max-iterations before convergence; model is the best so far\n";
  return kOk;
}

struct PredictArgs {
  Common common;
  std::string graphs, model, out, mode = "plain", cooccur, algorithm = "expansion", rasters;
  PredictOptions opt;
};

int cmd_predict(PredictArgs& a) {
  a.opt.inference.mode.kind = parse_pairwise_kind(a.mode);
  a.opt.inference.algorithm = parse_algorithm(a.algorithm);
  a.opt.jobs = a.common.jobs;
  std::optional<CoOccurrenceTable> table;
  if (!a.cooccur.empty()) table = read_cooccurrence_file(a.cooccur);
  check_predict_options(a.opt, table ? &*table : nullptr);

  const auto model = read_model_file(a.model);
  const auto corpus = load_corpus(a.graphs, a.common.jobs);
  const auto predictions = predict_corpus(corpus, model, a.opt, table ? &*table : nullptr);
  std::optional<fs::path> rasters;
  if (!a.rasters.empty()) rasters = a.rasters;
  write_predictions(corpus, predictions, a.out, rasters);
  auto cfg = describe(a.opt);
  cfg["graphs"] = a.graphs;
  cfg["model"] = a.model;
  cfg["cooccur"] = a.cooccur;
  cfg["rasters"] = a.rasters;
  cfg["out"] = a.out;
  write_text_file((fs::path(a.out) / "resolved.config").string(), format_config(cfg));

  double slowest = 0.0;
  for (const auto& p : predictions) slowest = std::max(slowest, p.seconds);
  std::cout << "labeled " << predictions.size() << " graphs, slowest " << format_seconds(slowest) << " s\n";
  return kOk;
}

struct EvalArgs {
  Common common;
  std::string predictions, truth, out, rasters, truth_rasters;
  int foreground = -1;
};

int cmd_eval(EvalArgs& a) {
  if (a.rasters.empty() != a.truth_rasters.empty()) throw UsageError("--rasters and --truth-rasters go together");
  const auto preds = load_corpus(a.predictions, a.common.jobs);
  const auto truth = load_corpus(a.truth, a.common.jobs);
  std::optional<PixelSources> pixels;
  if (!a.rasters.empty()) pixels = PixelSources{a.rasters, a.truth_rasters};
  const auto outcome = run_eval(preds, truth, pixels);
  std::optional<Label> fg;
  if (a.foreground >= 0) fg = a.foreground;

  const auto sp = metrics(outcome.superpixel, fg);
  std::string text = "superpixel resolution, " + std::to_string(outcome.images) + " images\n" + format_report_text(sp);
  write_text_file(a.out + ".csv", format_report_csv(sp));
  if (outcome.pixel) {
    const auto px = metrics(*outcome.pixel, fg);
    text += "\npixel resolution\n" + format_report_text(px);
    text += "\nquantization gap in S_a: " + detail::format_real(sp.global_accuracy - px.global_accuracy) + "\n";
    write_text_file(a.out + ".pixel.csv", format_report_csv(px));
  }
  write_text_file(a.out + ".txt", text);
  write_text_file(a.out + ".config", format_config({{"command", "eval"},
                                                    {"predictions", a.predictions},
                                                    {"truth", a.truth},
                                                    {"rasters", a.rasters},
                                                    {"truth_rasters", a.truth_rasters},
                                                    {"foreground", fg ? std::to_string(*fg) : ""},
                                                    {"out", a.out}}));
  std::cout << text;
  return kOk;
}

struct TuneArgs {
  Common common;
  std::string graphs, model, cooccur, out, mode = "cooccur", algorithm = "expansion", grid = kDefaultAlphaGrid;
  PredictOptions opt;
};

int cmd_tune_alpha(TuneArgs& a) {
  a.opt.inference.mode.kind = parse_pairwise_kind(a.mode);
  a.opt.inference.algorithm = parse_algorithm(a.algorithm);
  a.opt.jobs = a.common.jobs;
  const auto grid = parse_grid(a.grid);
  std::optional<CoOccurrenceTable> table;
  if (!a.cooccur.empty()) table = read_cooccurrence_file(a.cooccur);
  check_predict_options(a.opt, table ? &*table : nullptr);

  const auto model = read_model_file(a.model);
  const auto validation = load_corpus(a.graphs, a.common.jobs);
  const auto outcome = run_tune_alpha(validation, model, grid, a.opt, table ? &*table : nullptr);
  write_text_file(a.out, tune_csv(outcome));
  auto cfg = describe(a.opt);
  cfg.erase("alpha");
  cfg["command"] = "tune-alpha";
  cfg["grid"] = a.grid;
  cfg["graphs"] = a.graphs;
  cfg["model"] = a.model;
  cfg["cooccur"] = a.cooccur;
  cfg["out"] = a.out;
  write_text_file(a.out + ".config", format_config(cfg));
  for (const auto& s : outcome.scores)
    std::cout << "alpha " << detail::format_real(s.alpha) << ": S_a " << detail::format_real(s.global_accuracy) << "\n";
  std::cout << "best alpha " << detail::format_real(outcome.best_alpha) << "\n";
  return kOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::MissingTable: return kUsage;
    default: return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel CRF segmentation with co-occurrence context"};
  app.require_subcommand(1);

  SuperpixelArgs sp;
  auto* s = app.add_subcommand("superpixels", "SLIC over-segmentation into SPGRAPH skeletons and label rasters");
  add_common(s, sp.common);
  s->add_option("--images", sp.images, "directory of PNG/PPM images");
  s->add_option("--out", sp.out, "output directory");
  s->add_option("--truth", sp.truth, "directory of <stem>.png ground-truth class rasters");
  s->add_option("--classes", sp.opt.num_classes, "number of classes K");
  s->add_option("--target", sp.opt.slic.target_count, "superpixels per image");
  s->add_option("--compactness", sp.opt.slic.compactness, "SLIC compactness");
  s->add_option("--slic-iterations", sp.opt.slic.max_iterations, "SLIC assignment/update rounds");
  s->add_option("--channels", sp.channels, "pairwise channels: comma list of boundary,luv,hist,lbp, or none");
  s->add_option("--hist-bins", sp.opt.pairwise.hist_bins, "color histogram bins per channel");
  s->add_option("--lbp-radius", sp.opt.pairwise.lbp_radius, "LBP sampling radius");
  s->add_flag("--color-features", sp.opt.color_features, "store mean LUV and color histogram as node features");

  StatsArgs st;
  auto* t = app.add_subcommand("stats", "co-occurrence statistics from labeled graphs");
  add_common(t, st.common);
  t->add_option("--graphs", st.graphs, "directory of labeled .spgraph files");
  t->add_option("--out", st.out, "COOCCUR output file");
  t->add_option("--smoothing", st.smoothing, "additive smoothing of the multiplier");

  TrainArgs tr;
  auto* r = app.add_subcommand("train", "structured SVM training");
  add_common(r, tr.common);
  r->add_option("--graphs", tr.graphs, "directory of labeled .spgraph files");
  r->add_option("--out", tr.out, "MODEL output file");
  r->add_option("--log", tr.log, "per-iteration CSV log (default <out>.log.csv)");
  r->add_option("--c", tr.opt.ssvm.C, "regularization trade-off C > 0");
  r->add_option("--epsilon", tr.opt.ssvm.epsilon, "constraint violation tolerance");
  r->add_option("--max-iterations", tr.opt.ssvm.max_iterations, "cutting-plane iteration limit");
  r->add_option("--loss", tr.loss, "inverse (class-frequency weighted) or uniform Hamming loss");
  r->add_option("--unary", tr.unary, "auto, raw or svm unary features");
  r->add_option("--svm-reg", tr.opt.svm_reg, "regularization of the one-vs-all SVM");
  r->add_option("--relations", tr.relations, "pairwise weight blocks: 4 (per relation) or 1");
  r->add_option("--algorithm", tr.algorithm, "separation oracle: expansion, icm or exhaustive");
  r->add_option("--max-sweeps", tr.opt.ssvm.inference.max_sweeps, "oracle sweep limit");
  r->add_option("--restarts", tr.opt.ssvm.inference.restarts, "ICM restarts");
  r->add_option("--seed", tr.opt.ssvm.seed, "random seed");
  r->add_option("--channels", tr.channels, "pairwise channel names recorded in the model");
  r->add_flag("--no-standardize", tr.no_standardize, "use raw node features");
  r->add_flag("--no-cache", tr.no_cache, "disable the constraint cache");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "MAP labeling of graphs");
  add_common(p, pr.common);
  p->add_option("--graphs", pr.graphs, "directory of .spgraph files");
  p->add_option("--model", pr.model, "MODEL file");
  p->add_option("--out", pr.out, "output directory");
  p->add_option("--pairwise-mode", pr.mode, "plain, mutex or cooccur");
  p->add_option("--cooccur", pr.cooccur, "COOCCUR table (required for mutex and cooccur)");
  p->add_option("--alpha", pr.opt.inference.mode.alpha, "pairwise scale alpha > 0");
  p->add_option("--algorithm", pr.algorithm, "expansion, icm or exhaustive");
  p->add_option("--max-sweeps", pr.opt.inference.max_sweeps, "sweep limit");
  p->add_option("--restarts", pr.opt.inference.restarts, "ICM restarts");
  p->add_option("--seed", pr.opt.inference.seed, "random seed");
  p->add_option("--rasters", pr.rasters, "directory of <stem>.png superpixel rasters for per-pixel output");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "segmentation metrics");
  add_common(e, ev.common);
  e->add_option("--predictions", ev.predictions, "directory of predicted .spgraph files");
  e->add_option("--truth", ev.truth, "directory of ground-truth .spgraph files");
  e->add_option("--out", ev.out, "report prefix (<out>.txt, <out>.csv)");
  e->add_option("--foreground", ev.foreground, "foreground class for S_o and F");
  e->add_option("--rasters", ev.rasters, "superpixel rasters for pixel-exact evaluation");
  e->add_option("--truth-rasters", ev.truth_rasters, "per-pixel ground-truth rasters");

  TuneArgs tu;
  auto* a = app.add_subcommand("tune-alpha", "pick alpha by validation S_a");
  add_common(a, tu.common);
  a->add_option("--graphs", tu.graphs, "directory of labeled validation .spgraph files");
  a->add_option("--model", tu.model, "MODEL file");
  a->add_option("--cooccur", tu.cooccur, "COOCCUR table");
  a->add_option("--out", tu.out, "CSV of alpha against S_a");
  a->add_option("--pairwise-mode", tu.mode, "plain, mutex or cooccur");
  a->add_option("--grid", tu.grid, "comma-separated alpha values");
  a->add_option("--algorithm", tu.algorithm, "expansion, icm or exhaustive");
  a->add_option("--seed", tu.opt.inference.seed, "random seed");

  // Checked after the config file is applied, which may supply them.
  const std::map<CLI::App*, std::vector<std::string>> required{
      {s, {"--images", "--out"}},         {t, {"--graphs", "--out"}},
      {r, {"--graphs", "--out"}},         {p, {"--graphs", "--model", "--out"}},
      {e, {"--predictions", "--truth", "--out"}}, {a, {"--graphs", "--model", "--out"}}};

  try {
    app.parse(argc, argv);
    for (auto* sub : app.get_subcommands()) {
      auto* cfg = sub->get_option("--config");
      if (cfg->count() > 0) apply_config_file(*sub, cfg->as<std::string>());
      for (const auto& name : required.at(sub))
        if (sub->get_option(name)->count() == 0) throw UsageError(sub->get_name() + ": " + name + " is required");
    }
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kOk : kUsage;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err.code());
  }

  try {
    if (s->parsed()) return cmd_superpixels(sp);
    if (t->parsed()) return cmd_stats(st);
    if (r->parsed()) return cmd_train(tr);
    if (p->parsed()) return cmd_predict(pr);
    if (e->parsed()) return cmd_eval(ev);
    if (a->parsed()) return cmd_tune_alpha(tu);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what();
    if (err.line() > 0) std::cerr << " (line " << err.line() << ")";
    std::cerr << "\n";
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
