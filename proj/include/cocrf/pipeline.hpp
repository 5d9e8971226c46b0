#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cocrf/cooccur.hpp"
#include "cocrf/detail/parallel.hpp"
#include "cocrf/detail/text.hpp"
#include "cocrf/energy.hpp"
#include "cocrf/error.hpp"
#include "cocrf/eval.hpp"
#include "cocrf/features.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/image.hpp"
#include "cocrf/inference.hpp"
#include "cocrf/model.hpp"
#include "cocrf/ssvm.hpp"
#include "cocrf/superpixels.hpp"

// File-level stages shared by the command-line tool and the test suites.
namespace cocrf::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kGraphExt = ".spgraph";

/// Flat key/value record of every setting a run used. Keys are written in
/// sorted order so identical runs produce identical files.
using ResolvedConfig = std::map<std::string, std::string>;

inline std::string format_config(const ResolvedConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) out += k + " = " + v + "\n";
  return out;
}

/// Parses "key = value" lines ('#' comments and blank lines allowed).
inline ResolvedConfig parse_config(std::istream& in) {
  ResolvedConfig cfg;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::MalformedRecord, "expected 'key = value'", n);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(Errc::MalformedRecord, "empty key", n);
    cfg[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

inline ResolvedConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_config(in);
}

/// Regular files in `dir` with the given extension (any when empty), sorted by name.
inline std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext = {}) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(Errc::Io, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!ext.empty() && entry.path().extension() != ext) continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(Errc::Io, "cannot create directory " + dir.string());
}

struct NamedGraph {
  std::string name;  // file stem
  SuperpixelGraph graph;
};

inline std::vector<NamedGraph> load_corpus(const fs::path& dir, int jobs = 1) {
  const auto files = list_files(dir, kGraphExt);
  if (files.empty()) throw Error(Errc::Io, "no " + std::string(kGraphExt) + " files in " + dir.string());
  std::vector<NamedGraph> out(files.size());
  detail::parallel_for(files.size(), jobs, [&](std::size_t i) {
    try {
      out[i] = {files[i].stem().string(), read_graph_file(files[i].string())};
    } catch (const Error& e) {
      throw Error(e.code(), files[i].filename().string() + ": " + e.what(), e.line());
    }
  });
  return out;
}

inline std::vector<SuperpixelGraph> graphs_of(const std::vector<NamedGraph>& corpus) {
  std::vector<SuperpixelGraph> out;
  out.reserve(corpus.size());
  for (const auto& c : corpus) out.push_back(c.graph);
  return out;
}

// ---------------------------------------------------------------------------
// superpixels

struct SuperpixelOptions {
  SlicConfig slic;
  int num_classes = 2;
  std::optional<fs::path> truth_dir;  // <stem>.png class rasters
  PairwiseFeatureSpec pairwise;
  bool pairwise_features = true;  // false leaves pfeat_dim at 0
  bool color_features = false;    // mean LUV + color histogram as node features
  int jobs = 1;
};

struct ImageOutcome {
  std::string name;
  std::string error;  // empty on success
  int superpixels = 0;
};

struct SuperpixelSummary {
  std::vector<ImageOutcome> images;
  std::vector<std::string> skipped;  // files that are not PNG or PPM images

  int failures() const {
    return static_cast<int>(std::count_if(images.begin(), images.end(), [](const auto& o) { return !o.error.empty(); }));
  }
};

inline ResolvedConfig describe(const SuperpixelOptions& o) {
  std::string channels;
  for (auto c : o.pairwise.channels) channels += (channels.empty() ? "" : ",") + std::string(channel_name(c));
  return {{"command", "superpixels"},
          {"slic.target", std::to_string(o.slic.target_count)},
          {"slic.compactness", detail::format_real(o.slic.compactness)},
          {"slic.iterations", std::to_string(o.slic.max_iterations)},
          {"classes", std::to_string(o.num_classes)},
          {"truth", o.truth_dir ? o.truth_dir->string() : ""},
          {"pairwise.channels", o.pairwise_features ? channels : "none"},
          {"pairwise.hist_bins", std::to_string(o.pairwise.hist_bins)},
          {"pairwise.lbp_radius", std::to_string(o.pairwise.lbp_radius)},
          {"color_features", o.color_features ? "true" : "false"}};
}

/// Graph for one image: geometry, optional pairwise and color features, and
/// the majority ground-truth class per superpixel when `truth` is given.
inline SuperpixelGraph build_graph(const RgbImage& image, const LabelRaster& raster, const SuperpixelOptions& o,
                                   const GrayRaster* truth) {
  auto g = make_skeleton(raster, o.num_classes);
  if (o.pairwise_features) fill_pairwise_features(g, raster, image, o.pairwise);
  if (o.color_features) {
    const auto desc = describe_regions(raster, image, o.pairwise);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      auto& f = g.nodes[i].features;
      f.assign(desc[i].mean_luv.begin(), desc[i].mean_luv.end());
      f.insert(f.end(), desc[i].color_hist.begin(), desc[i].color_hist.end());
    }
    g.feat_dim = 3 + 3 * o.pairwise.hist_bins;
  }
  if (truth) {
    for (int v : truth->values)
      if (v != kVoidLabel && (v < 0 || v >= o.num_classes))
        throw Error(Errc::DimensionMismatch, "ground-truth class " + std::to_string(v) + " outside 0..K-1");
    g.ground_truth = project_labels(raster, *truth);
  }
  return g;
}

/// Writes <stem>.spgraph and <stem>.png (16-bit superpixel ids) per image.
inline SuperpixelSummary run_superpixels(const fs::path& images_dir, const fs::path& out_dir, const SuperpixelOptions& o) {
  if (o.num_classes < 2) throw Error(Errc::InvalidArgument, "classes must be at least 2");
  if (o.slic.target_count < 1) throw Error(Errc::InvalidArgument, "superpixel target must be positive");
  if (!(o.slic.compactness > 0.0)) throw Error(Errc::InvalidArgument, "compactness must be positive");
  if (o.pairwise_features && o.pairwise.channels.empty())
    throw Error(Errc::InvalidArgument, "at least one pairwise channel is required");
  SuperpixelSummary summary;
  std::vector<fs::path> images;
  for (const auto& f : list_files(images_dir)) {
    if (is_supported_image(f.string()))
      images.push_back(f);
    else
      summary.skipped.push_back(f.filename().string());
  }
  if (images.empty()) throw Error(Errc::Io, "no images found in " + images_dir.string());
  ensure_directory(out_dir);
  summary.images.resize(images.size());
  detail::parallel_for(images.size(), o.jobs, [&](std::size_t i) {
    auto& outcome = summary.images[i];
    outcome.name = images[i].stem().string();
    try {
      const auto image = read_image(images[i].string());
      const auto raster = slic_segment(image, o.slic);
      std::optional<GrayRaster> truth;
      if (o.truth_dir) truth = read_png_gray((*o.truth_dir / (outcome.name + ".png")).string());
      const auto g = build_graph(image, raster, o, truth ? &*truth : nullptr);
      write_text_file((out_dir / (outcome.name + kGraphExt)).string(), write_graph(g));
      write_png_gray16((out_dir / (outcome.name + ".png")).string(), to_gray(raster));
      outcome.superpixels = raster.count;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  });
  write_text_file((out_dir / "resolved.config").string(), format_config(describe(o)));
  return summary;
}

// ---------------------------------------------------------------------------
// stats

inline CoOccurrenceTable run_stats(const std::vector<NamedGraph>& corpus) { return build_cooccurrence(graphs_of(corpus)); }

// ---------------------------------------------------------------------------
// train

enum class UnaryChoice { Auto, Raw, Svm };

struct TrainOptions {
  SsvmConfig ssvm;
  bool inverse_frequency_loss = true;
  UnaryChoice unary = UnaryChoice::Auto;
  bool standardize = true;
  bool relation_blocks = true;
  double svm_reg = 1e-3;
  std::vector<std::string> pairwise_channels;  // names recorded in the model; defaulted from pfeat_dim
};

inline ResolvedConfig describe(const TrainOptions& o) {
  const char* unary = o.unary == UnaryChoice::Auto ? "auto" : o.unary == UnaryChoice::Raw ? "raw" : "svm";
  std::string channels;
  for (const auto& c : o.pairwise_channels) channels += (channels.empty() ? "" : ",") + c;
  return {{"command", "train"},
          {"c", detail::format_real(o.ssvm.C)},
          {"epsilon", detail::format_real(o.ssvm.epsilon)},
          {"max_iterations", std::to_string(o.ssvm.max_iterations)},
          {"algorithm", std::string(to_string(o.ssvm.inference.algorithm))},
          {"max_sweeps", std::to_string(o.ssvm.inference.max_sweeps)},
          {"restarts", std::to_string(o.ssvm.inference.restarts)},
          {"seed", std::to_string(o.ssvm.seed)},
          {"loss", o.inverse_frequency_loss ? "inverse" : "uniform"},
          {"unary", unary},
          {"standardize", o.standardize ? "true" : "false"},
          {"relations", o.relation_blocks ? "4" : "1"},
          {"svm_reg", detail::format_real(o.svm_reg)},
          {"cache", o.ssvm.use_cache ? "true" : "false"},
          {"pairwise.channels", channels}};
}

inline std::vector<std::string> default_channel_names(int pfeat_dim) {
  if (pfeat_dim == 0) return {"boundary"};
  if (pfeat_dim == 4) return {"boundary", "luv", "hist", "lbp"};
  std::vector<std::string> out;
  for (int i = 0; i < pfeat_dim; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

struct TrainOutcome {
  CrfModel model;
  TrainingState state;
};

inline TrainOutcome run_train(const std::vector<SuperpixelGraph>& corpus, const TrainOptions& o) {
  check_training_corpus(corpus);
  const int K = corpus.front().num_classes;
  const bool svm = o.unary == UnaryChoice::Svm || (o.unary == UnaryChoice::Auto && K > 2);
  if (svm && corpus.front().feat_dim == 0) throw Error(Errc::InvalidArgument, "svm unary map needs node features");
  auto map = fit_unary_map(corpus, svm ? UnaryMode::SvmConfidence : UnaryMode::RawIndicator, o.svm_reg, o.ssvm.seed,
                           o.standardize);
  const auto layout = PairwiseLayout::for_graph(corpus.front(), o.relation_blocks);
  const auto loss = o.inverse_frequency_loss ? LossSpec::inverse_frequency(corpus, K) : LossSpec::uniform(K);
  auto result = train(corpus, map, layout, loss, o.ssvm);
  const int pf = corpus.front().pfeat_dim;
  result.model.pairwise_channels = o.pairwise_channels.empty() ? default_channel_names(pf) : o.pairwise_channels;
  if (static_cast<int>(result.model.pairwise_channels.size()) != std::max(1, pf))
    throw Error(Errc::DimensionMismatch, "pairwise channel names do not match pfeat_dim");
  return {std::move(result.model), std::move(result.state)};
}

inline std::string training_log_csv(const TrainingState& s) {
  using detail::format_real;
  std::string out = "iteration,lower_bound,primal,max_violation,xi,seconds,from_cache\n";
  for (const auto& r : s.history)
    out += std::to_string(r.iteration) + "," + format_real(r.lower_bound) + "," + format_real(r.primal) + "," +
           format_real(r.violation) + "," + format_real(r.xi) + "," + format_real(r.seconds) + "," +
           (r.from_cache ? "1" : "0") + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  InferenceConfig inference;  // inference.mode carries kind and alpha
  int jobs = 1;
};

inline ResolvedConfig describe(const PredictOptions& o) {
  return {{"command", "predict"},
          {"pairwise_mode", std::string(to_string(o.inference.mode.kind))},
          {"alpha", detail::format_real(o.inference.mode.alpha)},
          {"algorithm", std::string(to_string(o.inference.algorithm))},
          {"max_sweeps", std::to_string(o.inference.max_sweeps)},
          {"restarts", std::to_string(o.inference.restarts)},
          {"seed", std::to_string(o.inference.seed)}};
}

inline void check_predict_options(const PredictOptions& o, const CoOccurrenceTable* table) {
  if (!(o.inference.mode.alpha > 0.0) || !std::isfinite(o.inference.mode.alpha))
    throw Error(Errc::InvalidArgument, "alpha must lie in (0, inf)");
  if (o.inference.mode.kind != PairwiseKind::Plain && table == nullptr)
    throw Error(Errc::MissingTable, std::string(to_string(o.inference.mode.kind)) + " mode needs --cooccur");
}

struct Prediction {
  std::string name;
  Labeling labels;
  double energy = 0.0;
  double seconds = 0.0;
};

inline std::vector<Prediction> predict_corpus(const std::vector<NamedGraph>& corpus, const CrfModel& model,
                                              const PredictOptions& o, const CoOccurrenceTable* table) {
  check_predict_options(o, table);
  std::vector<Prediction> out(corpus.size());
  detail::parallel_for(corpus.size(), o.jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      auto r = map_inference(corpus[i].graph, model, o.inference, table);
      out[i] = {corpus[i].name, std::move(r.labels), r.energy, 0.0};
    } catch (const Error& e) {
      throw Error(e.code(), corpus[i].name + ": " + e.what(), e.line());
    }
    out[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return out;
}

/// Writes each graph with its predicted labels as the label block, and, when
/// `rasters_dir` holds <stem>.png superpixel rasters, a 16-bit per-pixel class
/// raster <stem>.labels.png.
inline void write_predictions(const std::vector<NamedGraph>& corpus, const std::vector<Prediction>& predictions,
                              const fs::path& out_dir, const std::optional<fs::path>& rasters_dir) {
  ensure_directory(out_dir);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& p = predictions[i];
    write_text_file((out_dir / (p.name + kGraphExt)).string(), write_graph(corpus[i].graph, &p.labels));
    if (rasters_dir) {
      const auto raster = from_gray(read_png_gray((*rasters_dir / (p.name + ".png")).string()));
      if (raster.count != static_cast<int>(p.labels.size()))
        throw Error(Errc::DimensionMismatch, p.name + ": raster and graph disagree on superpixel count");
      GrayRaster classes{raster.width, raster.height, std::vector<int>(raster.ids.size())};
      for (std::size_t k = 0; k < raster.ids.size(); ++k) classes.values[k] = p.labels[raster.ids[k]];
      write_png_gray16((out_dir / (p.name + ".labels.png")).string(), classes);
    }
  }
}

// ---------------------------------------------------------------------------
// eval

struct EvalOutcome {
  ConfusionMatrix superpixel;            // areas as multiplicities
  std::optional<ConfusionMatrix> pixel;  // when rasters were supplied
  int images = 0;
};

struct PixelSources {
  fs::path rasters_dir;  // <stem>.png superpixel ids
  fs::path truth_dir;    // <stem>.png per-pixel classes
};

/// Pairs predictions with ground truth by file stem. Ground truth comes from
/// the truth graphs' label blocks.
inline EvalOutcome run_eval(const std::vector<NamedGraph>& predictions, const std::vector<NamedGraph>& truth,
                            const std::optional<PixelSources>& pixels = std::nullopt) {
  std::map<std::string, const SuperpixelGraph*> by_name;
  for (const auto& t : truth) by_name[t.name] = &t.graph;
  if (predictions.empty()) throw Error(Errc::EmptyMatrix, "no predictions to evaluate");
  const int K = predictions.front().graph.num_classes;
  EvalOutcome out{ConfusionMatrix(K), std::nullopt, 0};
  if (pixels) out.pixel = ConfusionMatrix(K);
  for (const auto& p : predictions) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw Error(Errc::InconsistentCorpus, p.name + ": no matching ground-truth graph");
    const auto& t = *it->second;
    if (!p.graph.ground_truth) throw Error(Errc::MissingGroundTruth, p.name + ": prediction has no label block");
    if (t.num_classes != K || p.graph.num_classes != K) throw Error(Errc::InconsistentCorpus, p.name + ": class count differs");
    if (t.nodes.size() != p.graph.nodes.size()) throw Error(Errc::LengthMismatch, p.name + ": node count differs");
    accumulate(t, *p.graph.ground_truth, out.superpixel);
    if (pixels) {
      const auto raster = from_gray(read_png_gray((pixels->rasters_dir / (p.name + ".png")).string()));
      const auto gt = read_png_gray((pixels->truth_dir / (p.name + ".png")).string());
      accumulate_pixels(raster, gt, *p.graph.ground_truth, *out.pixel);
    }
    ++out.images;
  }
  return out;
}

// ---------------------------------------------------------------------------
// tune-alpha

struct AlphaScore {
  double alpha = 0.0;
  double global_accuracy = 0.0;
};

struct TuneOutcome {
  double best_alpha = 0.0;
  std::vector<AlphaScore> scores;
};

inline std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto tok = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto v = detail::try_parse_real(tok);
    if (!v || !(*v > 0.0) || !std::isfinite(*v))
      throw Error(Errc::InvalidArgument, "grid values must be positive reals, got '" + std::string(tok) + "'");
    grid.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return grid;
}

inline constexpr const char* kDefaultAlphaGrid = "0.5,1.0,1.5,2.0";

/// Picks the alpha with the highest validation S_a; ties go to the earlier
/// grid value.
inline TuneOutcome run_tune_alpha(const std::vector<NamedGraph>& validation, const CrfModel& model,
                                  const std::vector<double>& grid, PredictOptions o, const CoOccurrenceTable* table) {
  if (grid.empty()) throw Error(Errc::InvalidArgument, "alpha grid is empty");
  TuneOutcome out;
  double best = -1.0;
  for (double alpha : grid) {
    o.inference.mode.alpha = alpha;
    const auto preds = predict_corpus(validation, model, o, table);
    ConfusionMatrix cm(validation.front().graph.num_classes);
    for (std::size_t i = 0; i < validation.size(); ++i) accumulate(validation[i].graph, preds[i].labels, cm);
    const double sa = metrics(cm).global_accuracy;
    out.scores.push_back({alpha, sa});
    if (sa > best) {
      best = sa;
      out.best_alpha = alpha;
    }
  }
  return out;
}

inline std::string tune_csv(const TuneOutcome& t) {
  std::string out = "alpha,global_accuracy\n";
  for (const auto& s : t.scores) out += detail::format_real(s.alpha) + "," + detail::format_real(s.global_accuracy) + "\n";
  return out;
}

}  // namespace cocrf::pipeline
