#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cocrf/error.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/image.hpp"
#include "cocrf/superpixels.hpp"

namespace cocrf {

// ---------------------------------------------------------------------------
// Standardization of raw unary features.

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  bool identity() const noexcept { return mean.empty(); }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (identity()) return out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean[i]) / scale[i];
    return out;
  }

  /// Zero mean, unit variance over all nodes of the corpus. Constant
  /// dimensions keep scale 1.
  static Standardizer fit(std::span<const SuperpixelGraph> corpus, int feat_dim) {
    Standardizer s{std::vector<double>(feat_dim, 0.0), std::vector<double>(feat_dim, 0.0)};
    double count = 0.0;
    for (const auto& g : corpus)
      for (const auto& node : g.nodes) {
        for (int k = 0; k < feat_dim; ++k) s.mean[k] += node.features[k];
        count += 1.0;
      }
    if (count == 0.0) return {};
    for (auto& m : s.mean) m /= count;
    for (const auto& g : corpus)
      for (const auto& node : g.nodes)
        for (int k = 0; k < feat_dim; ++k) s.scale[k] += (node.features[k] - s.mean[k]) * (node.features[k] - s.mean[k]);
    for (auto& v : s.scale) {
      v = std::sqrt(v / count);
      if (!(v > 1e-12)) v = 1.0;
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// One-vs-all linear SVM.

struct LinearSvmModel {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> weights;  // num_classes x dim, row-major
  std::vector<double> biases;

  std::span<const double> row(int k) const { return {weights.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)}; }

  /// Raw signed margins, one per class.
  std::vector<double> scores(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim) throw Error(Errc::DimensionMismatch, "SVM input has wrong dimension");
    std::vector<double> out(num_classes);
    for (int k = 0; k < num_classes; ++k) {
      auto w = row(k);
      out[k] = std::inner_product(w.begin(), w.end(), x.begin(), biases[k]);
    }
    return out;
  }

  Label predict(std::span<const double> x) const {
    auto s = scores(x);
    return static_cast<Label>(std::max_element(s.begin(), s.end()) - s.begin());
  }
};

struct SvmTrainOptions {
  int max_epochs = 200;
  double initial_step = 0.5;
  std::uint64_t seed = 1;
  /// Per-epoch objective, one vector per class (diagnostics).
  std::vector<std::vector<double>>* objective_trace = nullptr;
};

namespace detail {

inline double svm_objective(std::span<const std::vector<double>> xs, std::span<const double> ys,
                            std::span<const double> w, double b, double reg) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double margin = ys[i] * std::inner_product(w.begin(), w.end(), xs[i].begin(), b);
    hinge += std::max(0.0, 1.0 - margin);
  }
  const double norm2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  return 0.5 * reg * norm2 + hinge / static_cast<double>(xs.size());
}

}  // namespace detail

/// Trains K one-vs-all hinge-loss classifiers minimizing
/// reg/2 |w|^2 + mean hinge. Each epoch is one shuffled SGD pass; an epoch
/// that would raise the objective is discarded and retried with half the
/// step, so the per-class objective never increases.
inline LinearSvmModel train_linear_svm(std::span<const std::vector<double>> features, std::span<const Label> labels,
                                       int num_classes, double reg, const SvmTrainOptions& opt = {}) {
  if (features.size() != labels.size()) throw Error(Errc::LengthMismatch, "features and labels differ in length");
  if (num_classes < 2) throw Error(Errc::InvalidArgument, "need at least two classes");
  if (!(reg > 0.0)) throw Error(Errc::InvalidArgument, "regularization must be positive");
  std::vector<Label> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw Error(Errc::SingleClassCorpus, "training data contains fewer than two classes");
  for (Label l : distinct)
    if (l < 0 || l >= num_classes) throw Error(Errc::DimensionMismatch, "label outside 0..K-1");

  const int dim = static_cast<int>(features.front().size());
  for (const auto& x : features)
    if (static_cast<int>(x.size()) != dim) throw Error(Errc::DimensionMismatch, "ragged feature vectors");

  LinearSvmModel model{num_classes, dim, std::vector<double>(static_cast<std::size_t>(num_classes) * dim, 0.0),
                       std::vector<double>(num_classes, 0.0)};
  if (opt.objective_trace) opt.objective_trace->assign(num_classes, {});
  const std::size_t n = features.size();
  std::vector<double> ys(n);
  std::vector<std::size_t> order(n);

  for (int k = 0; k < num_classes; ++k) {
    for (std::size_t i = 0; i < n; ++i) ys[i] = labels[i] == k ? 1.0 : -1.0;
    std::vector<double> w(dim, 0.0), trial;
    double b = 0.0;
    double objective = detail::svm_objective(features, ys, w, b, reg);
    if (opt.objective_trace) (*opt.objective_trace)[k].push_back(objective);
    std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(k));
    double step = opt.initial_step;
    int stalled = 0;
    for (int epoch = 0; epoch < opt.max_epochs && stalled < 8; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      trial = w;
      double tb = b;
      const double eta = step / (1.0 + 0.1 * epoch);
      for (std::size_t i : order) {
        const double margin = ys[i] * std::inner_product(trial.begin(), trial.end(), features[i].begin(), tb);
        const double shrink = 1.0 - eta * reg;
        for (auto& v : trial) v *= shrink;
        if (margin < 1.0) {
          for (int d = 0; d < dim; ++d) trial[d] += eta * ys[i] * features[i][d];
          tb += eta * ys[i];
        }
      }
      const double next = detail::svm_objective(features, ys, trial, tb, reg);
      if (next <= objective) {
        stalled = (objective - next) <= 1e-12 * std::max(1.0, objective) ? stalled + 1 : 0;
        w.swap(trial);
        b = tb;
        objective = next;
      } else {
        step *= 0.5;
        ++stalled;
      }
      if (opt.objective_trace) (*opt.objective_trace)[k].push_back(objective);
    }
    std::copy(w.begin(), w.end(), model.weights.begin() + static_cast<std::ptrdiff_t>(k) * dim);
    model.biases[k] = b;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Unary feature map.

enum class UnaryMode { RawIndicator, SvmConfidence };

/// Maps a node and a label to the label-indexed block vector. The per-node
/// payload is the standardized raw feature vector, or the K SVM scores of it.
struct UnaryFeatureMap {
  UnaryMode mode = UnaryMode::RawIndicator;
  int num_classes = 2;
  int feat_dim = 0;
  Standardizer standardizer;
  std::optional<LinearSvmModel> svm;

  int payload_dim() const noexcept { return mode == UnaryMode::RawIndicator ? feat_dim : num_classes; }
  int unary_dim() const noexcept { return num_classes * payload_dim(); }

  std::vector<double> payload(std::span<const double> features) const {
    if (static_cast<int>(features.size()) != feat_dim)
      throw Error(Errc::DimensionMismatch, "node has " + std::to_string(features.size()) + " features, map expects " + std::to_string(feat_dim));
    auto x = standardizer.apply(features);
    if (mode == UnaryMode::RawIndicator) return x;
    if (!svm) throw Error(Errc::InvalidArgument, "SvmConfidence map has no SVM model");
    return svm->scores(x);
  }

  static UnaryFeatureMap raw(int num_classes, int feat_dim) {
    return {UnaryMode::RawIndicator, num_classes, feat_dim, {}, std::nullopt};
  }
};

/// Dense vector of length `dim` that is zero outside [offset, offset + values.size()).
struct BlockVector {
  std::size_t dim = 0;
  std::size_t offset = 0;
  std::vector<double> values;

  std::vector<double> dense() const {
    std::vector<double> out(dim, 0.0);
    std::copy(values.begin(), values.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    return out;
  }
};

inline BlockVector unary_map(const SuperpixelNode& node, Label label, const UnaryFeatureMap& map) {
  if (label < 0 || label >= map.num_classes) throw Error(Errc::DimensionMismatch, "label outside 0..K-1");
  auto values = map.payload(node.features);
  const auto block = static_cast<std::size_t>(map.payload_dim());
  return {static_cast<std::size_t>(map.unary_dim()), block * static_cast<std::size_t>(label), std::move(values)};
}

/// Fits standardization (and the SVM in SvmConfidence mode) on a labeled corpus.
inline UnaryFeatureMap fit_unary_map(std::span<const SuperpixelGraph> corpus, UnaryMode mode, double svm_reg = 1e-3,
                                     std::uint64_t seed = 1, bool standardize = true) {
  if (corpus.empty()) throw Error(Errc::InvalidArgument, "empty corpus");
  UnaryFeatureMap map;
  map.mode = mode;
  map.num_classes = corpus.front().num_classes;
  map.feat_dim = corpus.front().feat_dim;
  if (standardize) map.standardizer = Standardizer::fit(corpus, map.feat_dim);
  if (mode == UnaryMode::SvmConfidence) {
    std::vector<std::vector<double>> xs;
    std::vector<Label> ys;
    for (const auto& g : corpus) {
      if (!g.ground_truth) throw Error(Errc::MissingGroundTruth, "SVM training needs labeled graphs");
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if ((*g.ground_truth)[i] == kVoidLabel) continue;
        xs.push_back(map.standardizer.apply(g.nodes[i].features));
        ys.push_back((*g.ground_truth)[i]);
      }
    }
    SvmTrainOptions opt;
    opt.seed = seed;
    map.svm = train_linear_svm(xs, ys, map.num_classes, svm_reg, opt);
  }
  return map;
}

// ---------------------------------------------------------------------------
// Pairwise region features.

enum class PairwiseChannel { BoundaryLength, LuvColorDiff, ColorHistDiff, LbpDiff };

inline std::string_view channel_name(PairwiseChannel c) {
  switch (c) {
    case PairwiseChannel::BoundaryLength: return "boundary";
    case PairwiseChannel::LuvColorDiff: return "luv";
    case PairwiseChannel::ColorHistDiff: return "hist";
    case PairwiseChannel::LbpDiff: return "lbp";
  }
  return "?";
}

inline PairwiseChannel parse_channel(std::string_view name) {
  for (auto c : {PairwiseChannel::BoundaryLength, PairwiseChannel::LuvColorDiff, PairwiseChannel::ColorHistDiff,
                 PairwiseChannel::LbpDiff})
    if (channel_name(c) == name) return c;
  throw Error(Errc::InvalidArgument, "unknown pairwise channel '" + std::string(name) + "'");
}

struct PairwiseFeatureSpec {
  std::vector<PairwiseChannel> channels{PairwiseChannel::BoundaryLength, PairwiseChannel::LuvColorDiff,
                                        PairwiseChannel::ColorHistDiff, PairwiseChannel::LbpDiff};
  int hist_bins = 8;  // per RGB channel
  int lbp_radius = 1;

  int dim() const noexcept { return static_cast<int>(channels.size()); }
};

inline constexpr int kLbpBins = 59;

namespace detail {

// Uniform 8-neighbor LBP: the 58 patterns with at most two 0/1 transitions
// get their own bin, everything else shares bin 58.
inline const std::array<std::uint8_t, 256>& uniform_lbp_table() {
  static const auto table = [] {
    std::array<std::uint8_t, 256> t{};
    int next = 0;
    for (int code = 0; code < 256; ++code) {
      int transitions = 0;
      for (int b = 0; b < 8; ++b) transitions += ((code >> b) & 1) != ((code >> ((b + 1) % 8)) & 1);
      t[code] = static_cast<std::uint8_t>(transitions <= 2 ? next++ : kLbpBins - 1);
    }
    return t;
  }();
  return table;
}

inline double gray_at(const RgbImage& img, int r, int c) {
  r = std::clamp(r, 0, img.height - 1);
  c = std::clamp(c, 0, img.width - 1);
  const auto* px = img.at(r, c);
  return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
}

inline int lbp_bin(const RgbImage& img, int r, int c, int radius) {
  static constexpr int dr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr int dc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  const double center = gray_at(img, r, c);
  int code = 0;
  for (int k = 0; k < 8; ++k)
    if (gray_at(img, r + radius * dr[k], c + radius * dc[k]) >= center) code |= 1 << k;
  return uniform_lbp_table()[code];
}

inline double chi_squared(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double den = a[i] + b[i];
    if (den > 0.0) s += (a[i] - b[i]) * (a[i] - b[i]) / den;
  }
  return 0.5 * s;
}

}  // namespace detail

/// Per-region color and texture statistics.
struct RegionDescriptor {
  std::array<double, 3> mean_luv{};
  std::vector<double> color_hist;  // 3 * hist_bins, sums to 1
  std::vector<double> lbp_hist;    // kLbpBins, sums to 1
};

class RegionAccumulator {
 public:
  explicit RegionAccumulator(const PairwiseFeatureSpec& spec)
      : spec_(spec), hist_(3 * static_cast<std::size_t>(spec.hist_bins), 0.0), lbp_(kLbpBins, 0.0) {}

  void add(const RgbImage& img, int r, int c) {
    const auto* px = img.at(r, c);
    const auto luv = rgb_to_luv(px[0], px[1], px[2]);
    for (int k = 0; k < 3; ++k) {
      luv_[k] += luv[k];
      hist_[static_cast<std::size_t>(k) * spec_.hist_bins + px[k] * spec_.hist_bins / 256] += 1.0;
    }
    lbp_[detail::lbp_bin(img, r, c, spec_.lbp_radius)] += 1.0;
    count_ += 1.0;
  }

  RegionDescriptor finish() const {
    if (count_ == 0.0) throw Error(Errc::InvalidArgument, "region has no pixels");
    RegionDescriptor d;
    for (int k = 0; k < 3; ++k) d.mean_luv[k] = luv_[k] / count_;
    d.color_hist = hist_;
    for (auto& v : d.color_hist) v /= 3.0 * count_;
    d.lbp_hist = lbp_;
    for (auto& v : d.lbp_hist) v /= count_;
    return d;
  }

 private:
  PairwiseFeatureSpec spec_;
  std::array<double, 3> luv_{};
  std::vector<double> hist_;
  std::vector<double> lbp_;
  double count_ = 0.0;
};

inline std::vector<RegionDescriptor> describe_regions(const LabelRaster& raster, const RgbImage& image,
                                                      const PairwiseFeatureSpec& spec) {
  if (raster.width != image.width || raster.height != image.height)
    throw Error(Errc::DimensionMismatch, "raster and image sizes differ");
  std::vector<RegionAccumulator> acc(static_cast<std::size_t>(raster.count), RegionAccumulator(spec));
  for (int r = 0; r < raster.height; ++r)
    for (int c = 0; c < raster.width; ++c) acc[raster.at(r, c)].add(image, r, c);
  std::vector<RegionDescriptor> out;
  out.reserve(acc.size());
  for (const auto& a : acc) out.push_back(a.finish());
  return out;
}

/// Channel values in spec order. Every channel is symmetric in (p, q).
inline std::vector<double> combine_pairwise(const RegionDescriptor& p, const RegionDescriptor& q, double boundary_length,
                                            const PairwiseFeatureSpec& spec) {
  std::vector<double> out;
  out.reserve(spec.channels.size());
  for (auto ch : spec.channels) {
    switch (ch) {
      case PairwiseChannel::BoundaryLength: out.push_back(boundary_length); break;
      case PairwiseChannel::LuvColorDiff: {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (p.mean_luv[k] - q.mean_luv[k]) * (p.mean_luv[k] - q.mean_luv[k]);
        out.push_back(std::sqrt(s));
        break;
      }
      case PairwiseChannel::ColorHistDiff: out.push_back(detail::chi_squared(p.color_hist, q.color_hist)); break;
      case PairwiseChannel::LbpDiff: out.push_back(detail::chi_squared(p.lbp_hist, q.lbp_hist)); break;
    }
  }
  return out;
}

struct PixelRegion {
  std::vector<std::pair<int, int>> pixels;  // (row, col)
};

inline std::vector<double> pairwise_features(const PixelRegion& p, const PixelRegion& q, const RgbImage& image,
                                             const PairwiseFeatureSpec& spec) {
  if (p.pixels.empty() || q.pixels.empty()) throw Error(Errc::InvalidArgument, "regions must be non-empty");
  auto describe = [&](const PixelRegion& region) {
    RegionAccumulator acc(spec);
    for (auto [r, c] : region.pixels) acc.add(image, r, c);
    return acc.finish();
  };
  auto key = [&](int r, int c) { return static_cast<std::int64_t>(r) * image.width + c; };
  std::unordered_set<std::int64_t> in_q;
  for (auto [r, c] : q.pixels) in_q.insert(key(r, c));
  double boundary = 0.0;
  for (auto [r, c] : p.pixels) {
    const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& rc : nbr)
      if (rc[0] >= 0 && rc[0] < image.height && rc[1] >= 0 && rc[1] < image.width && in_q.count(key(rc[0], rc[1])))
        boundary += 1.0;
  }
  return combine_pairwise(describe(p), describe(q), boundary, spec);
}

/// Replaces the pairwise feature vectors of every edge of `g` (which must
/// have been built from `raster`).
inline void fill_pairwise_features(SuperpixelGraph& g, const LabelRaster& raster, const RgbImage& image,
                                   const PairwiseFeatureSpec& spec) {
  if (spec.channels.empty()) throw Error(Errc::InvalidArgument, "at least one pairwise channel is required");
  const auto desc = describe_regions(raster, image, spec);
  if (desc.size() != g.nodes.size()) throw Error(Errc::DimensionMismatch, "graph and raster disagree on node count");
  g.pfeat_dim = spec.dim();
  for (auto& e : g.edges) e.pairwise_features = combine_pairwise(desc[e.p], desc[e.q], e.boundary_length, spec);
}

}  // namespace cocrf
