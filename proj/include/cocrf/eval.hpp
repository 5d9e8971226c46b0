#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cocrf/detail/text.hpp"
#include "cocrf/error.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/image.hpp"
#include "cocrf/superpixels.hpp"

namespace cocrf {

/// Pixel counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes)
      : k_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

  int num_classes() const noexcept { return k_; }
  std::int64_t at(Label truth, Label pred) const { return counts_.at(static_cast<std::size_t>(truth) * k_ + pred); }

  void add(Label truth, Label pred, std::int64_t count) {
    if (truth < 0 || truth >= k_ || pred < 0 || pred >= k_) throw Error(Errc::DimensionMismatch, "label outside 0..K-1");
    counts_[static_cast<std::size_t>(truth) * k_ + pred] += count;
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  std::int64_t row_sum(Label k) const {
    std::int64_t s = 0;
    for (int j = 0; j < k_; ++j) s += at(k, j);
    return s;
  }

  std::int64_t col_sum(Label k) const {
    std::int64_t s = 0;
    for (int i = 0; i < k_; ++i) s += at(i, k);
    return s;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    if (o.k_ != k_) throw Error(Errc::DimensionMismatch, "confusion matrices differ in size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int k_ = 0;
  std::vector<std::int64_t> counts_;
};

/// Adds area(p) to cm[truth(p)][pred(p)] for every node; void truth is skipped.
inline ConfusionMatrix& accumulate(const SuperpixelGraph& g, std::span<const Label> y_pred, ConfusionMatrix& cm) {
  if (!g.ground_truth) throw Error(Errc::MissingGroundTruth, "graph has no ground truth");
  if (y_pred.size() != g.nodes.size()) throw Error(Errc::LengthMismatch, "prediction length differs from node count");
  if (cm.num_classes() != g.num_classes) throw Error(Errc::DimensionMismatch, "confusion matrix has wrong class count");
  for (std::size_t p = 0; p < g.nodes.size(); ++p) {
    const Label t = (*g.ground_truth)[p];
    if (t == kVoidLabel) continue;
    cm.add(t, y_pred[p], g.nodes[p].area);
  }
  return cm;
}

/// Pixel-exact accumulation: each pixel takes its superpixel's prediction
/// and is compared to the pixel ground-truth raster.
inline ConfusionMatrix& accumulate_pixels(const LabelRaster& raster, const GrayRaster& truth, std::span<const Label> y_pred,
                                          ConfusionMatrix& cm) {
  if (raster.width != truth.width || raster.height != truth.height)
    throw Error(Errc::DimensionMismatch, "label raster and truth raster differ in size");
  if (static_cast<int>(y_pred.size()) != raster.count) throw Error(Errc::LengthMismatch, "prediction length differs from superpixel count");
  for (std::size_t i = 0; i < raster.ids.size(); ++i) {
    const Label t = truth.values[i];
    if (t == kVoidLabel) continue;
    cm.add(t, y_pred[raster.ids[i]], 1);
  }
  return cm;
}

struct ClassMetrics {
  Label label = 0;
  bool present = false;  // class occurs in the ground truth
  double accuracy = 0.0;
  double iou = 0.0;
};

struct MetricsReport {
  double global_accuracy = 0.0;  // S_a
  double average_accuracy = 0.0;
  std::vector<ClassMetrics> classes;
  std::optional<Label> foreground;
  double foreground_iou = 0.0;  // S_o
  double background_iou = 0.0;
  double mean_fg_bg_iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::int64_t total = 0;
};

inline double f_measure(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// S_a, per-class and average accuracy, and (with a foreground class) S_o,
/// background IoU, precision, recall and F. Background is every other class.
inline MetricsReport metrics(const ConfusionMatrix& cm, std::optional<Label> foreground = std::nullopt) {
  const int K = cm.num_classes();
  MetricsReport r;
  r.total = cm.total();
  if (K == 0 || r.total == 0) throw Error(Errc::EmptyMatrix, "confusion matrix is empty");
  if (foreground && (*foreground < 0 || *foreground >= K)) throw Error(Errc::InvalidArgument, "foreground class outside 0..K-1");
  std::int64_t trace = 0;
  for (int k = 0; k < K; ++k) trace += cm.at(k, k);
  r.global_accuracy = static_cast<double>(trace) / static_cast<double>(r.total);
  double acc_sum = 0.0;
  int present = 0;
  for (int k = 0; k < K; ++k) {
    ClassMetrics c;
    c.label = k;
    const auto row = cm.row_sum(k);
    const auto uni = row + cm.col_sum(k) - cm.at(k, k);
    c.present = row > 0;
    if (c.present) {
      c.accuracy = static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
      acc_sum += c.accuracy;
      ++present;
    }
    c.iou = uni > 0 ? static_cast<double>(cm.at(k, k)) / static_cast<double>(uni) : 0.0;
    r.classes.push_back(c);
  }
  r.average_accuracy = present > 0 ? acc_sum / present : 0.0;
  if (foreground) {
    const Label f = *foreground;
    r.foreground = f;
    const double tp = static_cast<double>(cm.at(f, f));
    const double fn = static_cast<double>(cm.row_sum(f)) - tp;
    const double fp = static_cast<double>(cm.col_sum(f)) - tp;
    const double tn = static_cast<double>(r.total) - tp - fn - fp;
    r.foreground_iou = tp + fp + fn > 0.0 ? tp / (tp + fp + fn) : 0.0;
    r.background_iou = tn + fp + fn > 0.0 ? tn / (tn + fp + fn) : 0.0;
    r.mean_fg_bg_iou = 0.5 * (r.foreground_iou + r.background_iou);
    r.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    r.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    r.f_score = tp > 0.0 ? f_measure(r.precision, r.recall) : 0.0;
  }
  return r;
}

inline std::string format_report_text(const MetricsReport& r, std::span<const std::string> class_names = {}) {
  auto name = [&](Label k) { return k < static_cast<int>(class_names.size()) ? class_names[k] : "class " + std::to_string(k); };
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(16) << "class" << std::right << std::setw(10) << "accuracy" << std::setw(10) << "iou" << "\n";
  for (const auto& c : r.classes) {
    os << std::left << std::setw(16) << name(c.label) << std::right;
    if (c.present)
      os << std::setw(10) << c.accuracy;
    else
      os << std::setw(10) << "absent";
    os << std::setw(10) << c.iou << "\n";
  }
  os << std::left << std::setw(16) << "Average" << std::right << std::setw(10) << r.average_accuracy << "\n";
  os << std::left << std::setw(16) << "Global" << std::right << std::setw(10) << r.global_accuracy << "\n";
  if (r.foreground) {
    os << "\nforeground " << *r.foreground << "\n";
    os << std::left << std::setw(16) << "S_o" << std::right << std::setw(10) << r.foreground_iou << "\n";
    os << std::left << std::setw(16) << "bg IoU" << std::right << std::setw(10) << r.background_iou << "\n";
    os << std::left << std::setw(16) << "fg/bg mean IoU" << std::right << std::setw(10) << r.mean_fg_bg_iou << "\n";
    os << std::left << std::setw(16) << "precision" << std::right << std::setw(10) << r.precision << "\n";
    os << std::left << std::setw(16) << "recall" << std::right << std::setw(10) << r.recall << "\n";
    os << std::left << std::setw(16) << "F" << std::right << std::setw(10) << r.f_score << "\n";
  }
  return os.str();
}

/// One row per class, then Average and Global rows, then the foreground
/// scores when a foreground class was given. Empty cells mark absent values.
inline std::string format_report_csv(const MetricsReport& r) {
  using detail::format_real;
  std::string out = "row,accuracy,iou\n";
  for (const auto& c : r.classes)
    out += std::to_string(c.label) + "," + (c.present ? format_real(c.accuracy) : "") + "," + format_real(c.iou) + "\n";
  out += "Average," + format_real(r.average_accuracy) + ",\n";
  out += "Global," + format_real(r.global_accuracy) + ",\n";
  if (r.foreground) {
    out += "S_o,," + format_real(r.foreground_iou) + "\n";
    out += "background_iou,," + format_real(r.background_iou) + "\n";
    out += "fg_bg_mean_iou,," + format_real(r.mean_fg_bg_iou) + "\n";
    out += "precision," + format_real(r.precision) + ",\n";
    out += "recall," + format_real(r.recall) + ",\n";
    out += "F," + format_real(r.f_score) + ",\n";
  }
  return out;
}

}  // namespace cocrf
