#pragma once

// Small hand-built corpora shared by the unit and acceptance tests.

#include <tuple>
#include <vector>

#include "cocrf/eval.hpp"
#include "cocrf/graph.hpp"

namespace testing_support {

inline cocrf::SuperpixelGraph labeled_graph(int num_classes, const cocrf::Labeling& y,
                                            const std::vector<std::tuple<int, int, cocrf::Relation>>& edges) {
  cocrf::SuperpixelGraph g;
  g.num_classes = num_classes;
  for (std::size_t i = 0; i < y.size(); ++i) g.nodes.push_back({static_cast<int>(i), 0.0, 0.0, 1, {}});
  for (auto [p, q, r] : edges) g.edges.push_back({p, q, r, 1.0, {}});
  g.ground_truth = y;
  return g;
}

/// Four labeled images over three classes. Hand counts:
///   N(0,1) = 4, N(0,2) = 2, N(1,2) = 2
///   N^Above(0,1) = 2  (images 1, 2; image 1 realizes it twice)
///   N^Below(0,1) = 1  (image 3)
///   N^LeftOf(0,1) = N^RightOf(0,1) = 0
///   N^LeftOf(1,2) = 2  (images 2, 4)
///   N^RightOf(0,2) = 1 (image 4)
inline std::vector<cocrf::SuperpixelGraph> four_image_corpus() {
  using cocrf::Relation;
  return {
      labeled_graph(3, {0, 1, 0}, {{0, 1, Relation::Above}, {1, 2, Relation::Below}}),
      labeled_graph(3, {0, 1, 2}, {{0, 1, Relation::Above}, {1, 2, Relation::LeftOf}}),
      labeled_graph(3, {1, 0}, {{0, 1, Relation::Above}}),
      labeled_graph(3, {0, 1, 2}, {{0, 2, Relation::RightOf}, {1, 2, Relation::LeftOf}}),
  };
}

struct MetricsFixture {
  const char* name;
  int num_classes;
  std::vector<std::int64_t> counts;  // row-major, rows = truth
  cocrf::Label foreground;
  double global_accuracy;
  double average_accuracy;
  double foreground_iou;
  double f_score;

  cocrf::ConfusionMatrix matrix() const {
    cocrf::ConfusionMatrix cm(num_classes);
    for (int t = 0; t < num_classes; ++t)
      for (int p = 0; p < num_classes; ++p) cm.add(t, p, counts[static_cast<std::size_t>(t * num_classes + p)]);
    return cm;
  }
};

/// Confusion matrices with their metrics worked out by hand as fractions.
inline std::vector<MetricsFixture> metrics_fixtures() {
  return {
      // only diagonal mass
      {"perfect", 2, {50, 0, 0, 30}, 1, 1.0, 1.0, 1.0, 1.0},
      // 30% foreground, everything predicted background
      {"all_background", 2, {70, 0, 30, 0}, 1, 0.7, 0.5, 0.0, 0.0},
      // TP 45, FN 5, FP 10: S_o = 45/60, F = 90/105
      {"binary_mixed", 2, {40, 10, 5, 45}, 1, 85.0 / 100.0, (0.8 + 0.9) / 2.0, 45.0 / 60.0, 90.0 / 105.0},
      // class 2 never in the truth; foreground 0 with TP 9, FN 1, FP 2
      {"absent_class", 3, {9, 1, 0, 2, 3, 0, 0, 0, 0}, 0, 12.0 / 15.0, (0.9 + 0.6) / 2.0, 9.0 / 12.0, 18.0 / 21.0},
      // TP = FP = FN = 1: p = r = 0.5
      {"half_precision_recall", 2, {6, 1, 1, 1}, 1, 7.0 / 9.0, (6.0 / 7.0 + 0.5) / 2.0, 1.0 / 3.0, 0.5},
  };
}

}  // namespace testing_support
