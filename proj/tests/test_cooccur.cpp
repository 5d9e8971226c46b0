#include <gtest/gtest.h>

#include <sstream>

#include "cocrf/cooccur.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace cocrf;
using testing_support::Rng;

TEST(BuildCooccurrence, FourImageHandCounts) {
  const auto corpus = testing_support::four_image_corpus();
  const auto t = build_cooccurrence(corpus);
  t.check_invariants();
  EXPECT_EQ(t.coexist(0, 1), 4);
  EXPECT_EQ(t.coexist(0, 2), 2);
  EXPECT_EQ(t.coexist(1, 2), 2);
  EXPECT_EQ(t.adjacent(Relation::Above, 0, 1), 2);
  EXPECT_EQ(t.adjacent(Relation::Below, 1, 0), 2);
  EXPECT_EQ(t.adjacent(Relation::Below, 0, 1), 1);
  EXPECT_EQ(t.adjacent(Relation::LeftOf, 0, 1), 0);
  EXPECT_EQ(t.adjacent(Relation::RightOf, 0, 1), 0);
  EXPECT_EQ(t.adjacent(Relation::LeftOf, 1, 2), 2);
  EXPECT_EQ(t.adjacent(Relation::RightOf, 0, 2), 1);
  EXPECT_EQ(t.adjacent(Relation::LeftOf, 2, 0), 1);

  EXPECT_DOUBLE_EQ(t.frequency(Relation::Above, 0, 1), 0.5);
  EXPECT_EQ(t.multiplier(Relation::Above, 0, 1), 2.0);
  EXPECT_EQ(t.multiplier(Relation::Below, 0, 1), 4.0);
  EXPECT_EQ(t.multiplier(Relation::LeftOf, 0, 1), std::nullopt);
  EXPECT_EQ(t.multiplier(Relation::LeftOf, 1, 2), 1.0);
  EXPECT_EQ(t.multiplier(Relation::RightOf, 0, 2), 2.0);
  EXPECT_EQ(t.multiplier(Relation::Above, 1, 1), 0.0);
}

TEST(BuildCooccurrence, SingleImageCountsAreZeroOrOne) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = testing_support::random_graph(rng, {2, 12, 2, 5, 0, 0, 0.5});
    g.ground_truth = testing_support::random_labeling(rng, static_cast<int>(g.nodes.size()), g.num_classes);
    const auto t = build_cooccurrence(std::span<const SuperpixelGraph>(&g, 1));
    for (Label a = 0; a < g.num_classes; ++a)
      for (Label b = 0; b < g.num_classes; ++b) {
        EXPECT_LE(t.coexist(a, b), 1);
        for (auto r : kAllRelations) EXPECT_LE(t.adjacent(r, a, b), 1);
      }
  }
}

TEST(BuildCooccurrence, RandomCorporaSatisfyInvariants) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SuperpixelGraph> corpus;
    const int K = rng.uniform_int(2, 5);
    for (int i = 0; i < rng.uniform_int(1, 8); ++i) {
      auto g = testing_support::random_graph(rng, {1, 10, K, K, 0, 0, 0.5});
      auto y = testing_support::random_labeling(rng, static_cast<int>(g.nodes.size()), K);
      if (rng.coin(0.2)) y[0] = kVoidLabel;
      g.ground_truth = y;
      corpus.push_back(std::move(g));
    }
    const auto t = build_cooccurrence(corpus);
    EXPECT_NO_THROW(t.check_invariants());
    for (Label a = 0; a < K; ++a)
      for (Label b = 0; b < K; ++b) {
        EXPECT_EQ(t.coexist(a, b), t.coexist(b, a));
        for (auto r : kAllRelations) EXPECT_EQ(t.adjacent(r, a, b), t.adjacent(opposite(r), b, a));
      }
  }
}

TEST(BuildCooccurrence, RequiresGroundTruth) {
  auto corpus = testing_support::four_image_corpus();
  corpus[2].ground_truth.reset();
  try {
    build_cooccurrence(corpus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingGroundTruth);
  }
}

TEST(CooccurrenceTable, ThresholdedIsHardExclusion) {
  const auto t = build_cooccurrence(testing_support::four_image_corpus()).thresholded();
  t.check_invariants();
  for (Label a = 0; a < 3; ++a)
    for (Label b = 0; b < 3; ++b) {
      if (a == b) continue;
      for (auto r : kAllRelations) {
        const auto m = t.multiplier(r, a, b);
        if (m) {
          EXPECT_EQ(*m, 1.0);
        }
      }
    }
  EXPECT_EQ(t.multiplier(Relation::Below, 0, 1), 1.0);
  EXPECT_EQ(t.multiplier(Relation::LeftOf, 0, 1), std::nullopt);
}

TEST(CooccurrenceTable, SmoothingRemovesExclusion) {
  auto t = build_cooccurrence(testing_support::four_image_corpus());
  t.set_smoothing(1.0);
  EXPECT_EQ(t.multiplier(Relation::LeftOf, 0, 1), 5.0);
  EXPECT_THROW(t.set_smoothing(-1.0), Error);
}

TEST(CooccurrenceFile, RoundTrip) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = testing_support::random_table(rng, rng.uniform_int(1, 6));
    std::istringstream in(write_cooccurrence(t));
    EXPECT_EQ(parse_cooccurrence(in), t);
  }
}

TEST(CooccurrenceFile, RejectsBrokenInvariants) {
  std::istringstream asym("COOCCUR 1\nclasses 2\npair 0 1 1 2 0 0 0\n");
  EXPECT_THROW(parse_cooccurrence(asym), Error);
  std::istringstream header("COOCCUR 2\nclasses 2\n");
  try {
    parse_cooccurrence(header);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedHeader);
  }
}
