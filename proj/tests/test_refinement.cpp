// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "wintr/errors.hpp"
#include "wintr/refinement.hpp"

namespace wintr {
namespace {

using testing::random_tensor;
using testing::kmeans_oracle;
using testing::knn_oracle;

class RefinementOracle : public ::testing::TestWithParam<int> {
 protected:
  std::mt19937_64 rng{static_cast<std::uint64_t>(700 + GetParam())};
};

TEST_P(RefinementOracle, WeightedKmeans) {
  const std::size_t t = 5 + static_cast<std::size_t>(GetParam()) % 16;  // T <= 20
  const std::size_t c = 2 + static_cast<std::size_t>(GetParam()) % 3;   // C <= 4
  const Tensor f = random_tensor({t, 3}, rng), g = random_tensor({t, c}, rng, -3, 3);
  for (int rounds : {1, 2, 3}) {
    const PseudoLabelState s = weighted_kmeans_refine(f, g, rounds);
    EXPECT_EQ(s.labels, kmeans_oracle(f, g, rounds)) << "rounds " << rounds;
    EXPECT_EQ(s.round, rounds);
  }
}

TEST_P(RefinementOracle, Knn) {
  const std::size_t t = 6 + static_cast<std::size_t>(GetParam()) % 15;
  const int c = 2 + GetParam() % 3;
  const Tensor f = random_tensor({t, 4}, rng);
  std::vector<int> labels(t);
  std::uniform_int_distribution<int> pick(0, c - 1);
  for (auto& y : labels) y = pick(rng);
  for (int k : {1, 3, 5}) EXPECT_EQ(knn_refine(f, labels, k, c), knn_oracle(f, labels, k, c)) << "k " << k;
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, RefinementOracle, ::testing::Range(0, 20));

TEST(WeightedKmeans, SingleClassIsPlainMean) {
  const Tensor f({3, 2}, {1.0, 0.0, 0.0, 2.0, 3.0, 4.0});
  const PseudoLabelState s = weighted_kmeans_refine(f, Tensor({3, 1}, {0.0, 0.0, 0.0}), 1);
  EXPECT_EQ(s.labels, (std::vector<int>{0, 0, 0}));
  EXPECT_NEAR(s.centers(0, 0), (1.0 + 0.0 + 0.6) / 3, 1e-15);
  EXPECT_NEAR(s.centers(0, 1), (0.0 + 1.0 + 0.8) / 3, 1e-15);
}

TEST(WeightedKmeans, UniformLogitsTieToClassZero) {
  std::mt19937_64 rng(1);
  const Tensor f = random_tensor({7, 3}, rng);
  const PseudoLabelState s = weighted_kmeans_refine(f, Tensor({7, 4}), 1);
  EXPECT_EQ(s.labels, std::vector<int>(7, 0));
  for (Eigen::Index k = 1; k < 4; ++k) EXPECT_EQ(s.centers.row(k), s.centers.row(0));
}

Tensor two_clusters(std::mt19937_64& rng, std::vector<int>& truth) {
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> v;
  truth.clear();
  for (int i = 0; i < 12; ++i) {
    const int k = i % 2;
    truth.push_back(k);
    v.push_back((k == 0 ? 1.0 : -1.0) + noise(rng));
    v.push_back((k == 0 ? 1.0 : 0.5) + noise(rng));
  }
  return Tensor({12, 2}, v);
}

TEST(WeightedKmeans, SeparatedClustersRecoverMembership) {
  std::mt19937_64 rng(2);
  std::vector<int> truth;
  const Tensor f = two_clusters(rng, truth);
  std::vector<double> logits;
  for (int i = 0; i < 12; ++i) {
    // Roughly right, with two confidently wrong predictions.
    const bool flip = i == 3 || i == 4;
    const int guess = flip ? 1 - truth[static_cast<std::size_t>(i)] : truth[static_cast<std::size_t>(i)];
    logits.push_back(guess == 0 ? 1.5 : 0.0);
    logits.push_back(guess == 1 ? 1.5 : 0.0);
  }
  const Tensor g({12, 2}, logits);
  const PseudoLabelState s = weighted_kmeans_refine(f, g, 2);
  EXPECT_EQ(s.labels, truth);
  EXPECT_EQ(s.labels, kmeans_oracle(f, g, 2));

  // Idempotence: feeding the result back as confident logits changes nothing.
  std::vector<double> onehot;
  for (int y : s.labels) {
    onehot.push_back(y == 0 ? 10.0 : 0.0);
    onehot.push_back(y == 1 ? 10.0 : 0.0);
  }
  const PseudoLabelState again = weighted_kmeans_refine(f, Tensor({12, 2}, onehot), 2);
  EXPECT_EQ(again.labels, s.labels);
  EXPECT_EQ(again.changed, 0);
}

TEST(WeightedKmeans, CentersAreConvexCombinations) {
  std::mt19937_64 rng(5);
  const Tensor f = random_tensor({9, 4}, rng), g = random_tensor({9, 3}, rng, -2, 2);
  const PseudoLabelState s = weighted_kmeans_refine(f, g, 1);
  const Tensor fn = l2_normalize_lastdim(f), p = softmax_lastdim(g);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Vector w = p.matrix().col(k) / p.matrix().col(k).sum();
    EXPECT_GE(w.minCoeff(), 0.0);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    const RowMatrix rebuilt = w.transpose() * fn.matrix();
    EXPECT_LT((rebuilt - s.centers.row(k)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(WeightedKmeans, InactiveClassesAreSkipped) {
  // Class 2 has exactly zero probability mass.
  const double ninf = -std::numeric_limits<double>::infinity();
  const Tensor g({3, 3}, {1.0, 0.0, ninf, 0.0, 1.0, ninf, 0.5, 0.2, ninf});
  const Tensor f({3, 2}, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  const PseudoLabelState s = weighted_kmeans_refine(f, g, 1);
  EXPECT_FALSE(s.active[2]);
  for (int y : s.labels) EXPECT_NE(y, 2);
}

TEST(WeightedKmeans, Errors) {
  EXPECT_THROW(weighted_kmeans_refine(Tensor({3, 2}), Tensor({2, 2}), 1), DimensionError);
  EXPECT_THROW(weighted_kmeans_refine(Tensor({3, 2}), Tensor({3, 2}), 0), ParameterError);
}

TEST(Knn, IdenticalPointsFollowMajority) {
  const Tensor f({3, 2}, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
  const std::vector<int> labels = {0, 0, 1};
  EXPECT_EQ(knn_refine(f, labels, 2, 2), (std::vector<int>{0, 0, 0}));
}

TEST(Knn, KMustBeBelowT) {
  const Tensor f({3, 2}, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  const std::vector<int> labels = {0, 1, 0};
  EXPECT_THROW(knn_refine(f, labels, 3, 2), ParameterError);
  EXPECT_THROW(knn_refine(f, labels, 0, 2), ParameterError);
  const std::vector<int> bad = {0, 5, 0};
  EXPECT_THROW(knn_refine(f, bad, 1, 2), LabelError);
}

TEST(Representation, SelectsView) {
  ForwardOutput out;
  out.feat_src_view = Tensor({2, 3}, {1, 1, 1, 1, 1, 1});
  out.feat_tgt_view = Tensor({2, 3}, {2, 2, 2, 2, 2, 2});
  EXPECT_EQ(select_refinement_features(out, Representation::source_oriented).graph_id(),
            out.feat_src_view.graph_id());
  EXPECT_EQ(select_refinement_features(out, Representation::target_oriented).graph_id(),
            out.feat_tgt_view.graph_id());
  EXPECT_EQ(representation_from_string("target_oriented"), Representation::target_oriented);
  EXPECT_THROW(representation_from_string("sideways"), ConfigError);
}

TEST(PseudoLabelState, JsonDump) {
  std::mt19937_64 rng(3);
  const PseudoLabelState s = weighted_kmeans_refine(random_tensor({6, 2}, rng), random_tensor({6, 2}, rng), 2);
  const auto j = s.to_json();
  EXPECT_EQ(j.at("labels").size(), 6u);
  EXPECT_EQ(j.at("center_norms").size(), 2u);
  EXPECT_EQ(j.at("round"), 2);
  EXPECT_TRUE(j.contains("changed"));
}

}  // namespace
}  // namespace wintr
