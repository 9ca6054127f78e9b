// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "support/gradcheck.hpp"
#include "support/gradient_cases.hpp"
#include "support/oracles.hpp"
#include "wintr/errors.hpp"
#include "wintr/objectives.hpp"
#include "wintr/transformer.hpp"

namespace wintr {
namespace {

using testing::gradient_error;
using testing::random_labels;
using testing::random_tensor;
using testing::contrastive_oracle;
using testing::mmd_oracle;
using testing::mstn_oracle;

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  const std::vector<int> labels = {0, 1};
  EXPECT_NEAR(cross_entropy(Tensor({2, 2}, {0.0, 0.0, 0.0, 0.0}), labels).item(), std::log(2.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectLogits) {
  const std::vector<int> labels = {0};
  const double loss = cross_entropy(Tensor({1, 2}, {20.0, 0.0}), labels).item();
  // Absolute error is bounded by a few ulps of the logsumexp (about 20).
  EXPECT_NEAR(loss, std::log1p(std::exp(-20.0)), 1e-14);
  EXPECT_NEAR(loss, 2.06e-9, 1e-11);
}

TEST(CrossEntropy, BadLabelThrows) {
  const std::vector<int> labels = {2};
  EXPECT_THROW(cross_entropy(Tensor({1, 2}, {0.0, 0.0}), labels), LabelError);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHot) {
  std::mt19937_64 rng(1);
  Tensor logits = random_tensor({3, 4}, rng, -2, 2);
  logits.set_requires_grad(true);
  const std::vector<int> labels = {3, 0, 2};
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(cross_entropy(logits, labels));
  }
  const Tensor p = softmax_lastdim(Tensor(logits.shape(), logits.values()));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double expect = (p.at(i * 4 + k) - (static_cast<int>(k) == labels[i] ? 1.0 : 0.0)) / 3.0;
      EXPECT_NEAR(logits.grad()[static_cast<Eigen::Index>(i * 4 + k)], expect, 1e-15);
    }
  }
}

TEST(Contrastive, EqualEmbeddingsGiveLogTwo) {
  const Tensor e({1, 2}, {0.3, 0.4});
  const Tensor c({2, 2}, {0.3, 0.4, 0.3, 0.4});
  const std::vector<int> la = {0}, lc = {0, 1};
  EXPECT_NEAR(supervised_contrastive(e, c, la, lc, 0.1).item(), std::log(2.0), 1e-12);
}

TEST(Contrastive, HandEvaluatedValue) {
  const Tensor a({1, 2}, {1.0, 0.0});
  const Tensor c({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const std::vector<int> la = {0}, lc = {0, 1};
  EXPECT_NEAR(supervised_contrastive(a, c, la, lc, 1.0).item(), 0.313262, 1e-6);
  EXPECT_NEAR(supervised_contrastive(a, c, la, lc, 1.0).item(), -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)),
              1e-15);
}

TEST(Contrastive, Errors) {
  const Tensor a({1, 2}, {1.0, 0.0});
  const Tensor c({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const std::vector<int> la = {0}, lc = {0, 1}, none = {5};
  EXPECT_THROW(supervised_contrastive(a, c, la, lc, 0.0), ParameterError);
  EXPECT_THROW(supervised_contrastive(a, c, la, lc, -1.0), ParameterError);
  EXPECT_EQ(supervised_contrastive(a, c, none, lc, 0.1).item(), 0.0);
}

TEST(Contrastive, ScaleInvariance) {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor({4, 5}, rng), c = random_tensor({4, 5}, rng);
  const std::vector<int> la = {0, 1, 1, 2}, lc = {1, 0, 2, 2};
  const double base = supervised_contrastive(a, c, la, lc, 0.1).item();
  EXPECT_NEAR(supervised_contrastive(scale(a, 7.0), scale(c, 7.0), la, lc, 0.1).item(), base, 1e-10);
}

class LossOracle : public ::testing::TestWithParam<int> {
 protected:
  std::mt19937_64 rng{static_cast<std::uint64_t>(500 + GetParam())};
};

TEST_P(LossOracle, ContrastiveMatchesBruteForce) {
  const std::size_t n = 2 + GetParam() % 3, d = 3;
  const Tensor a = random_tensor({n, d}, rng), c = random_tensor({n, d}, rng);
  const auto la = random_labels(n, 2, rng), lc = random_labels(n, 2, rng);
  EXPECT_NEAR(supervised_contrastive(a, c, la, lc, 0.1).item(), contrastive_oracle(a, c, la, lc, 0.1), 1e-12);
  // Role wiring of the two transfer terms.
  EXPECT_NEAR(loss_s_con(c, a, lc, la, 0.1).item(), contrastive_oracle(a, c, la, lc, 0.1), 1e-12);
  EXPECT_NEAR(loss_t_con(c, a, lc, la, 0.1).item(), contrastive_oracle(c, a, lc, la, 0.1), 1e-12);
}

TEST_P(LossOracle, MmdMatchesBruteForce) {
  const Tensor a = random_tensor({3, 2}, rng), b = random_tensor({4, 2}, rng, 0.0, 2.0);
  const auto bw = median_heuristic_bandwidths(a, b);
  EXPECT_NEAR(mmd_transfer(a, b, bw, StopGradSide::none).item(), mmd_oracle(a, b, bw), 1e-12);
}

TEST_P(LossOracle, MstnMatchesBruteForce) {
  const Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
  const auto la = random_labels(4, 3, rng), lb = random_labels(4, 3, rng);
  EXPECT_NEAR(mstn_center_transfer(a, la, b, lb, StopGradSide::none).item(), mstn_oracle(a, la, b, lb), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, LossOracle, ::testing::Range(0, 20));

class LossGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LossGradient, MatchesCentralDifferences) {
  const testing::GradientCase c = testing::loss_cases()[GetParam()];
  for (int instance = 0; instance < 20; ++instance) {
    std::mt19937_64 rng(2000 + static_cast<std::uint64_t>(instance));
    EXPECT_LT(c.error(rng), 1e-4) << c.name << " instance " << instance;
  }
}

INSTANTIATE_TEST_SUITE_P(Losses, LossGradient, ::testing::Range<std::size_t>(0, testing::loss_cases().size()),
                         [](const auto& info) { return testing::loss_cases()[info.param].name; });

TEST(StopGradient, TransferTermsAreOneSided) {
  std::mt19937_64 rng(8);
  const std::vector<int> ys = {0, 1, 0}, yt = {1, 0, 0};
  for (int which = 0; which < 4; ++which) {
    Tensor src = random_tensor({3, 4}, rng), tgt = random_tensor({3, 4}, rng);
    src.set_requires_grad(true);
    tgt.set_requires_grad(true);
    Tape tape;
    {
      TapeScope scope(tape);
      const std::vector<double> bw = {0.5, 1.0, 2.0};
      Tensor loss;
      switch (which) {
        case 0: loss = loss_s_con(src, tgt, ys, yt, 0.1); break;
        case 1: loss = loss_t_con(src, tgt, ys, yt, 0.1); break;
        case 2: loss = mmd_transfer(tgt, src, bw, StopGradSide::candidates); break;
        default: loss = mstn_center_transfer(tgt, yt, src, ys, StopGradSide::candidates); break;
      }
      tape.backward(loss);
    }
    // loss_t_con freezes the target side; the others freeze the source side.
    const Tensor& frozen = which == 1 ? tgt : src;
    const Tensor& live = which == 1 ? src : tgt;
    EXPECT_EQ(frozen.grad().norm(), 0.0) << which;
    EXPECT_GT(live.grad().norm(), 0.0) << which;
  }
}

TEST(StopGradient, DisabledLetsGradientThrough) {
  std::mt19937_64 rng(9);
  Tensor src = random_tensor({3, 4}, rng), tgt = random_tensor({3, 4}, rng);
  src.set_requires_grad(true);
  const std::vector<int> ys = {0, 1, 0}, yt = {1, 0, 0};
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(loss_s_con(src, tgt, ys, yt, 0.1, false));
  }
  EXPECT_GT(src.grad().norm(), 0.0);
}

TEST(Mmd, IdenticalSetsGiveZero) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor({4, 3}, rng);
  const std::vector<double> bw = {0.5, 1.0, 2.0};
  EXPECT_NEAR(mmd_transfer(a, a, bw, StopGradSide::none).item(), 0.0, 1e-12);
}

TEST(Mmd, FarClustersApproachTwo) {
  const Tensor a({2, 2}, {0.0, 0.0, 0.0, 0.0});
  const Tensor b({2, 2}, {100.0, 0.0, 100.0, 0.0});
  const std::vector<double> bw = {0.5, 1.0, 2.0};
  EXPECT_NEAR(mmd_transfer(a, b, bw, StopGradSide::none).item(), 2.0, 1e-12);
}

TEST(Mmd, Errors) {
  const Tensor a({2, 2}, {0.0, 0.0, 1.0, 0.0});
  const std::vector<double> bad = {1.0, 0.0};
  EXPECT_THROW(mmd_transfer(a, a, bad, StopGradSide::none), ParameterError);
  const std::vector<double> ok = {1.0};
  EXPECT_THROW(mmd_transfer(Tensor({1, 2}, {0.0, 0.0}), a, ok, StopGradSide::none), ParameterError);
}

TEST(Mmd, MedianHeuristic) {
  const Tensor a({2, 1}, {0.0, 1.0}), b({1, 1}, {3.0});
  const auto bw = median_heuristic_bandwidths(a, b);  // distances 1, 2, 3 -> median 2
  EXPECT_EQ(bw, (std::vector<double>{1.0, 2.0, 4.0}));
  const Tensor z({2, 1}, {0.0, 0.0});
  EXPECT_EQ(median_heuristic_bandwidths(z, z), (std::vector<double>{0.5, 1.0, 2.0}));
}

TEST(Mstn, HandValues) {
  const std::vector<int> l = {0};
  EXPECT_DOUBLE_EQ(mstn_center_transfer(Tensor({1, 2}, {0.0, 0.0}), l, Tensor({1, 2}, {3.0, 4.0}), l,
                                        StopGradSide::none)
                       .item(),
                   25.0);
  const std::vector<int> la = {0, 0}, lb = {0};
  EXPECT_DOUBLE_EQ(mstn_center_transfer(Tensor({2, 2}, {1.0, 0.0, -1.0, 2.0}), la, Tensor({1, 2}, {0.0, 1.0}), lb,
                                        StopGradSide::none)
                       .item(),
                   0.0);
  const std::vector<int> other = {1};
  EXPECT_EQ(mstn_center_transfer(Tensor({1, 2}, {0.0, 0.0}), l, Tensor({1, 2}, {3.0, 4.0}), other,
                                 StopGradSide::none)
                .item(),
            0.0);
}

TEST(TotalLoss, Combination) {
  const LossTerms terms{Tensor::scalar(1.0), Tensor::scalar(2.0), Tensor::scalar(3.0), Tensor::scalar(4.0)};
  EXPECT_DOUBLE_EQ(total_loss(terms, 1.0, 0.1).total, 10.0);
  EXPECT_DOUBLE_EQ(total_loss(terms, 0.0, 0.1).total, 3.0);
  EXPECT_DOUBLE_EQ(total_loss(terms, 0.5, 0.1).total, 6.5);
  const LossBundle b = total_loss(terms, 1.0, 0.1);
  EXPECT_EQ(b.l_s_con, 3.0);
  EXPECT_EQ(b.lambda, 1.0);
  EXPECT_THROW(total_loss(terms, -0.1, 0.1), ParameterError);
  EXPECT_DOUBLE_EQ(total_loss(LossTerms{Tensor::scalar(1.0), {}, {}, {}}, 1.0, 0.1).total, 1.0);
}

// Parameters reachable only through the frozen branch get exactly zero
// gradient: the source batch and the source-side token through loss_s_con
// when the two branches run through separate one-layer models.
TEST(StopGradient, ModelBranchGetsNoGradient) {
  ModelConfig c;
  c.image_side = 8;
  c.embed_dim = 8;
  c.num_heads = 2;
  c.depth = 1;
  WinTrModel frozen_model(c, 1), live_model(c, 2);
  std::mt19937_64 rng(3);
  const Tensor xs = random_tensor({3, 1, 8, 8}, rng, 0, 1), xt = random_tensor({3, 1, 8, 8}, rng, 0, 1);
  const std::vector<int> ys = {0, 1, 1}, yt = {1, 0, 1};
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(loss_s_con(forward(frozen_model, xs).feat_src_view, forward(live_model, xt).feat_src_view, ys, yt,
                             0.1));
  }
  for (const auto& p : frozen_model.parameters()) EXPECT_FALSE(p.tensor.has_grad() && p.tensor.grad().norm() > 0) << p.name;
  EXPECT_GT(live_model.token_src.grad().norm(), 0.0);
}

}  // namespace
}  // namespace wintr
