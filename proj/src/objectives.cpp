// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wintr/errors.hpp"
#include "wintr/logging.hpp"

namespace wintr {

namespace {

void require_labels(const char* what, const Tensor& x, std::span<const int> labels) {
  if (x.rank() != 2 || x.dim(0) != labels.size()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(labels.size()) + " labels for rows of " +
                         shape_string(x.shape()));
  }
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_labels("cross_entropy", logits, labels);
  const auto rows = static_cast<Eigen::Index>(logits.dim(0));
  const auto classes = static_cast<int>(logits.dim(1));
  if (rows == 0) throw DimensionError("cross_entropy: empty batch");
  Tensor pick(logits.shape());
  auto w = pick.matrix();
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= classes) {
      throw LabelError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
    w(i, y) = 1.0 / static_cast<double>(rows);
  }
  return scale(sum(mul(log_softmax_lastdim(logits), pick)), -1.0);
}

Tensor supervised_contrastive(const Tensor& anchors, const Tensor& candidates, std::span<const int> anchor_labels,
                              std::span<const int> candidate_labels, double tau, StopGradSide stop_side) {
  if (!(tau > 0)) throw ParameterError("supervised_contrastive: tau must be positive, got " + std::to_string(tau));
  require_labels("supervised_contrastive anchors", anchors, anchor_labels);
  require_labels("supervised_contrastive candidates", candidates, candidate_labels);
  if (anchors.dim(1) != candidates.dim(1)) {
    throw DimensionError("supervised_contrastive: embedding widths differ, " + shape_string(anchors.shape()) +
                         " vs " + shape_string(candidates.shape()));
  }
  if (anchors.dim(0) < 1 || candidates.dim(0) < 2) {
    throw ParameterError("supervised_contrastive: needs at least 1 anchor and 2 candidates");
  }

  const auto n_anchor = static_cast<Eigen::Index>(anchors.dim(0));
  const auto n_cand = static_cast<Eigen::Index>(candidates.dim(0));
  // Weight 1 / (|P(a)| * #anchors-with-positives) on every positive pair.
  RowMatrix weights = RowMatrix::Zero(n_anchor, n_cand);
  int valid = 0;
  for (Eigen::Index a = 0; a < n_anchor; ++a) {
    int positives = 0;
    for (Eigen::Index c = 0; c < n_cand; ++c) {
      if (candidate_labels[static_cast<std::size_t>(c)] == anchor_labels[static_cast<std::size_t>(a)]) {
        weights(a, c) = 1.0;
        ++positives;
      }
    }
    if (positives > 0) {
      weights.row(a) /= static_cast<double>(positives);
      ++valid;
    }
  }
  if (valid == 0) {
    logging::warn("supervised_contrastive: no anchor has a positive candidate; loss is 0");
    return Tensor::scalar(0.0);
  }
  weights /= static_cast<double>(valid);

  const Tensor a = l2_normalize_lastdim(stop_side == StopGradSide::anchors ? stop_gradient(anchors) : anchors);
  const Tensor c = l2_normalize_lastdim(stop_side == StopGradSide::candidates ? stop_gradient(candidates) : candidates);
  const Tensor logp = log_softmax_lastdim(scale(matmul(a, transpose(c)), 1.0 / tau));
  return scale(sum(mul(logp, Tensor::from_matrix(weights))), -1.0);
}

Tensor loss_s_con(const Tensor& f_s_view_source, const Tensor& f_s_view_target, std::span<const int> source_labels,
                  std::span<const int> target_pseudolabels, double tau, bool stop_gradient_enabled) {
  return supervised_contrastive(f_s_view_target, f_s_view_source, target_pseudolabels, source_labels, tau,
                                stop_gradient_enabled ? StopGradSide::candidates : StopGradSide::none);
}

Tensor loss_t_con(const Tensor& f_t_view_source, const Tensor& f_t_view_target, std::span<const int> source_labels,
                  std::span<const int> target_pseudolabels, double tau, bool stop_gradient_enabled) {
  return supervised_contrastive(f_t_view_source, f_t_view_target, source_labels, target_pseudolabels, tau,
                                stop_gradient_enabled ? StopGradSide::candidates : StopGradSide::none);
}

std::vector<double> median_heuristic_bandwidths(const Tensor& f_a, const Tensor& f_b) {
  if (f_a.rank() != 2 || f_b.rank() != 2 || f_a.dim(1) != f_b.dim(1)) {
    throw DimensionError("median_heuristic_bandwidths: shapes " + shape_string(f_a.shape()) + " and " +
                         shape_string(f_b.shape()));
  }
  RowMatrix pooled(f_a.dim(0) + f_b.dim(0), f_a.dim(1));
  pooled << f_a.matrix(), f_b.matrix();
  std::vector<double> dists;
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) dists.push_back((pooled.row(i) - pooled.row(j)).norm());
  }
  double base = 1.0;
  if (!dists.empty()) {
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    if (*mid > 0) base = *mid;
  }
  return {0.5 * base, base, 2.0 * base};
}

Tensor mmd_transfer(const Tensor& f_a, const Tensor& f_b, std::span<const double> bandwidths, StopGradSide stop_side) {
  if (f_a.rank() != 2 || f_b.rank() != 2 || f_a.dim(1) != f_b.dim(1)) {
    throw DimensionError("mmd_transfer: shapes " + shape_string(f_a.shape()) + " and " + shape_string(f_b.shape()));
  }
  if (f_a.dim(0) < 2 || f_b.dim(0) < 2) throw ParameterError("mmd_transfer: each side needs at least 2 rows");
  if (bandwidths.empty()) throw ParameterError("mmd_transfer: no kernel bandwidths");
  for (double s : bandwidths) {
    if (!(s > 0)) throw ParameterError("mmd_transfer: bandwidth must be positive, got " + std::to_string(s));
  }
  const Tensor a = stop_side == StopGradSide::anchors ? stop_gradient(f_a) : f_a;
  const Tensor b = stop_side == StopGradSide::candidates ? stop_gradient(f_b) : f_b;
  auto kernel_mean = [&](const Tensor& x, const Tensor& y) {
    const Tensor d = pairwise_sq_dist(x, y);
    Tensor acc;
    for (double s : bandwidths) {
      Tensor k = exp(scale(d, -1.0 / (2.0 * s * s)));
      acc = acc.defined() ? add(acc, k) : k;
    }
    return scale(mean(acc), 1.0 / static_cast<double>(bandwidths.size()));
  };
  return sub(add(kernel_mean(a, a), kernel_mean(b, b)), scale(kernel_mean(a, b), 2.0));
}

Tensor mstn_center_transfer(const Tensor& f_a, std::span<const int> labels_a, const Tensor& f_b,
                            std::span<const int> labels_b, StopGradSide stop_side) {
  require_labels("mstn_center_transfer", f_a, labels_a);
  require_labels("mstn_center_transfer", f_b, labels_b);
  if (f_a.dim(1) != f_b.dim(1)) {
    throw DimensionError("mstn_center_transfer: widths differ, " + shape_string(f_a.shape()) + " vs " +
                         shape_string(f_b.shape()));
  }
  std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> members;
  for (std::size_t i = 0; i < labels_a.size(); ++i) members[labels_a[i]].first.push_back(i);
  for (std::size_t j = 0; j < labels_b.size(); ++j) members[labels_b[j]].second.push_back(j);
  std::vector<int> shared;
  for (const auto& [k, m] : members) {
    if (!m.first.empty() && !m.second.empty()) shared.push_back(k);
  }
  if (shared.empty()) {
    logging::warn("mstn_center_transfer: no class present on both sides; loss is 0");
    return Tensor::scalar(0.0);
  }
  const auto k = static_cast<Eigen::Index>(shared.size());
  RowMatrix avg_a = RowMatrix::Zero(k, static_cast<Eigen::Index>(f_a.dim(0)));
  RowMatrix avg_b = RowMatrix::Zero(k, static_cast<Eigen::Index>(f_b.dim(0)));
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto& [ia, ib] = members[shared[static_cast<std::size_t>(r)]];
    for (auto i : ia) avg_a(r, static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(ia.size());
    for (auto j : ib) avg_b(r, static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(ib.size());
  }
  const Tensor a = stop_side == StopGradSide::anchors ? stop_gradient(f_a) : f_a;
  const Tensor b = stop_side == StopGradSide::candidates ? stop_gradient(f_b) : f_b;
  const Tensor diff = sub(matmul(Tensor::from_matrix(avg_a), a), matmul(Tensor::from_matrix(avg_b), b));
  return scale(sum(mul(diff, diff)), 1.0 / static_cast<double>(k));
}

LossBundle total_loss(const LossTerms& terms, double lambda, double tau) {
  if (!(lambda >= 0)) throw ParameterError("total_loss: lambda must be >= 0, got " + std::to_string(lambda));
  auto value_or_zero = [](const Tensor& t) { return t.defined() ? t : Tensor::scalar(0.0); };
  LossBundle out;
  out.lambda = lambda;
  out.tau = tau;
  const Tensor ls = value_or_zero(terms.l_s), lt = value_or_zero(terms.l_t);
  const Tensor lsc = value_or_zero(terms.l_s_con), ltc = value_or_zero(terms.l_t_con);
  out.l_s = ls.item();
  out.l_t = lt.item();
  out.l_s_con = lsc.item();
  out.l_t_con = ltc.item();
  out.total_tensor = add(add(ls, lt), scale(add(lsc, ltc), lambda));
  out.total = out.total_tensor.item();
  return out;
}

}  // namespace wintr
