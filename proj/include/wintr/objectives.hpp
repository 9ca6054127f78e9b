// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "wintr/autodiff.hpp"

namespace wintr {

/// Which input of a two-sided transfer loss is held fixed.
enum class StopGradSide { anchors, candidates, none };

/// Mean over the batch of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Label-supervised InfoNCE over l2-normalised embeddings:
///   -E_a E_{p in P(a)} log( exp(<a,p>/tau) / sum_c exp(<a,c>/tau) )
/// Anchors without a positive are skipped; if none remain the result is a
/// constant 0 and a warning is logged.
Tensor supervised_contrastive(const Tensor& anchors, const Tensor& candidates, std::span<const int> anchor_labels,
                              std::span<const int> candidate_labels, double tau,
                              StopGradSide stop_side = StopGradSide::candidates);

/// Source-side transfer: target features of the [src] view are pulled toward
/// the (frozen) source features of the same view.
Tensor loss_s_con(const Tensor& f_s_view_source, const Tensor& f_s_view_target, std::span<const int> source_labels,
                  std::span<const int> target_pseudolabels, double tau, bool stop_gradient_enabled = true);

/// Target-side transfer: source features of the [tgt] view are pulled toward
/// the (frozen) target features of the same view.
Tensor loss_t_con(const Tensor& f_t_view_source, const Tensor& f_t_view_target, std::span<const int> source_labels,
                  std::span<const int> target_pseudolabels, double tau, bool stop_gradient_enabled = true);

/// Median pairwise distance of the pooled rows times {0.5, 1, 2}.
std::vector<double> median_heuristic_bandwidths(const Tensor& f_a, const Tensor& f_b);

/// Biased squared MMD with k(x,y) = mean_s exp(-|x-y|^2 / (2 s^2)).
/// stop_side: anchors freezes f_a, candidates freezes f_b.
Tensor mmd_transfer(const Tensor& f_a, const Tensor& f_b, std::span<const double> bandwidths,
                    StopGradSide stop_side);

/// Mean over classes present on both sides of |mean_a(k) - mean_b(k)|^2.
/// Returns a constant 0 with a warning if no class is shared.
Tensor mstn_center_transfer(const Tensor& f_a, std::span<const int> labels_a, const Tensor& f_b,
                            std::span<const int> labels_b, StopGradSide stop_side);

struct LossTerms {
  Tensor l_s;
  Tensor l_t;
  Tensor l_s_con;
  Tensor l_t_con;
};

struct LossBundle {
  double l_s = 0;
  double l_t = 0;
  double l_s_con = 0;
  double l_t_con = 0;
  double total = 0;
  double lambda = 1.0;
  double tau = 0.1;
  Tensor total_tensor;  // differentiable l_s + l_t + lambda (l_s_con + l_t_con)
};

/// Undefined terms count as 0. Throws ParameterError for lambda < 0.
LossBundle total_loss(const LossTerms& terms, double lambda, double tau);

}  // namespace wintr
