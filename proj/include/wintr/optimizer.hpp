// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "wintr/config.hpp"
#include "wintr/transformer.hpp"

namespace wintr {

/// SGD with heavy-ball momentum and L2 weight decay:
///   v <- momentum * v + (grad + weight_decay * p);  p <- p - lr * v
/// Classifier-head tensors use lr * classifier_lr_multiplier.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<NamedParameter> params, const OptimConfig& config);

  /// Learning rate of the backbone at training progress p in [0, 1].
  double learning_rate(double progress) const;
  /// One update using the gradients currently stored on the parameters.
  void step(double progress = 0.0);
  void zero_grad();

  const std::vector<NamedParameter>& parameters() const { return params_; }
  const std::vector<Vector>& velocity() const { return velocity_; }

 private:
  std::vector<NamedParameter> params_;
  std::vector<Vector> velocity_;
  OptimConfig config_;
};

}  // namespace wintr
