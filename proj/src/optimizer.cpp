// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/optimizer.hpp"

#include <cmath>

#include "wintr/errors.hpp"

namespace wintr {

SgdOptimizer::SgdOptimizer(std::vector<NamedParameter> params, const OptimConfig& config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.base_lr > 0)) throw ConfigError("optimizer.base_lr: must be > 0");
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.push_back(Vector::Zero(static_cast<Eigen::Index>(p.tensor.size())));
}

double SgdOptimizer::learning_rate(double progress) const {
  if (config_.schedule == LrSchedule::constant) return config_.base_lr;
  return config_.base_lr * std::pow(1.0 + config_.decay_gamma * progress, -config_.decay_power);
}

void SgdOptimizer::step(double progress) {
  const double lr = learning_rate(progress);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    const double rate = params_[i].classifier ? lr * config_.classifier_lr_multiplier : lr;
    Vector& v = velocity_[i];
    if (p.has_grad()) {
      v = config_.momentum * v + p.impl()->grad + config_.weight_decay * p.values();
    } else {
      v = config_.momentum * v + config_.weight_decay * p.values();
    }
    p.values() -= rate * v;
  }
}

void SgdOptimizer::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace wintr
