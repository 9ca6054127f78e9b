// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "wintr/autodiff.hpp"

namespace wintr::testing {

using LossFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Tape gradient vs central differences for every input entry; returns the
/// worst elementwise relative error |g - fd| / (|g| + 1e-8).
inline double gradient_error(const LossFn& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
  for (const auto& t : inputs) {
    Tensor handle = t;
    handle.set_requires_grad(true);
    handle.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(f(inputs));
  }
  double worst = 0;
  for (const auto& t : inputs) {
    Tensor handle = t;
    const Vector g = handle.grad();
    Vector fd(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double orig = handle.values()[i];
      handle.values()[i] = orig + h;
      const double up = f(inputs).item();
      handle.values()[i] = orig - h;
      const double down = f(inputs).item();
      handle.values()[i] = orig;
      fd[i] = (up - down) / (2 * h);
    }
    const Vector rel = (g - fd).cwiseAbs().array() / (g.cwiseAbs().array() + 1e-8);
    if (rel.size() > 0) worst = std::max(worst, rel.maxCoeff());
  }
  return worst;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Scalar> v(shape_size(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

inline std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> out(n);
  for (auto& y : out) y = pick(rng);
  return out;
}

/// sum(y * w) for a fixed random w, turning any output into a scalar whose
/// gradient exercises every output entry.
inline Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, random_tensor(y.shape(), rng)));
}

}  // namespace wintr::testing
