// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

// Named finite-difference checks over random instances, shared by the unit
// tests and the acceptance run. Each case draws its own shapes and values
// from the generator and returns the worst relative gradient error.

#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "wintr/autodiff.hpp"
#include "wintr/objectives.hpp"

namespace wintr::testing {

struct GradientCase {
  std::string name;
  std::function<double(std::mt19937_64&)> error;
};

inline std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <class Op>
GradientCase unary_case(std::string name, Op op, double lo = -1.0, double hi = 1.0) {
  return {std::move(name), [op, lo, hi](std::mt19937_64& rng) {
            const Tensor a = random_tensor({draw(rng, 1, 4), draw(rng, 1, 5)}, rng, lo, hi);
            return gradient_error([op](const auto& in) { return probe(op(in[0])); }, {a});
          }};
}

template <class Op>
GradientCase binary_case(std::string name, Op op) {
  return {std::move(name), [op](std::mt19937_64& rng) {
            const Shape s{draw(rng, 1, 4), draw(rng, 1, 5)};
            const Tensor a = random_tensor(s, rng), b = random_tensor(s, rng);
            return gradient_error([op](const auto& in) { return probe(op(in[0], in[1])); }, {a, b});
          }};
}

inline std::vector<GradientCase> primitive_cases() {
  std::vector<GradientCase> cases;
  cases.push_back(binary_case("add", [](const Tensor& a, const Tensor& b) { return add(a, b); }));
  cases.push_back(binary_case("sub", [](const Tensor& a, const Tensor& b) { return sub(a, b); }));
  cases.push_back(binary_case("mul", [](const Tensor& a, const Tensor& b) { return mul(a, b); }));
  cases.push_back(unary_case("scale", [](const Tensor& a) { return scale(a, -2.5); }));
  cases.push_back(unary_case("exp", [](const Tensor& a) { return exp(a); }));
  cases.push_back(unary_case("log", [](const Tensor& a) { return log(a); }, 0.2, 2.0));
  cases.push_back(unary_case("gelu", [](const Tensor& a) { return gelu(a); }));
  cases.push_back({"relu", [](std::mt19937_64& rng) {
                     // Alternate signs, away from the kink.
                     Tensor r = random_tensor({draw(rng, 1, 4), draw(rng, 1, 5)}, rng, 0.1, 1.0);
                     for (Eigen::Index i = 0; i < r.values().size(); i += 2) r.values()[i] = -r.values()[i];
                     return gradient_error([](const auto& in) { return probe(relu(in[0])); }, {r});
                   }});
  cases.push_back(unary_case("sum", [](const Tensor& a) { return scale(sum(a), 1.7); }));
  cases.push_back(unary_case("mean", [](const Tensor& a) { return scale(mean(a), 1.7); }));
  cases.push_back({"matmul", [](std::mt19937_64& rng) {
                     const std::size_t m = draw(rng, 1, 4), k = draw(rng, 1, 5), n = draw(rng, 1, 4);
                     return gradient_error([](const auto& in) { return probe(matmul(in[0], in[1])); },
                                           {random_tensor({m, k}, rng), random_tensor({k, n}, rng)});
                   }});
  cases.push_back({"bmm", [](std::mt19937_64& rng) {
                     const std::size_t g = draw(rng, 1, 3), m = draw(rng, 1, 4), k = draw(rng, 1, 5),
                                       n = draw(rng, 1, 4);
                     return gradient_error([](const auto& in) { return probe(bmm(in[0], in[1])); },
                                           {random_tensor({g, m, k}, rng), random_tensor({g, k, n}, rng)});
                   }});
  cases.push_back({"pairwise_sq_dist", [](std::mt19937_64& rng) {
                     const std::size_t m = draw(rng, 1, 4), k = draw(rng, 1, 5), n = draw(rng, 1, 4);
                     return gradient_error([](const auto& in) { return probe(pairwise_sq_dist(in[0], in[1])); },
                                           {random_tensor({m, k}, rng), random_tensor({n, k}, rng)});
                   }});
  cases.push_back({"permute", [](std::mt19937_64& rng) {
                     const Tensor x = random_tensor({draw(rng, 1, 3), draw(rng, 1, 4), draw(rng, 1, 3)}, rng);
                     return gradient_error([](const auto& in) { return probe(permute(in[0], {2, 0, 1})); }, {x});
                   }});
  cases.push_back({"transpose", [](std::mt19937_64& rng) {
                     const Tensor x = random_tensor({draw(rng, 1, 3), draw(rng, 1, 4), draw(rng, 1, 3)}, rng);
                     const Tensor m = random_tensor({draw(rng, 1, 4), draw(rng, 1, 4)}, rng);
                     const auto f = [](const auto& in) { return probe(transpose(in[0])); };
                     return std::max(gradient_error(f, {x}), gradient_error(f, {m}));
                   }});
  cases.push_back({"reshape", [](std::mt19937_64& rng) {
                     const std::size_t a = draw(rng, 1, 3), b = draw(rng, 1, 4), c = draw(rng, 1, 3);
                     return gradient_error([&](const auto& in) { return probe(reshape(in[0], {a * b, c})); },
                                           {random_tensor({a, b, c}, rng)});
                   }});
  cases.push_back({"gather_rows", [](std::mt19937_64& rng) {
                     const std::size_t n = draw(rng, 1, 6);
                     std::vector<std::size_t> rows;
                     for (std::size_t i = 0; i < n + 2; ++i) rows.push_back(draw(rng, 0, n - 1));  // with repeats
                     return gradient_error([&](const auto& in) { return probe(gather_rows(in[0], rows)); },
                                           {random_tensor({n, draw(rng, 1, 4)}, rng)});
                   }});
  cases.push_back({"concat", [](std::mt19937_64& rng) {
                     const std::size_t c = draw(rng, 1, 4);
                     return gradient_error([](const auto& in) { return probe(concat({in[0], in[1], in[0]})); },
                                           {random_tensor({draw(rng, 1, 3), c}, rng),
                                            random_tensor({draw(rng, 1, 3), c}, rng)});
                   }});
  cases.push_back({"add_bias", [](std::mt19937_64& rng) {
                     const std::size_t c = draw(rng, 1, 4);
                     return gradient_error([](const auto& in) { return probe(add_bias(in[0], in[1])); },
                                           {random_tensor({draw(rng, 1, 3), draw(rng, 1, 3), c}, rng),
                                            random_tensor({c}, rng)});
                   }});
  // Width >= 3: with two entries layer norm pins its outputs to +-1.
  const auto wide = [](std::mt19937_64& rng) { return random_tensor({draw(rng, 1, 4), draw(rng, 3, 6)}, rng, -2, 2); };
  cases.push_back({"softmax_lastdim", [wide](std::mt19937_64& rng) {
                     return gradient_error([](const auto& in) { return probe(softmax_lastdim(in[0])); }, {wide(rng)});
                   }});
  cases.push_back({"log_softmax_lastdim", [wide](std::mt19937_64& rng) {
                     return gradient_error([](const auto& in) { return probe(log_softmax_lastdim(in[0])); },
                                           {wide(rng)});
                   }});
  cases.push_back({"masked_softmax", [](std::mt19937_64& rng) {
                     const std::size_t n = draw(rng, 3, 6);
                     Tensor mask({n, n});
                     mask.values()[static_cast<Eigen::Index>(n - 1)] = -kMaskSentinel;
                     mask.values()[static_cast<Eigen::Index>((n - 1) * n)] = -kMaskSentinel;
                     return gradient_error([&](const auto& in) { return probe(softmax_lastdim(add(in[0], mask))); },
                                           {random_tensor({n, n}, rng)});
                   }});
  cases.push_back({"layer_norm", [wide](std::mt19937_64& rng) {
                     return gradient_error([](const auto& in) { return probe(layer_norm(in[0])); }, {wide(rng)});
                   }});
  cases.push_back({"layer_norm_affine", [wide](std::mt19937_64& rng) {
                     const Tensor x = wide(rng);
                     const std::size_t d = x.dim(1);
                     return gradient_error([](const auto& in) { return probe(layer_norm(in[0], in[1], in[2])); },
                                           {x, random_tensor({d}, rng), random_tensor({d}, rng)});
                   }});
  cases.push_back({"l2_normalize_lastdim", [wide](std::mt19937_64& rng) {
                     return gradient_error([](const auto& in) { return probe(l2_normalize_lastdim(in[0])); },
                                           {wide(rng)});
                   }});
  return cases;
}

/// Every training loss with both sides live, so the check covers the full
/// composed derivative.
inline std::vector<GradientCase> loss_cases() {
  std::vector<GradientCase> cases;
  cases.push_back({"cross_entropy", [](std::mt19937_64& rng) {
                     const std::size_t n = draw(rng, 2, 6);
                     const auto y = random_labels(n, 3, rng);
                     return gradient_error([&](const auto& in) { return cross_entropy(in[0], y); },
                                           {random_tensor({n, 3}, rng, -2, 2)});
                   }});
  const auto pair = [](std::mt19937_64& rng) {
    const std::size_t n = draw(rng, 2, 5), d = draw(rng, 2, 4);
    return std::make_pair(random_tensor({n, d}, rng), random_tensor({n, d}, rng));
  };
  cases.push_back({"loss_s_con", [pair](std::mt19937_64& rng) {
                     const auto [a, c] = pair(rng);
                     const auto la = random_labels(a.dim(0), 2, rng), lc = random_labels(c.dim(0), 2, rng);
                     return gradient_error([&](const auto& in) { return loss_s_con(in[0], in[1], la, lc, 0.1, false); },
                                           {a, c});
                   }});
  cases.push_back({"loss_t_con", [pair](std::mt19937_64& rng) {
                     const auto [a, c] = pair(rng);
                     const auto la = random_labels(a.dim(0), 2, rng), lc = random_labels(c.dim(0), 2, rng);
                     return gradient_error([&](const auto& in) { return loss_t_con(in[0], in[1], la, lc, 0.1, false); },
                                           {a, c});
                   }});
  cases.push_back({"mmd_transfer", [pair](std::mt19937_64& rng) {
                     const auto [a, c] = pair(rng);
                     const std::vector<double> bw = {0.4, 0.8, 1.6};
                     return gradient_error(
                         [&](const auto& in) { return mmd_transfer(in[0], in[1], bw, StopGradSide::none); }, {a, c});
                   }});
  cases.push_back({"mstn_center_transfer", [pair](std::mt19937_64& rng) {
                     const auto [a, c] = pair(rng);
                     const auto la = random_labels(a.dim(0), 2, rng), lc = random_labels(c.dim(0), 2, rng);
                     return gradient_error(
                         [&](const auto& in) { return mstn_center_transfer(in[0], la, in[1], lc, StopGradSide::none); },
                         {a, c});
                   }});
  return cases;
}

}  // namespace wintr::testing
