// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force loop implementations of the losses and refiners, written
// independently of the library for equivalence checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "wintr/autodiff.hpp"

namespace wintr::testing {

using Rows = std::vector<std::vector<double>>;

inline std::vector<double> row(const Tensor& x, std::size_t i) {
  const std::size_t d = x.dim(1);
  std::vector<double> out(d);
  for (std::size_t k = 0; k < d; ++k) out[k] = x.at(i * d + k);
  return out;
}

inline double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return dot / (norm(a) * norm(b));
}

// -mean over anchors with positives of mean over positives of
// log(exp(cos(a,p)/tau) / sum_c exp(cos(a,c)/tau)).
inline double contrastive_oracle(const Tensor& anchors, const Tensor& cands, const std::vector<int>& la,
                          const std::vector<int>& lc, double tau) {
  double total = 0;
  int valid = 0;
  for (std::size_t a = 0; a < la.size(); ++a) {
    double denom = 0;
    for (std::size_t c = 0; c < lc.size(); ++c) denom += std::exp(cosine(row(anchors, a), row(cands, c)) / tau);
    double inner = 0;
    int positives = 0;
    for (std::size_t c = 0; c < lc.size(); ++c) {
      if (lc[c] != la[a]) continue;
      inner += std::log(std::exp(cosine(row(anchors, a), row(cands, c)) / tau) / denom);
      ++positives;
    }
    if (positives == 0) continue;
    total += inner / positives;
    ++valid;
  }
  return valid == 0 ? 0.0 : -total / valid;
}

inline double gaussian_mean(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& bw) {
  double d2 = 0;
  for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - y[k]) * (x[k] - y[k]);
  double k = 0;
  for (double s : bw) k += std::exp(-d2 / (2 * s * s));
  return k / static_cast<double>(bw.size());
}

inline double mmd_oracle(const Tensor& a, const Tensor& b, const std::vector<double>& bw) {
  auto mean_k = [&](const Tensor& x, const Tensor& y) {
    double s = 0;
    for (std::size_t i = 0; i < x.dim(0); ++i) {
      for (std::size_t j = 0; j < y.dim(0); ++j) s += gaussian_mean(row(x, i), row(y, j), bw);
    }
    return s / static_cast<double>(x.dim(0) * y.dim(0));
  };
  return mean_k(a, a) + mean_k(b, b) - 2 * mean_k(a, b);
}

inline double mstn_oracle(const Tensor& a, const std::vector<int>& la, const Tensor& b, const std::vector<int>& lb) {
  std::map<int, std::vector<double>> sum_a, sum_b;
  std::map<int, int> na, nb;
  const std::size_t d = a.dim(1);
  for (std::size_t i = 0; i < la.size(); ++i) {
    auto& s = sum_a[la[i]];
    s.resize(d);
    for (std::size_t k = 0; k < d; ++k) s[k] += a.at(i * d + k);
    ++na[la[i]];
  }
  for (std::size_t i = 0; i < lb.size(); ++i) {
    auto& s = sum_b[lb[i]];
    s.resize(d);
    for (std::size_t k = 0; k < d; ++k) s[k] += b.at(i * d + k);
    ++nb[lb[i]];
  }
  double total = 0;
  int shared = 0;
  for (const auto& [cls, s] : sum_a) {
    if (!sum_b.count(cls)) continue;
    double dist = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = s[k] / na[cls] - sum_b[cls][k] / nb[cls];
      dist += diff * diff;
    }
    total += dist;
    ++shared;
  }
  return shared == 0 ? 0.0 : total / shared;
}

inline Rows rows_of(const Tensor& x) {
  Rows out(x.dim(0), std::vector<double>(x.dim(1)));
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t k = 0; k < x.dim(1); ++k) out[i][k] = x.at(i * x.dim(1) + k);
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline void normalise(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n > 0) {
    for (double& x : v) x /= n;
  }
}

inline std::vector<int> nearest(const Rows& f, const Rows& centers, const std::vector<bool>& active) {
  std::vector<int> labels;
  for (const auto& x : f) {
    int best = -1;
    double best_d = 0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (!active[k]) continue;
      std::vector<double> c = centers[k];
      normalise(c);
      const double d = 1.0 - dot(x, c);
      if (best < 0 || d < best_d) {
        best = static_cast<int>(k);
        best_d = d;
      }
    }
    labels.push_back(best);
  }
  return labels;
}

// Soft-weighted centres, nearest-centre labels, then hard-mean rounds.
inline std::vector<int> kmeans_oracle(const Tensor& features, const Tensor& logits, int rounds) {
  Rows f = rows_of(features);
  for (auto& x : f) normalise(x);
  const Rows g = rows_of(logits);
  const std::size_t classes = logits.dim(1), dim = features.dim(1);
  Rows centers(classes, std::vector<double>(dim, 0.0));
  std::vector<double> mass(classes, 0.0);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double mx = *std::max_element(g[j].begin(), g[j].end());
    double z = 0;
    for (double v : g[j]) z += std::exp(v - mx);
    for (std::size_t k = 0; k < classes; ++k) {
      const double w = std::exp(g[j][k] - mx) / z;
      mass[k] += w;
      for (std::size_t d = 0; d < dim; ++d) centers[k][d] += w * f[j][d];
    }
  }
  std::vector<bool> active(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    active[k] = mass[k] > 0;
    for (double& v : centers[k]) v /= mass[k];
  }
  std::vector<int> labels = nearest(f, centers, active);
  for (int r = 2; r <= rounds; ++r) {
    Rows sums(classes, std::vector<double>(dim, 0.0));
    std::vector<int> counts(classes, 0);
    for (std::size_t j = 0; j < f.size(); ++j) {
      ++counts[static_cast<std::size_t>(labels[j])];
      for (std::size_t d = 0; d < dim; ++d) sums[static_cast<std::size_t>(labels[j])][d] += f[j][d];
    }
    for (std::size_t k = 0; k < classes; ++k) {
      active[k] = counts[k] > 0;
      for (double& v : sums[k]) v /= std::max(counts[k], 1);
    }
    labels = nearest(f, sums, active);
  }
  return labels;
}

inline std::vector<int> knn_oracle(const Tensor& features, const std::vector<int>& labels, int k, int classes) {
  Rows f = rows_of(features);
  for (auto& x : f) normalise(x);
  std::vector<int> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> by_distance;
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (j != i) by_distance.emplace_back(1.0 - dot(f[i], f[j]), j);
    }
    std::sort(by_distance.begin(), by_distance.end());
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    for (int n = 0; n < k; ++n) ++votes[static_cast<std::size_t>(labels[by_distance[static_cast<std::size_t>(n)].second])];
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace wintr::testing
