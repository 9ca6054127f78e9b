// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wintr/errors.hpp"
#include "wintr/logging.hpp"

namespace wintr {

namespace {

RowMatrix normalized_rows(const ConstMatrixMap& m) {
  RowMatrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

// Cosine distance to each active center; argmin with smallest-index ties.
std::vector<int> assign(const RowMatrix& feats, const RowMatrix& centers, const std::vector<bool>& active) {
  const Eigen::Index classes = centers.rows();
  Vector inv_norm(classes);
  for (Eigen::Index k = 0; k < classes; ++k) {
    const double n = centers.row(k).norm();
    inv_norm[k] = n > 0 ? 1.0 / n : 0.0;
  }
  std::vector<int> labels(static_cast<std::size_t>(feats.rows()));
  for (Eigen::Index j = 0; j < feats.rows(); ++j) {
    int best = -1;
    double best_dist = 0;
    for (Eigen::Index k = 0; k < classes; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      const double dist = 1.0 - feats.row(j).dot(centers.row(k)) * inv_norm[k];
      if (best < 0 || dist < best_dist) {
        best = static_cast<int>(k);
        best_dist = dist;
      }
    }
    labels[static_cast<std::size_t>(j)] = best;
  }
  return labels;
}

void require_some_active(const std::vector<bool>& active) {
  if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) {
    throw RefinementError("weighted_kmeans_refine: every class center is undefined");
  }
}

}  // namespace

std::string to_string(Representation r) {
  return r == Representation::source_oriented ? "source_oriented" : "target_oriented";
}

Representation representation_from_string(const std::string& name) {
  if (name == "source_oriented") return Representation::source_oriented;
  if (name == "target_oriented") return Representation::target_oriented;
  throw ConfigError("refinement.representation: unknown value '" + name + "'");
}

nlohmann::json PseudoLabelState::to_json() const {
  nlohmann::json j;
  j["round"] = round;
  j["changed"] = changed;
  j["representation"] = to_string(representation);
  j["labels"] = labels;
  std::vector<double> norms;
  for (Eigen::Index k = 0; k < centers.rows(); ++k) norms.push_back(centers.row(k).norm());
  j["center_norms"] = norms;
  j["active"] = active;
  return j;
}

PseudoLabelState weighted_kmeans_refine(const Tensor& features, const Tensor& logits, int rounds) {
  if (rounds < 1) throw ParameterError("weighted_kmeans_refine: rounds must be >= 1");
  if (features.rank() != 2 || logits.rank() != 2 || features.dim(0) != logits.dim(0)) {
    throw DimensionError("weighted_kmeans_refine: features " + shape_string(features.shape()) + " vs logits " +
                         shape_string(logits.shape()));
  }
  const Eigen::Index classes = static_cast<Eigen::Index>(logits.dim(1));
  const RowMatrix feats = normalized_rows(features.matrix());

  // delta_k(g_j): row-wise softmax probabilities.
  RowMatrix probs = logits.matrix();
  for (Eigen::Index j = 0; j < probs.rows(); ++j) {
    const double mx = probs.row(j).maxCoeff();
    // Scalar exp: the vectorised one clamps, so exp(-inf) would not be exactly 0.
    probs.row(j) = (probs.row(j).array() - mx).unaryExpr([](double v) { return std::exp(v); });
    probs.row(j) /= probs.row(j).sum();
  }

  PseudoLabelState state;
  state.centers = RowMatrix::Zero(classes, feats.cols());
  state.active.assign(static_cast<std::size_t>(classes), false);
  const Vector mass = probs.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < classes; ++k) {
    if (mass[k] > 0) {
      state.centers.row(k) = (probs.col(k).transpose() * feats) / mass[k];
      state.active[static_cast<std::size_t>(k)] = true;
    } else {
      logging::warn("weighted_kmeans_refine: class " + std::to_string(k) + " has zero prediction mass; skipped");
    }
  }
  require_some_active(state.active);
  state.labels = assign(feats, state.centers, state.active);
  state.round = 1;

  for (int r = 2; r <= rounds; ++r) {
    RowMatrix centers = RowMatrix::Zero(classes, feats.cols());
    std::vector<int> counts(static_cast<std::size_t>(classes), 0);
    for (Eigen::Index j = 0; j < feats.rows(); ++j) {
      const int y = state.labels[static_cast<std::size_t>(j)];
      centers.row(y) += feats.row(j);
      ++counts[static_cast<std::size_t>(y)];
    }
    std::vector<bool> active(static_cast<std::size_t>(classes), false);
    for (Eigen::Index k = 0; k < classes; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        centers.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
        active[static_cast<std::size_t>(k)] = true;
      }
    }
    require_some_active(active);
    std::vector<int> next = assign(feats, centers, active);
    state.changed = 0;
    for (std::size_t j = 0; j < next.size(); ++j) state.changed += next[j] != state.labels[j] ? 1 : 0;
    state.labels = std::move(next);
    state.centers = std::move(centers);
    state.active = std::move(active);
    state.round = r;
  }
  return state;
}

std::vector<int> knn_refine(const Tensor& features, std::span<const int> current_labels, int k, int num_classes) {
  if (features.rank() != 2 || features.dim(0) != current_labels.size()) {
    throw DimensionError("knn_refine: " + std::to_string(current_labels.size()) + " labels for features " +
                         shape_string(features.shape()));
  }
  const auto t = static_cast<int>(features.dim(0));
  if (k < 1 || k >= t) {
    throw ParameterError("knn_refine: K must satisfy 1 <= K < T (K=" + std::to_string(k) + ", T=" +
                         std::to_string(t) + ")");
  }
  for (int y : current_labels) {
    if (y < 0 || y >= num_classes) throw LabelError("knn_refine: label " + std::to_string(y) + " out of range");
  }
  const RowMatrix feats = normalized_rows(features.matrix());
  const RowMatrix sim = feats * feats.transpose();
  std::vector<int> out(static_cast<std::size_t>(t));
  std::vector<int> order;
  std::vector<int> votes(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < t; ++i) {
    order.resize(static_cast<std::size_t>(t));
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    // Nearest = largest cosine similarity; equal distances keep index order.
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      const double sa = sim(i, a), sb = sim(i, b);
      return sa != sb ? sa > sb : a < b;
    });
    std::fill(votes.begin(), votes.end(), 0);
    for (int n = 0; n < k; ++n) ++votes[static_cast<std::size_t>(current_labels[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])])];
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

Tensor select_refinement_features(const ForwardOutput& target_outputs, Representation choice) {
  return choice == Representation::source_oriented ? target_outputs.feat_src_view : target_outputs.feat_tgt_view;
}

}  // namespace wintr
