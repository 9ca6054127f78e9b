// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wintr/autodiff.hpp"
#include "wintr/transformer.hpp"

namespace wintr {

/// Which token's features feed pseudo-label refinement.
enum class Representation { source_oriented, target_oriented };

std::string to_string(Representation r);
Representation representation_from_string(const std::string& name);

struct PseudoLabelState {
  std::vector<int> labels;
  RowMatrix centers;         // [C x D], rows of inactive classes are zero
  std::vector<bool> active;  // classes that took part in the final argmin
  int round = 0;
  int changed = 0;  // labels differing from the previous round
  Representation representation = Representation::source_oriented;

  /// labels, center norms, change count; for per-round diagnostics dumps.
  nlohmann::json to_json() const;
};

/// Prediction-weighted K-means on l2-normalised features.
/// Round 1: c_k = sum_j softmax(logits_j)_k f_j / sum_j softmax(logits_j)_k,
/// labels = argmin_k cosine distance. Later rounds recompute hard means of the
/// current assignment. Ties go to the smallest class index; classes with no
/// weight are skipped with a warning.
PseudoLabelState weighted_kmeans_refine(const Tensor& features, const Tensor& logits, int rounds = 2);

/// Majority vote over the K nearest neighbours (cosine, self excluded).
/// Throws ParameterError unless 1 <= K < T.
std::vector<int> knn_refine(const Tensor& features, std::span<const int> current_labels, int k, int num_classes);

/// f^s_t for source_oriented, f^t_t for target_oriented.
Tensor select_refinement_features(const ForwardOutput& target_outputs, Representation choice);

}  // namespace wintr
