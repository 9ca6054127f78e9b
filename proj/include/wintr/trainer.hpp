// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wintr/config.hpp"
#include "wintr/dataset.hpp"
#include "wintr/refinement.hpp"
#include "wintr/transformer.hpp"

namespace wintr {

enum class Head { src, tgt };

/// Tape-free forward pass over a whole domain set, in chunks.
ForwardOutput infer(const WinTrModel& model, const DomainSet& set, std::size_t chunk = 256);

std::vector<int> argmax_rows(const Tensor& logits);
/// Fraction of rows whose argmax equals the label.
double accuracy(const Tensor& logits, std::span<const int> labels);
/// Argmax accuracy of the chosen classifier head on a labeled set.
double evaluate(const WinTrModel& model, const DomainSet& set, Head head);

struct EpochRecord {
  int stage = 0;
  int epoch = 0;
  double l_s = 0;
  double l_t = 0;
  double l_s_con = 0;
  double l_t_con = 0;
  double total = 0;
  double source_acc = 0;        // g^s on source
  double target_acc = 0;        // g^t on target
  double gs_on_target = 0;      // g^s on target
  double gt_on_source = 0;      // g^t on source
  double pseudo_label_acc = 0;  // current pseudo-labels against the hidden target labels
  double token_cos_mean = 0;    // mean cos(f^s_t, f^t_t) over target samples

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_totals;  // total loss of every optimisation step
  double wall_seconds = 0;          // kept out of the CSV so reports stay reproducible

  static const std::vector<std::string>& csv_columns();
  /// One header line plus one line per epoch; values printed with 17
  /// significant digits.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  void append(const TrainReport& other);
};

/// Independent streams for stage-1 init, stage-2 init and batch order.
struct RunSeeds {
  std::uint64_t stage1_init;
  std::uint64_t stage2_init;
  std::uint64_t stage1_batches;
  std::uint64_t stage2_batches;
};
RunSeeds derive_seeds(std::uint64_t run_seed);

struct Stage1Result {
  WinTrModel model;
  PseudoLabelState pseudo;          // K-means on f^s_t with g^s logits
  double source_acc = 0;            // g^s on source
  double source_only_target_acc = 0;  // g^s on target
  double pseudo_label_acc = 0;
  TrainReport report;
};

/// Source-only training with the source cross-entropy, then initial target
/// pseudo-labels. Throws TrainingError on a non-finite loss.
Stage1Result stage1_pretrain(const RunConfig& config, const DomainSet& source, const DomainSet& target);

struct Stage2Result {
  WinTrModel model;
  TrainReport report;
  std::vector<int> pseudo_labels;
  std::vector<PseudoLabelState> refinements;  // one per epoch (K-means only)
};

/// Fresh initialisation, then joint training on source labels and target
/// pseudo-labels with the configured transfer terms; pseudo-labels are
/// refined after every epoch. Throws TrainingError on a non-finite loss.
Stage2Result stage2_train(const RunConfig& config, const DomainSet& source, const DomainSet& target,
                          std::span<const int> initial_pseudo_labels);

}  // namespace wintr
