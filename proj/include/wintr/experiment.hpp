// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wintr/config.hpp"
#include "wintr/dataset.hpp"
#include "wintr/trainer.hpp"

namespace wintr {

struct DomainPair {
  DomainSet source;
  DomainSet target;
};

/// Reads <dataset_path>/source and <dataset_path>/target when a path is set,
/// otherwise generates the synthetic task.
DomainPair load_or_generate(const RunConfig& config);
/// Writes both domains under dir/source and dir/target.
void save_domain_pair(const DomainPair& data, const std::filesystem::path& dir);

struct RunSummary {
  double stage1_source_acc = 0;
  double source_only_target_acc = 0;  // stage-1 g^s on target
  double initial_pseudo_label_acc = 0;
  EpochRecord final_epoch;            // last stage-2 row

  nlohmann::json to_json() const;
};

RunSummary summarize(const Stage1Result& stage1, const Stage2Result& stage2);

struct RunArtifacts {
  RunSummary summary;
  TrainReport report;  // stage-1 rows followed by stage-2 rows
};

/// Stage 1 plus stage 2. Writes report.csv, summary.json, timing.json,
/// config.json, stage1.ckpt, final.ckpt and pseudo_labels.json into out_dir.
RunArtifacts run_experiment(const RunConfig& config, const std::filesystem::path& out_dir);

/// Same as run_experiment but starting from an existing stage-1 result.
RunArtifacts run_from_stage1(const RunConfig& config, const DomainPair& data, const Stage1Result& stage1,
                             const std::filesystem::path& out_dir);

const std::vector<std::string>& variant_names();
/// Applies one named ablation to a copy of the config. Throws ConfigError
/// listing the valid names for an unknown variant.
RunConfig apply_variant(const RunConfig& base, const std::string& variant);

/// Runs the full method and every variant into out_dir/<name>/ and writes
/// out_dir/comparison.csv. Variants that leave stage 1 unchanged share it.
std::vector<std::pair<std::string, RunSummary>> run_ablation(const RunConfig& base,
                                                             const std::vector<std::string>& variants,
                                                             const std::filesystem::path& out_dir);

struct Diagnostics {
  std::vector<double> token_cosine;          // per target sample
  std::array<int, 20> histogram{};           // equal-width bins over [-1, 1]
  double mean_token_cosine = 0;
  // [head][domain]: head 0 = g^s, 1 = g^t; domain 0 = source, 1 = target.
  std::array<std::array<double, 2>, 2> accuracy{};

  nlohmann::json to_json() const;
};

Diagnostics diagnose(const WinTrModel& model, const DomainPair& data);
/// diagnostics.json, token_similarity.csv, token_histogram.csv, cross_accuracy.csv.
void write_diagnostics(const Diagnostics& d, const std::filesystem::path& out_dir);

}  // namespace wintr
