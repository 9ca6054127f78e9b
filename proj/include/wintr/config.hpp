// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wintr/dataset.hpp"
#include "wintr/refinement.hpp"
#include "wintr/transformer.hpp"

namespace wintr {

enum class RefinementMethod { kmeans, knn };
enum class TransferMethod { contrastive, mmd, mstn, none };
/// domain_specific is the full method; the other two are the single-classifier
/// and same-objective comparison variants.
enum class ClassifierMode { domain_specific, shared_classifier, shared_objective };
enum class LrSchedule { constant, inverse_decay };

struct OptimConfig {
  double base_lr = 0.01;
  double classifier_lr_multiplier = 10.0;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  LrSchedule schedule = LrSchedule::constant;
  // inverse decay: lr * (1 + gamma * progress)^(-power)
  double decay_gamma = 10.0;
  double decay_power = 0.75;

  bool operator==(const OptimConfig&) const = default;
};

struct RefinementConfig {
  RefinementMethod method = RefinementMethod::kmeans;
  Representation representation = Representation::source_oriented;
  int kmeans_rounds = 2;
  int knn_k = 5;

  bool operator==(const RefinementConfig&) const = default;
};

/// Every knob of an experiment. `model.mask_enabled` is the token-mask switch;
/// `model.shared_head` is derived from classifier_mode at training time.
struct RunConfig {
  std::optional<std::string> dataset_path;  // directory with source/ and target/; else synthetic
  SyntheticTaskSpec dataset = default_task();
  ModelConfig model;
  OptimConfig optimizer;
  double lambda = 1.0;
  double tau = 0.1;
  RefinementConfig refinement;
  TransferMethod transfer = TransferMethod::contrastive;
  bool use_ls_con = true;
  bool use_lt_con = true;
  ClassifierMode classifier_mode = ClassifierMode::domain_specific;
  int stage1_epochs = 20;
  int stage2_epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  /// Cross-field checks; throws ConfigError naming the field.
  void validate() const;
  /// Model architecture with the classifier-mode switch applied.
  ModelConfig effective_model() const;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& config);
/// Missing keys take their defaults; unknown keys and bad values throw
/// ConfigError with the field path.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

std::string to_string(RefinementMethod m);
std::string to_string(TransferMethod m);
std::string to_string(ClassifierMode m);
std::string to_string(LrSchedule s);

}  // namespace wintr
