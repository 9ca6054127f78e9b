// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wintr/autodiff.hpp"

namespace wintr {

enum class Domain { source, target };

std::string to_string(Domain d);

struct DomainSample {
  std::vector<double> image;  // channels x H x W, values in [0, 1]
  int label = 0;
  Domain domain = Domain::source;
  int id = 0;

  bool operator==(const DomainSample&) const = default;
};

struct DomainSet {
  int num_classes = 0;
  int channels = 1;
  int height = 0;
  int width = 0;
  Domain domain = Domain::source;
  std::vector<DomainSample> samples;

  std::size_t size() const { return samples.size(); }
  /// Stacks the selected images into [B x C x H x W].
  Tensor images(std::span<const std::size_t> indices) const;
  std::vector<int> labels(std::span<const std::size_t> indices) const;
  std::vector<int> all_labels() const;

  bool operator==(const DomainSet&) const = default;
};

enum class PatternType { bars, blobs, checker };

std::string to_string(PatternType p);
PatternType pattern_from_string(const std::string& name);

/// Style shift applied to the target domain. All-zero means no shift.
struct ShiftSpec {
  double inversion = 0.0;     // blend toward 1 - x, in [0, 1]
  double texture = 0.0;       // amplitude of an additive fine checker texture, in [0, 1]
  double brightness = 0.0;    // additive offset, in [-1, 1]
  double contrast = 0.0;      // contrast reduction, in [0, 1)
  double rotation_deg = 0.0;  // pattern rotation, in [-45, 45]

  bool operator==(const ShiftSpec&) const = default;
};

struct SyntheticTaskSpec {
  int num_classes = 4;
  int samples_per_domain = 512;
  int image_side = 16;
  int channels = 1;
  PatternType pattern = PatternType::bars;
  ShiftSpec shift{};
  std::uint64_t seed = 0;
  bool balanced = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const SyntheticTaskSpec&) const = default;
};

/// Shift used by the default adaptation task.
ShiftSpec default_shift();
/// The default adaptation task: 4 classes, 512 samples per domain, 16x16
/// single-channel bars, default_shift() on the target.
SyntheticTaskSpec default_task();

/// Class-conditional patterns with per-sample jitter; the target set gets the
/// shift transform. Pixel values are float32-representable.
std::pair<DomainSet, DomainSet> generate(const SyntheticTaskSpec& spec);

/// Writes <dir>/manifest.json plus one little-endian float32 file per image.
void save_dataset(const DomainSet& set, const std::filesystem::path& dir);
/// Throws IngestionError naming the offending file.
DomainSet load_dataset(const std::filesystem::path& dir);

}  // namespace wintr
