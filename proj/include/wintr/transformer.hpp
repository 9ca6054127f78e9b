// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wintr/autodiff.hpp"

namespace wintr {

/// Architecture of the toy two-token vision transformer.
struct ModelConfig {
  int image_side = 16;
  int patch_side = 4;
  int channels = 1;
  int embed_dim = 32;
  int num_heads = 4;
  int depth = 3;
  double mlp_ratio = 2.0;
  int num_classes = 4;
  // Ablation switches: "w/o mask" and the single-classifier comparison.
  bool mask_enabled = true;
  bool shared_head = false;

  int patches_per_side() const { return image_side / patch_side; }
  int num_patches() const { return patches_per_side() * patches_per_side(); }
  int seq_len() const { return num_patches() + 2; }
  int head_dim() const { return embed_dim / num_heads; }
  int patch_dim() const { return channels * patch_side * patch_side; }
  int hidden_dim() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

struct Block {
  LayerNormParams ln1;
  Linear query, key, value, proj;
  LayerNormParams ln2;
  Linear fc1, fc2;
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
  bool classifier = false;  // trained with the larger learning rate
};

/// Parameter registry: patch embedding, positional embedding, the [src] and
/// [tgt] tokens, L blocks, a final norm and the two classifier heads.
class WinTrModel {
 public:
  WinTrModel(const ModelConfig& config, std::uint64_t seed);

  WinTrModel(WinTrModel&&) noexcept = default;
  WinTrModel& operator=(WinTrModel&&) noexcept = default;
  WinTrModel(const WinTrModel&) = delete;
  WinTrModel& operator=(const WinTrModel&) = delete;

  /// Deep copy with fresh gradient accumulators.
  WinTrModel clone() const;

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }

  /// Stable, ordered view of every trainable tensor.
  std::vector<NamedParameter> parameters() const;
  void zero_grad();

  Linear patch_embed;
  Tensor pos_embed;  // [N x D], includes both token positions
  Tensor token_src;  // [1 x D], sequence index 0
  Tensor token_tgt;  // [1 x D], sequence index N-1
  std::vector<Block> blocks;
  LayerNormParams final_norm;
  Linear head_src;
  Linear head_tgt;

 private:
  struct Unset {};
  WinTrModel(const ModelConfig& config, Unset);
  void allocate();

  ModelConfig config_;
};

struct ForwardOutput {
  Tensor feat_src_view;  // [B x D] state of [src] at the last layer
  Tensor feat_tgt_view;  // [B x D] state of [tgt]
  Tensor logits_src;     // [B x C] head_src(feat_src_view)
  Tensor logits_tgt;     // [B x C] head_tgt(feat_tgt_view), or head_src when shared
  std::vector<Tensor> attention;  // per layer [B*h x N x N], only when requested
};

struct ForwardOptions {
  bool record_attention = false;
};

/// [N x N] additive mask with -kMaskSentinel at (0, N-1) and (N-1, 0).
/// With enabled = false every entry is 0.
Tensor build_token_mask(int seq_len, bool enabled = true);

/// [B x C x H x W] images -> [B*M x C*p*p] patch rows, raster order.
Tensor patchify(const Tensor& images, const ModelConfig& config);

/// One masked multi-head attention sublayer applied to x [B*N x D]
/// (pre-normalised input); returns the projected output [B*N x D] and
/// optionally the post-softmax weights.
Tensor masked_attention(const Tensor& x, const Block& block, const Tensor& mask, int batch, int seq_len,
                        int num_heads, Tensor* attention_out = nullptr);

ForwardOutput forward(const WinTrModel& model, const Tensor& images, const ForwardOptions& options = {});
/// Same as forward() but starting from patch rows [B*M x C*p*p].
ForwardOutput forward_patches(const WinTrModel& model, const Tensor& patches, int batch,
                              const ForwardOptions& options = {});

/// Row-wise cosine similarity. Throws SimilarityError on a zero-norm row.
std::vector<double> token_cosine_similarity(const Tensor& f_a, const Tensor& f_b);

// Checkpoints ---------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const WinTrModel& model, const std::filesystem::path& path);
/// Throws LoadError on a malformed file or version mismatch.
WinTrModel load_checkpoint(const std::filesystem::path& path);
/// Also checks the stored architecture against `expected`.
WinTrModel load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace wintr
