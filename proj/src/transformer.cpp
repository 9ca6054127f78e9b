// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/transformer.hpp"

#include <cmath>
#include <random>

#include "wintr/errors.hpp"

namespace wintr {

int ModelConfig::hidden_dim() const {
  return static_cast<int>(std::lround(static_cast<double>(embed_dim) * mlp_ratio));
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model." + field + ": " + why);
  };
  if (image_side <= 0) fail("image_side", "must be positive");
  if (patch_side <= 0) fail("patch_side", "must be positive");
  if (image_side % patch_side != 0) fail("patch_side", "must divide image_side");
  if (channels <= 0) fail("channels", "must be positive");
  if (embed_dim <= 0) fail("embed_dim", "must be positive");
  if (num_heads <= 0) fail("num_heads", "must be positive");
  if (embed_dim % num_heads != 0) fail("num_heads", "must divide embed_dim");
  if (depth <= 0) fail("depth", "must be positive");
  if (!(mlp_ratio > 0) || hidden_dim() < 1) fail("mlp_ratio", "must give a positive hidden width");
  if (num_classes < 1) fail("num_classes", "must be at least 1");
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  void truncated_normal(Tensor& t, double stddev) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : t.values()) {
      double z;
      do {
        z = dist(rng_);
      } while (std::abs(z) > 2.0);
      v = z * stddev;
    }
  }

  void xavier_uniform(Linear& layer) {
    const double fan_in = static_cast<double>(layer.weight.dim(0));
    const double fan_out = static_cast<double>(layer.weight.dim(1));
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : layer.weight.values()) v = dist(rng_);
    layer.bias.values().setZero();
  }

 private:
  std::mt19937_64 rng_;
};

Linear make_linear(int in, int out) {
  return {Tensor({static_cast<std::size_t>(in), static_cast<std::size_t>(out)}, true),
          Tensor({static_cast<std::size_t>(out)}, true)};
}

LayerNormParams make_norm(int dim) {
  LayerNormParams p{Tensor({static_cast<std::size_t>(dim)}, true), Tensor({static_cast<std::size_t>(dim)}, true)};
  p.gamma.values().setOnes();
  return p;
}

Tensor linear(const Tensor& x, const Linear& layer) { return add_bias(matmul(x, layer.weight), layer.bias); }

Tensor norm(const Tensor& x, const LayerNormParams& p) { return layer_norm(x, p.gamma, p.beta); }

}  // namespace

WinTrModel::WinTrModel(const ModelConfig& config, Unset) : config_(config) {
  config_.validate();
  allocate();
}

WinTrModel::WinTrModel(const ModelConfig& config, std::uint64_t seed) : WinTrModel(config, Unset{}) {
  Initializer init(seed);
  init.truncated_normal(pos_embed, 0.02);
  init.truncated_normal(token_src, 0.02);
  init.truncated_normal(token_tgt, 0.02);
  init.xavier_uniform(patch_embed);
  for (auto& b : blocks) {
    for (Linear* l : {&b.query, &b.key, &b.value, &b.proj, &b.fc1, &b.fc2}) init.xavier_uniform(*l);
  }
  init.xavier_uniform(head_src);
  init.xavier_uniform(head_tgt);
}

void WinTrModel::allocate() {
  const int d = config_.embed_dim;
  const auto n = static_cast<std::size_t>(config_.seq_len());
  patch_embed = make_linear(config_.patch_dim(), d);
  pos_embed = Tensor({n, static_cast<std::size_t>(d)}, true);
  token_src = Tensor({1, static_cast<std::size_t>(d)}, true);
  token_tgt = Tensor({1, static_cast<std::size_t>(d)}, true);
  blocks.clear();
  for (int i = 0; i < config_.depth; ++i) {
    Block b;
    b.ln1 = make_norm(d);
    b.query = make_linear(d, d);
    b.key = make_linear(d, d);
    b.value = make_linear(d, d);
    b.proj = make_linear(d, d);
    b.ln2 = make_norm(d);
    b.fc1 = make_linear(d, config_.hidden_dim());
    b.fc2 = make_linear(config_.hidden_dim(), d);
    blocks.push_back(std::move(b));
  }
  final_norm = make_norm(d);
  head_src = make_linear(d, config_.num_classes);
  head_tgt = make_linear(d, config_.num_classes);
}

WinTrModel WinTrModel::clone() const {
  WinTrModel copy(config_, Unset{});
  auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].tensor.values() = src[i].tensor.values();
  return copy;
}

std::vector<NamedParameter> WinTrModel::parameters() const {
  std::vector<NamedParameter> out;
  auto add_linear = [&out](const std::string& prefix, const Linear& l, bool classifier) {
    out.push_back({prefix + ".weight", l.weight, classifier});
    out.push_back({prefix + ".bias", l.bias, classifier});
  };
  auto add_norm = [&out](const std::string& prefix, const LayerNormParams& p) {
    out.push_back({prefix + ".gamma", p.gamma, false});
    out.push_back({prefix + ".beta", p.beta, false});
  };
  add_linear("patch_embed", patch_embed, false);
  out.push_back({"pos_embed", pos_embed, false});
  out.push_back({"token_src", token_src, false});
  out.push_back({"token_tgt", token_tgt, false});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i);
    const Block& b = blocks[i];
    add_norm(p + ".ln1", b.ln1);
    add_linear(p + ".attn.query", b.query, false);
    add_linear(p + ".attn.key", b.key, false);
    add_linear(p + ".attn.value", b.value, false);
    add_linear(p + ".attn.proj", b.proj, false);
    add_norm(p + ".ln2", b.ln2);
    add_linear(p + ".mlp.fc1", b.fc1, false);
    add_linear(p + ".mlp.fc2", b.fc2, false);
  }
  add_norm("final_norm", final_norm);
  add_linear("head_src", head_src, true);
  add_linear("head_tgt", head_tgt, true);
  return out;
}

void WinTrModel::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

// ---------------------------------------------------------------------------

Tensor build_token_mask(int seq_len, bool enabled) {
  if (seq_len < 3) {
    throw ConfigError("token mask needs a sequence length of at least 3, got " + std::to_string(seq_len));
  }
  const auto n = static_cast<std::size_t>(seq_len);
  Tensor mask({n, n});
  if (enabled) {
    auto m = mask.matrix();
    m(0, seq_len - 1) = -kMaskSentinel;
    m(seq_len - 1, 0) = -kMaskSentinel;
  }
  return mask;
}

Tensor patchify(const Tensor& images, const ModelConfig& config) {
  const auto& s = images.shape();
  if (s.size() != 4 || s[1] != static_cast<std::size_t>(config.channels) ||
      s[2] != static_cast<std::size_t>(config.image_side) || s[3] != static_cast<std::size_t>(config.image_side)) {
    throw ConfigError("images of shape " + shape_string(s) + " do not match the model (channels " +
                      std::to_string(config.channels) + ", side " + std::to_string(config.image_side) + ")");
  }
  const int batch = static_cast<int>(s[0]);
  const int side = config.image_side;
  const int p = config.patch_side;
  const int grid = config.patches_per_side();
  const int ch = config.channels;
  Tensor patches({static_cast<std::size_t>(batch * config.num_patches()), static_cast<std::size_t>(config.patch_dim())});
  auto out = patches.matrix();
  const auto& in = images.values();
  for (int b = 0; b < batch; ++b) {
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        const int row = b * config.num_patches() + gy * grid + gx;
        int col = 0;
        for (int c = 0; c < ch; ++c) {
          for (int dy = 0; dy < p; ++dy) {
            for (int dx = 0; dx < p; ++dx) {
              const int y = gy * p + dy, x = gx * p + dx;
              out(row, col++) = in[((b * ch + c) * side + y) * side + x];
            }
          }
        }
      }
    }
  }
  return patches;
}

Tensor masked_attention(const Tensor& x, const Block& block, const Tensor& mask, int batch, int seq_len,
                        int num_heads, Tensor* attention_out) {
  const auto b = static_cast<std::size_t>(batch);
  const auto n = static_cast<std::size_t>(seq_len);
  const auto h = static_cast<std::size_t>(num_heads);
  const std::size_t dim = x.dim(1);
  if (x.dim(0) != b * n || dim % h != 0) {
    throw DimensionError("masked_attention: input " + shape_string(x.shape()) + " does not fit batch " +
                         std::to_string(batch) + ", sequence " + std::to_string(seq_len) + ", heads " +
                         std::to_string(num_heads));
  }
  const std::size_t d = dim / h;
  auto split = [&](const Tensor& t) { return reshape(permute(reshape(t, {b, n, h, d}), {0, 2, 1, 3}), {b * h, n, d}); };
  const Tensor q = split(linear(x, block.query));
  const Tensor k = split(linear(x, block.key));
  const Tensor v = split(linear(x, block.value));
  const Tensor scores = add_bias(scale(bmm(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d))), mask);
  const Tensor attn = softmax_lastdim(scores);
  if (attention_out) *attention_out = attn;
  const Tensor heads = bmm(attn, v);
  const Tensor merged = reshape(permute(reshape(heads, {b, h, n, d}), {0, 2, 1, 3}), {b * n, dim});
  return linear(merged, block.proj);
}

ForwardOutput forward_patches(const WinTrModel& model, const Tensor& patches, int batch, const ForwardOptions& options) {
  const ModelConfig& cfg = model.config();
  const std::size_t m = static_cast<std::size_t>(cfg.num_patches());
  const std::size_t n = static_cast<std::size_t>(cfg.seq_len());
  const auto b = static_cast<std::size_t>(batch);
  if (patches.rank() != 2 || patches.dim(0) != b * m || patches.dim(1) != static_cast<std::size_t>(cfg.patch_dim())) {
    throw ConfigError("patch rows " + shape_string(patches.shape()) + " do not match the model");
  }

  const Tensor embedded = linear(patches, model.patch_embed);
  // Stack [token_src; token_tgt; patches] then reorder into per-sample
  // sequences [src, p_1 .. p_M, tgt].
  const Tensor stacked = concat({model.token_src, model.token_tgt, embedded});
  std::vector<std::size_t> order;
  std::vector<std::size_t> positions;
  order.reserve(b * n);
  positions.reserve(b * n);
  for (std::size_t s = 0; s < b; ++s) {
    order.push_back(0);
    for (std::size_t j = 0; j < m; ++j) order.push_back(2 + s * m + j);
    order.push_back(1);
    for (std::size_t j = 0; j < n; ++j) positions.push_back(j);
  }
  Tensor x = add(gather_rows(stacked, order), gather_rows(model.pos_embed, positions));

  const Tensor mask = build_token_mask(cfg.seq_len(), cfg.mask_enabled);
  ForwardOutput out;
  for (const Block& block : model.blocks) {
    Tensor attn;
    x = add(x, masked_attention(norm(x, block.ln1), block, mask, batch, cfg.seq_len(), cfg.num_heads,
                                options.record_attention ? &attn : nullptr));
    if (options.record_attention) out.attention.push_back(attn);
    x = add(x, linear(gelu(linear(norm(x, block.ln2), block.fc1)), block.fc2));
  }
  x = norm(x, model.final_norm);

  std::vector<std::size_t> src_rows, tgt_rows;
  for (std::size_t s = 0; s < b; ++s) {
    src_rows.push_back(s * n);
    tgt_rows.push_back(s * n + n - 1);
  }
  out.feat_src_view = gather_rows(x, src_rows);
  out.feat_tgt_view = gather_rows(x, tgt_rows);
  out.logits_src = linear(out.feat_src_view, model.head_src);
  out.logits_tgt = linear(out.feat_tgt_view, cfg.shared_head ? model.head_src : model.head_tgt);
  return out;
}

ForwardOutput forward(const WinTrModel& model, const Tensor& images, const ForwardOptions& options) {
  const Tensor patches = patchify(images, model.config());
  return forward_patches(model, patches, static_cast<int>(images.dim(0)), options);
}

std::vector<double> token_cosine_similarity(const Tensor& f_a, const Tensor& f_b) {
  if (f_a.shape() != f_b.shape() || f_a.rank() != 2) {
    throw DimensionError("token_cosine_similarity: shapes " + shape_string(f_a.shape()) + " and " +
                         shape_string(f_b.shape()));
  }
  auto a = f_a.matrix();
  auto b = f_b.matrix();
  std::vector<double> out(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double na = a.row(i).norm(), nb = b.row(i).norm();
    if (na == 0.0 || nb == 0.0) {
      throw SimilarityError("cosine similarity undefined for zero-norm row " + std::to_string(i));
    }
    out[static_cast<std::size_t>(i)] = std::clamp(a.row(i).dot(b.row(i)) / (na * nb), -1.0, 1.0);
  }
  return out;
}

}  // namespace wintr
