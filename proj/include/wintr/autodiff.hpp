// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace wintr {

using Scalar = double;
using Shape = std::vector<std::size_t>;
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Additive stand-in for -inf in attention masks. Softmax maps it to exactly 0.
inline constexpr Scalar kMaskSentinel = 1e30;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct TensorImpl {
  Shape shape;
  Vector value;
  Vector grad;  // empty until first accumulation
  bool requires_grad = false;
  std::uint64_t id = 0;

  Vector& grad_buffer();
};

}  // namespace detail

/// Shared handle to a dense float64 array that can take part in a recorded
/// computation. Copies of a Tensor alias the same storage; use clone() for a
/// deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Scalar> values, bool requires_grad = false);
  Tensor(Shape shape, const Vector& values, bool requires_grad = false);
  Tensor(Shape shape, std::initializer_list<Scalar> values, bool requires_grad = false)
      : Tensor(std::move(shape), std::vector<Scalar>(values), requires_grad) {}

  static Tensor scalar(Scalar value);
  static Tensor from_matrix(const Eigen::Ref<const RowMatrix>& m, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  Vector& values();
  const Vector& values() const;
  Scalar item() const;
  Scalar at(std::size_t flat_index) const { return values()[static_cast<Eigen::Index>(flat_index)]; }

  // Row-major 2-D view: rows = product of leading dims, cols = last dim.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  // Accumulated gradient, or zeros if nothing was ever accumulated.
  Vector grad() const;
  ConstMatrixMap grad_matrix() const;
  void zero_grad();

  std::uint64_t graph_id() const;
  Tensor clone() const;

  detail::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& shared_impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Define-by-run record of primitive operations. Ops append to the tape that
/// is active on the calling thread (see TapeScope); nothing is recorded when
/// no tape is active.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Node {
    std::string_view op;
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string_view op, const std::vector<const Tensor*>& inputs, const Tensor& output,
              BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
  void backward(const Tensor& loss);
  void clear() { nodes_.clear(); }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  static Tape* active();

 private:
  friend class TapeScope;
  std::vector<Node> nodes_;
};

/// Makes `tape` the active tape of this thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// ---------------------------------------------------------------------------
// Primitives. Every op checks shapes strictly; the only broadcasts are
// add_bias (trailing-dim bias over leading rows) and layer_norm's affine.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Scalar factor);
/// x + b where b.shape() equals the trailing dims of x.
Tensor add_bias(const Tensor& x, const Tensor& b);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);
/// Batched product of [G x m x k] and [G x k x n].
Tensor bmm(const Tensor& a, const Tensor& b);
/// Swaps the last two dims of a rank-2 or rank-3 tensor.
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);

/// Entries at or below -kMaskSentinel / 2 are treated as masked; a row with
/// no unmasked entry throws DegenerateRowError.
Tensor softmax_lastdim(const Tensor& x);
Tensor log_softmax_lastdim(const Tensor& x);
Tensor layer_norm(const Tensor& x, Scalar eps = 1e-6);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps = 1e-6);
Tensor l2_normalize_lastdim(const Tensor& x, Scalar eps = 1e-12);

/// Selects slices along dim 0.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
/// Concatenates along dim 0.
Tensor concat(const std::vector<Tensor>& parts);

/// Squared Euclidean distances between the rows of a [A x D] and b [B x D].
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

/// Identity forward; blocks all gradient flow into x.
Tensor stop_gradient(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(Scalar s, const Tensor& x) { return scale(x, s); }
inline Tensor operator*(const Tensor& x, Scalar s) { return scale(x, s); }

}  // namespace wintr
