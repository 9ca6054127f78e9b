// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "wintr/autodiff.hpp"
#include "wintr/errors.hpp"

namespace wintr {

namespace {

using detail::TensorImpl;
using Index = Eigen::Index;

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

template <class Fn>
void record(std::string_view op, std::initializer_list<const Tensor*> inputs, Tensor& out, Fn&& fn) {
  out.set_requires_grad(true);
  Tape::active()->record(op, std::vector<const Tensor*>(inputs), out, std::forward<Fn>(fn));
}

MatrixMap view(Vector& v, Index rows, Index cols) { return MatrixMap(v.data(), rows, cols); }
ConstMatrixMap cview(const Vector& v, Index rows, Index cols) { return ConstMatrixMap(v.data(), rows, cols); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Entries at or below half the mask sentinel count as masked out. NaN is not
// masked, so a diverged input propagates instead of vanishing.
bool masked(Scalar v) { return v <= -0.5 * kMaskSentinel; }

// Max over the unmasked entries of a row; NaN if any of them is NaN.
template <class Row>
Scalar unmasked_max(const Row& row, std::string_view op, Index r) {
  Scalar mx = -std::numeric_limits<Scalar>::infinity();
  bool any = false;
  for (Index c = 0; c < row.size(); ++c) {
    const Scalar v = row[c];
    if (masked(v)) continue;
    if (std::isnan(v)) return v;
    any = true;
    mx = std::max(mx, v);
  }
  if (!any) throw DegenerateRowError(std::string(op) + ": row " + std::to_string(r) + " has no unmasked entry");
  return mx;
}

Index last_dim(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("operation needs at least one dimension");
  return static_cast<Index>(x.shape().back());
}

template <class Forward, class Derivative>
Tensor unary(std::string_view op, const Tensor& x, Forward f, Derivative df) {
  Tensor y(x.shape());
  y.values() = x.values().unaryExpr(f);
  if (recording({&x})) {
    TensorImpl* xi = x.impl();
    TensorImpl* yi = y.impl();
    record(op, {&x}, y, [xi, yi, df] {
      xi->grad_buffer().array() += yi->grad.array() * xi->value.binaryExpr(yi->value, df).array();
    });
  }
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor y(a.shape());
  y.values() = a.values() + b.values();
  if (recording({&a, &b})) {
    TensorImpl *ai = a.impl(), *bi = b.impl(), *yi = y.impl();
    record("add", {&a, &b}, y, [ai, bi, yi] {
      if (ai->requires_grad) ai->grad_buffer() += yi->grad;
      if (bi->requires_grad) bi->grad_buffer() += yi->grad;
    });
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor y(a.shape());
  y.values() = a.values() - b.values();
  if (recording({&a, &b})) {
    TensorImpl *ai = a.impl(), *bi = b.impl(), *yi = y.impl();
    record("sub", {&a, &b}, y, [ai, bi, yi] {
      if (ai->requires_grad) ai->grad_buffer() += yi->grad;
      if (bi->requires_grad) bi->grad_buffer() -= yi->grad;
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor y(a.shape());
  y.values() = a.values().cwiseProduct(b.values());
  if (recording({&a, &b})) {
    TensorImpl *ai = a.impl(), *bi = b.impl(), *yi = y.impl();
    record("mul", {&a, &b}, y, [ai, bi, yi] {
      if (ai->requires_grad) ai->grad_buffer() += yi->grad.cwiseProduct(bi->value);
      if (bi->requires_grad) bi->grad_buffer() += yi->grad.cwiseProduct(ai->value);
    });
  }
  return y;
}

Tensor scale(const Tensor& x, Scalar factor) {
  Tensor y(x.shape());
  y.values() = x.values() * factor;
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("scale", {&x}, y, [xi, yi, factor] { xi->grad_buffer() += yi->grad * factor; });
  }
  return y;
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  const auto& xs = x.shape();
  const auto& bs = b.shape();
  if (bs.empty() || bs.size() > xs.size() || !std::equal(bs.rbegin(), bs.rend(), xs.rbegin())) {
    throw DimensionError("add_bias: bias shape " + shape_string(bs) + " is not a suffix of " +
                         shape_string(xs));
  }
  const Index cols = static_cast<Index>(b.size());
  const Index rows = cols == 0 ? 0 : static_cast<Index>(x.size()) / cols;
  Tensor y(xs);
  view(y.values(), rows, cols) = cview(x.values(), rows, cols).rowwise() + b.values().transpose();
  if (recording({&x, &b})) {
    TensorImpl *xi = x.impl(), *bi = b.impl(), *yi = y.impl();
    record("add_bias", {&x, &b}, y, [xi, bi, yi, rows, cols] {
      if (xi->requires_grad) xi->grad_buffer() += yi->grad;
      if (bi->requires_grad) bi->grad_buffer() += cview(yi->grad, rows, cols).colwise().sum().transpose();
    });
  }
  return y;
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](Scalar v) { return std::exp(v); }, [](Scalar, Scalar y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](Scalar v) { return std::log(v); }, [](Scalar v, Scalar) { return 1.0 / v; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](Scalar v) { return v > 0 ? v : 0.0; }, [](Scalar v, Scalar) { return v > 0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr Scalar inv_sqrt2 = 0.70710678118654752440;
  constexpr Scalar inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      "gelu", x, [](Scalar v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](Scalar v, Scalar) {
        const Scalar cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        return cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  Tensor y = Tensor::scalar(x.values().sum());
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("sum", {&x}, y, [xi, yi] { xi->grad_buffer().array() += yi->grad[0]; });
  }
  return y;
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("mean of an empty tensor");
  const Scalar n = static_cast<Scalar>(x.size());
  Tensor y = Tensor::scalar(x.values().sum() / n);
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("mean", {&x}, y, [xi, yi, n] { xi->grad_buffer().array() += yi->grad[0] / n; });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Linear algebra and layout

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const Index m = static_cast<Index>(a.dim(0)), k = static_cast<Index>(a.dim(1)),
              n = static_cast<Index>(b.dim(1));
  Tensor y({a.dim(0), b.dim(1)});
  view(y.values(), m, n).noalias() = a.matrix() * b.matrix();
  if (recording({&a, &b})) {
    TensorImpl *ai = a.impl(), *bi = b.impl(), *yi = y.impl();
    record("matmul", {&a, &b}, y, [ai, bi, yi, m, k, n] {
      auto dy = cview(yi->grad, m, n);
      if (ai->requires_grad) view(ai->grad_buffer(), m, k).noalias() += dy * cview(bi->value, k, n).transpose();
      if (bi->requires_grad) view(bi->grad_buffer(), k, n).noalias() += cview(ai->value, m, k).transpose() * dy;
    });
  }
  return y;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw DimensionError("bmm: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const Index g = static_cast<Index>(a.dim(0)), m = static_cast<Index>(a.dim(1)),
              k = static_cast<Index>(a.dim(2)), n = static_cast<Index>(b.dim(2));
  Tensor y({a.dim(0), a.dim(1), b.dim(2)});
  for (Index i = 0; i < g; ++i) {
    MatrixMap(y.values().data() + i * m * n, m, n).noalias() =
        ConstMatrixMap(a.values().data() + i * m * k, m, k) * ConstMatrixMap(b.values().data() + i * k * n, k, n);
  }
  if (recording({&a, &b})) {
    TensorImpl *ai = a.impl(), *bi = b.impl(), *yi = y.impl();
    record("bmm", {&a, &b}, y, [ai, bi, yi, g, m, k, n] {
      const bool da = ai->requires_grad, db = bi->requires_grad;
      Scalar* ga = da ? ai->grad_buffer().data() : nullptr;
      Scalar* gb = db ? bi->grad_buffer().data() : nullptr;
      for (Index i = 0; i < g; ++i) {
        ConstMatrixMap dy(yi->grad.data() + i * m * n, m, n);
        if (da) MatrixMap(ga + i * m * k, m, k).noalias() += dy * ConstMatrixMap(bi->value.data() + i * k * n, k, n).transpose();
        if (db) MatrixMap(gb + i * k * n, k, n).noalias() += ConstMatrixMap(ai->value.data() + i * m * k, m, k).transpose() * dy;
      }
    });
  }
  return y;
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 3) {
    throw DimensionError("transpose: expected rank 2 or 3, got " + shape_string(x.shape()));
  }
  if (x.rank() == 2) return permute(x, {1, 0});
  return permute(x, {0, 2, 1});
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  Tensor y(std::move(shape), x.values());
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("reshape", {&x}, y, [xi, yi] { xi->grad_buffer() += yi->grad; });
  }
  return y;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const std::size_t r = x.rank();
  std::vector<std::size_t> seen(order);
  std::sort(seen.begin(), seen.end());
  std::vector<std::size_t> expected(r);
  std::iota(expected.begin(), expected.end(), 0);
  if (seen != expected) throw DimensionError("permute: invalid axis order for " + shape_string(x.shape()));

  const Shape& in = x.shape();
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * in[i];
  Shape out(r);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out[i] = in[order[i]];
    src_stride[i] = in_strides[order[i]];
  }
  // Flat destination index -> flat source index.
  const std::size_t n = x.size();
  auto map = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> counter(r, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < n; ++dst) {
    (*map)[dst] = src;
    for (std::size_t ax = r; ax-- > 0;) {
      if (++counter[ax] < out[ax]) {
        src += src_stride[ax];
        break;
      }
      src -= src_stride[ax] * (out[ax] - 1);
      counter[ax] = 0;
    }
  }
  Tensor y(out);
  for (std::size_t i = 0; i < n; ++i) y.values()[static_cast<Index>(i)] = x.values()[static_cast<Index>((*map)[i])];
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("permute", {&x}, y, [xi, yi, map] {
      Vector& g = xi->grad_buffer();
      for (std::size_t i = 0; i < map->size(); ++i) g[static_cast<Index>((*map)[i])] += yi->grad[static_cast<Index>(i)];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Normalisations

Tensor softmax_lastdim(const Tensor& x) {
  const Index cols = last_dim(x);
  if (cols < 1) throw DimensionError("softmax_lastdim: empty last dimension");
  const Index rows = static_cast<Index>(x.size()) / cols;
  Tensor y(x.shape());
  auto in = x.matrix();
  auto out = y.matrix();
  for (Index r = 0; r < rows; ++r) {
    const Scalar mx = unmasked_max(in.row(r), "softmax_lastdim", r);
    Scalar total = 0;
    for (Index c = 0; c < cols; ++c) {
      const Scalar e = std::exp(in(r, c) - mx);
      out(r, c) = e;
      total += e;
    }
    out.row(r) /= total;
  }
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("softmax_lastdim", {&x}, y, [xi, yi, rows, cols] {
      auto yv = cview(yi->value, rows, cols);
      auto dy = cview(yi->grad, rows, cols);
      auto dx = view(xi->grad_buffer(), rows, cols);
      const Vector dot = dy.cwiseProduct(yv).rowwise().sum();
      dx.array() += yv.array() * (dy.colwise() - dot).array();
    });
  }
  return y;
}

Tensor log_softmax_lastdim(const Tensor& x) {
  const Index cols = last_dim(x);
  if (cols < 1) throw DimensionError("log_softmax_lastdim: empty last dimension");
  const Index rows = static_cast<Index>(x.size()) / cols;
  Tensor y(x.shape());
  auto in = x.matrix();
  auto out = y.matrix();
  for (Index r = 0; r < rows; ++r) {
    const Scalar mx = unmasked_max(in.row(r), "log_softmax_lastdim", r);
    Scalar total = 0;
    for (Index c = 0; c < cols; ++c) total += std::exp(in(r, c) - mx);
    const Scalar lse = mx + std::log(total);
    for (Index c = 0; c < cols; ++c) out(r, c) = in(r, c) - lse;
  }
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("log_softmax_lastdim", {&x}, y, [xi, yi, rows, cols] {
      auto dy = cview(yi->grad, rows, cols);
      auto dx = view(xi->grad_buffer(), rows, cols);
      const RowMatrix p = cview(yi->value, rows, cols).array().exp();
      const Vector total = dy.rowwise().sum();
      dx += dy - (p.array().colwise() * total.array()).matrix();
    });
  }
  return y;
}

namespace {

// Shared layer-norm core; gamma/beta may be undefined.
Tensor layer_norm_impl(const Tensor& x, const Tensor* gamma, const Tensor* beta, Scalar eps) {
  const Index cols = last_dim(x);
  const Index rows = static_cast<Index>(x.size()) / cols;
  if (gamma && (gamma->rank() != 1 || static_cast<Index>(gamma->size()) != cols)) {
    throw DimensionError("layer_norm: gamma shape " + shape_string(gamma->shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  if (beta && (beta->rank() != 1 || static_cast<Index>(beta->size()) != cols)) {
    throw DimensionError("layer_norm: beta shape " + shape_string(beta->shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  auto normalized = std::make_shared<RowMatrix>(rows, cols);
  auto inv_std = std::make_shared<Vector>(rows);
  auto in = x.matrix();
  for (Index r = 0; r < rows; ++r) {
    const Scalar mu = in.row(r).mean();
    const Scalar var = (in.row(r).array() - mu).square().mean();
    const Scalar is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    normalized->row(r) = (in.row(r).array() - mu) * is;
  }
  Tensor y(x.shape());
  auto out = y.matrix();
  out = *normalized;
  if (gamma) out.array().rowwise() *= gamma->values().transpose().array();
  if (beta) out.rowwise() += beta->values().transpose();

  const Tensor none;
  const Tensor& g = gamma ? *gamma : none;
  const Tensor& b = beta ? *beta : none;
  const bool rec = gamma && beta ? recording({&x, &g, &b}) : recording({&x});
  if (rec) {
    TensorImpl* xi = x.impl();
    TensorImpl* gi = gamma ? gamma->impl() : nullptr;
    TensorImpl* bi = beta ? beta->impl() : nullptr;
    TensorImpl* yi = y.impl();
    auto body = [xi, gi, bi, yi, normalized, inv_std, rows, cols] {
      auto dy = cview(yi->grad, rows, cols);
      if (gi && gi->requires_grad) gi->grad_buffer() += dy.cwiseProduct(*normalized).colwise().sum().transpose();
      if (bi && bi->requires_grad) bi->grad_buffer() += dy.colwise().sum().transpose();
      if (!xi->requires_grad) return;
      RowMatrix dxhat = dy;
      if (gi) dxhat.array().rowwise() *= gi->value.transpose().array();
      auto dx = view(xi->grad_buffer(), rows, cols);
      for (Index r = 0; r < rows; ++r) {
        const Scalar m1 = dxhat.row(r).mean();
        const Scalar m2 = dxhat.row(r).cwiseProduct(normalized->row(r)).mean();
        dx.row(r).array() +=
            (*inv_std)[r] * (dxhat.row(r).array() - m1 - normalized->row(r).array() * m2);
      }
    };
    if (gamma && beta) {
      record("layer_norm", {&x, gamma, beta}, y, body);
    } else {
      record("layer_norm", {&x}, y, body);
    }
  }
  return y;
}

}  // namespace

Tensor layer_norm(const Tensor& x, Scalar eps) { return layer_norm_impl(x, nullptr, nullptr, eps); }

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps) {
  return layer_norm_impl(x, &gamma, &beta, eps);
}

Tensor l2_normalize_lastdim(const Tensor& x, Scalar eps) {
  const Index cols = last_dim(x);
  const Index rows = static_cast<Index>(x.size()) / cols;
  auto norms = std::make_shared<Vector>(rows);
  Tensor y(x.shape());
  auto in = x.matrix();
  auto out = y.matrix();
  for (Index r = 0; r < rows; ++r) {
    const Scalar n = std::max(in.row(r).norm(), eps);
    (*norms)[r] = n;
    out.row(r) = in.row(r) / n;
  }
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    record("l2_normalize_lastdim", {&x}, y, [xi, yi, norms, rows, cols, eps] {
      auto yv = cview(yi->value, rows, cols);
      auto dy = cview(yi->grad, rows, cols);
      auto dx = view(xi->grad_buffer(), rows, cols);
      for (Index r = 0; r < rows; ++r) {
        const Scalar n = (*norms)[r];
        if (n <= eps) {
          dx.row(r) += dy.row(r) / n;
        } else {
          dx.row(r) += (dy.row(r) - yv.row(r) * yv.row(r).dot(dy.row(r))) / n;
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Indexing

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  if (x.rank() == 0) throw DimensionError("gather_rows: scalar input");
  const std::size_t n_rows = x.dim(0);
  const Index width = n_rows == 0 ? 0 : static_cast<Index>(x.size() / n_rows);
  for (auto r : rows) {
    if (r >= n_rows) {
      throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range for " + shape_string(x.shape()));
    }
  }
  Shape out_shape = x.shape();
  out_shape[0] = rows.size();
  Tensor y(out_shape);
  const Index count = static_cast<Index>(rows.size());
  for (Index i = 0; i < count; ++i) {
    y.values().segment(i * width, width) = x.values().segment(static_cast<Index>(rows[static_cast<std::size_t>(i)]) * width, width);
  }
  if (recording({&x})) {
    TensorImpl *xi = x.impl(), *yi = y.impl();
    auto idx = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
    record("gather_rows", {&x}, y, [xi, yi, idx, width] {
      Vector& g = xi->grad_buffer();
      for (std::size_t i = 0; i < idx->size(); ++i) {
        g.segment(static_cast<Index>((*idx)[i]) * width, width) += yi->grad.segment(static_cast<Index>(i) * width, width);
      }
    });
  }
  return y;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (first.empty()) throw DimensionError("concat: scalar inputs");
  Shape out_shape = first;
  out_shape[0] = 0;
  for (const auto& p : parts) {
    if (p.rank() != first.size() || !std::equal(first.begin() + 1, first.end(), p.shape().begin() + 1)) {
      throw DimensionError("concat: trailing dims differ between " + shape_string(first) + " and " +
                           shape_string(p.shape()));
    }
    out_shape[0] += p.dim(0);
  }
  Tensor y(out_shape);
  Index offset = 0;
  for (const auto& p : parts) {
    y.values().segment(offset, static_cast<Index>(p.size())) = p.values();
    offset += static_cast<Index>(p.size());
  }
  if (Tape::active() != nullptr &&
      std::any_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.requires_grad(); })) {
    std::vector<TensorImpl*> impls;
    std::vector<const Tensor*> inputs;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      inputs.push_back(&p);
    }
    TensorImpl* yi = y.impl();
    y.set_requires_grad(true);
    Tape::active()->record("concat", inputs, y, [impls, yi] {
      Index off = 0;
      for (TensorImpl* pi : impls) {
        const Index n = pi->value.size();
        if (pi->requires_grad) pi->grad_buffer() += yi->grad.segment(off, n);
        off += n;
      }
    });
  }
  return y;
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw DimensionError("pairwise_sq_dist: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const Index na = static_cast<Index>(a.dim(0)), nb = static_cast<Index>(b.dim(0)), d = static_cast<Index>(a.dim(1));
  Tensor y({a.dim(0), b.dim(0)});
  auto am = a.matrix();
  auto bm = b.matrix();
  auto out = y.matrix();
  for (Index i = 0; i < na; ++i) {
    for (Index j = 0; j < nb; ++j) out(i, j) = (am.row(i) - bm.row(j)).squaredNorm();
  }
  if (recording({&a, &b})) {
    TensorImpl *ai = a.impl(), *bi = b.impl(), *yi = y.impl();
    record("pairwise_sq_dist", {&a, &b}, y, [ai, bi, yi, na, nb, d] {
      auto dy = cview(yi->grad, na, nb);
      auto av = cview(ai->value, na, d);
      auto bv = cview(bi->value, nb, d);
      if (ai->requires_grad) {
        auto ga = view(ai->grad_buffer(), na, d);
        ga += 2.0 * (av.array().colwise() * dy.rowwise().sum().array()).matrix() - 2.0 * dy * bv;
      }
      if (bi->requires_grad) {
        auto gb = view(bi->grad_buffer(), nb, d);
        gb += 2.0 * (bv.array().colwise() * dy.colwise().sum().transpose().array()).matrix() - 2.0 * dy.transpose() * av;
      }
    });
  }
  return y;
}

Tensor stop_gradient(const Tensor& x) { return Tensor(x.shape(), x.values(), false); }

}  // namespace wintr
