// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/autodiff.hpp"

#include <atomic>
#include <sstream>

#include "wintr/errors.hpp"

namespace wintr {

namespace {

std::atomic<std::uint64_t> next_tensor_id{1};
thread_local Tape* active_tape = nullptr;

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, Vector value, bool requires_grad) {
  if (static_cast<std::size_t>(value.size()) != shape_size(shape)) {
    throw DimensionError("tensor data length " + std::to_string(value.size()) +
                         " does not match shape " + shape_string(shape));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(value);
  impl->requires_grad = requires_grad;
  impl->id = next_tensor_id.fetch_add(1, std::memory_order_relaxed);
  return impl;
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Vector& detail::TensorImpl::grad_buffer() {
  if (grad.size() != value.size()) grad = Vector::Zero(value.size());
  return grad;
}

Tensor::Tensor(Shape shape, bool requires_grad) {
  const auto n = static_cast<Eigen::Index>(shape_size(shape));
  impl_ = make_impl(std::move(shape), Vector::Zero(n), requires_grad);
}

Tensor::Tensor(Shape shape, std::vector<Scalar> values, bool requires_grad) {
  Vector v = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  impl_ = make_impl(std::move(shape), std::move(v), requires_grad);
}

Tensor::Tensor(Shape shape, const Vector& values, bool requires_grad) {
  impl_ = make_impl(std::move(shape), values, requires_grad);
}

Tensor Tensor::scalar(Scalar value) { return Tensor(Shape{}, std::vector<Scalar>{value}); }

Tensor Tensor::from_matrix(const Eigen::Ref<const RowMatrix>& m, bool requires_grad) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, requires_grad);
  t.matrix() = m;
  return t;
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::size() const { return static_cast<std::size_t>(impl_->value.size()); }

Vector& Tensor::values() { return impl_->value; }
const Vector& Tensor::values() const { return impl_->value; }

Scalar Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return impl_->value[0];
}

namespace {
std::pair<Eigen::Index, Eigen::Index> view_dims(const Shape& s, std::size_t n) {
  const std::size_t cols = s.empty() ? 1 : s.back();
  const std::size_t rows = cols == 0 ? 0 : n / cols;
  return {static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
}  // namespace

MatrixMap Tensor::matrix() {
  auto [r, c] = view_dims(shape(), size());
  return MatrixMap(impl_->value.data(), r, c);
}

ConstMatrixMap Tensor::matrix() const {
  auto [r, c] = view_dims(shape(), size());
  return ConstMatrixMap(impl_->value.data(), r, c);
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { impl_->requires_grad = flag; }
bool Tensor::has_grad() const { return impl_->grad.size() == impl_->value.size() && size() > 0; }

Vector Tensor::grad() const {
  if (has_grad()) return impl_->grad;
  return Vector::Zero(impl_->value.size());
}

ConstMatrixMap Tensor::grad_matrix() const {
  auto [r, c] = view_dims(shape(), size());
  return ConstMatrixMap(impl_->grad_buffer().data(), r, c);
}

void Tensor::zero_grad() {
  if (impl_->grad.size() > 0) impl_->grad.setZero();
}

std::uint64_t Tensor::graph_id() const { return impl_->id; }

Tensor Tensor::clone() const { return Tensor(shape(), values(), requires_grad()); }

// ---------------------------------------------------------------------------

void Tape::record(std::string_view op, const std::vector<const Tensor*>& inputs, const Tensor& output,
                  BackwardFn backward) {
  Node node;
  node.op = op;
  node.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) node.inputs.push_back(t->shared_impl());
  node.output = output.shared_impl();
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;  // nothing differentiable upstream
  loss.impl()->grad_buffer()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.size() == 0) continue;
    it->backward();
  }
}

Tape* Tape::active() { return active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }
TapeScope::~TapeScope() { active_tape = previous_; }

}  // namespace wintr
