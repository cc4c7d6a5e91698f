// SPDX-License-Identifier: Apache-2.0
#include "inrrom/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "inrrom/errors.hpp"

namespace inrrom {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

std::size_t extent_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
}

template <typename F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out = Tensor::uninitialized(a.shape());
  const double* src = a.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, std::string_view op, F f) {
  require_same_shape(a, b, op);
  Tensor out = Tensor::uninitialized(a.shape());
  const double* x = a.data();
  const double* y = b.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(extent_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  validate_shape(shape_);
  if (data_.size() != extent_product(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::uninitialized(Shape shape) {
  validate_shape(shape);
  Tensor t;
  t.data_.resize(extent_product(shape));
  t.shape_ = std::move(shape);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, std::vector<double>{value}); }

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n, 1}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::size_t Tensor::rows() const {
  if (shape_.size() > 2) throw DimensionError("rows() on tensor of shape " + shape_string(shape_));
  return shape_.empty() ? 0 : shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() > 2) throw DimensionError("cols() on tensor of shape " + shape_string(shape_));
  return shape_.size() == 2 ? shape_[1] : 1;
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractError("item() requires a single-element tensor, got " + shape_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::check_finite(std::string_view what) const {
  if (!all_finite()) throw DomainError(std::string(what) + ": non-finite value");
}

Tensor Tensor::reshaped(Shape shape) const {
  if (extent_product(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  validate_shape(shape);
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() > 2 || b.rank() > 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::uninitialized({a.rows(), b.cols()});
  MatrixMap c(out.data(), a.rows(), b.cols());
  c.noalias() = ConstMatrixMap(a.data(), a.rows(), a.cols()) *
                ConstMatrixMap(b.data(), b.rows(), b.cols());
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out = Tensor::uninitialized({a.cols(), a.rows()});
  MatrixMap(out.data(), a.cols(), a.rows()) =
      ConstMatrixMap(a.data(), a.rows(), a.cols()).transpose();
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return map_binary(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return map_binary(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  return map_binary(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
  return map_unary(a, [s](double x) { return s * x; });
}

Tensor sin(const Tensor& a) {
  return map_unary(a, [](double x) { return std::sin(x); });
}

Tensor tanh(const Tensor& a) {
  return map_unary(a, [](double x) { return std::tanh(x); });
}

Tensor square(const Tensor& a) {
  return map_unary(a, [](double x) { return x * x; });
}

double sum(const Tensor& a) {
  return std::accumulate(a.values().begin(), a.values().end(), 0.0);
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double frobenius_norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace inrrom
