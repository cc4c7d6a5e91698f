// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace inrrom {

using Shape = std::vector<std::size_t>;

/// Allocator for tensor storage. New doubles are left uninitialised, and
/// blocks are 64-byte aligned so that vectorised reductions see the same
/// alignment on every run and sum in the same order.
template <class T>
struct DefaultInitAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  DefaultInitAllocator() noexcept = default;
  template <class U>
  DefaultInitAllocator(const DefaultInitAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
  template <class U>
  friend bool operator==(const DefaultInitAllocator&, const DefaultInitAllocator<U>&) noexcept {
    return true;
  }
};

using Storage = std::vector<double, DefaultInitAllocator<double>>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Rank-1 tensors behave as column
/// vectors wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// Tensor whose entries are left unset; every entry must be written.
  static Tensor uninitialized(Shape shape);
  static Tensor scalar(double value);
  static Tensor column(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Scalar value of a single-element tensor.
  double item() const;

  bool all_finite() const noexcept;
  /// Throws DomainError naming `what` if any entry is NaN or infinite.
  void check_finite(std::string_view what) const;

  Tensor reshaped(Shape shape) const;
  void fill(double value);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  Storage data_;
};

// Untracked tensor arithmetic. Pure functions, safe to call concurrently.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sin(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor square(const Tensor& a);
double sum(const Tensor& a);
double max_abs(const Tensor& a);
double frobenius_norm(const Tensor& a);

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op);

}  // namespace inrrom
