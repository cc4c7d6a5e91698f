// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "inrrom/tensor.hpp"

namespace inrrom {

/// A trainable tensor. `grad` always has the shape of `value`.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad();
  std::size_t size() const noexcept { return value.size(); }
};

enum class OpKind {
  Constant,
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Hadamard,
  Scale,
  Sin,
  Tanh,
  Square,
  Sum,
  Mean,
  Norm,
  Reshape,
  ConcatRows,
  SliceRows,
  Gather,
  TileRows,
  RepeatRows,
  Affine,
  Modulate,
};

const char* op_name(OpKind kind);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const { return *tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using IndexList = std::shared_ptr<const std::vector<std::size_t>>;

/// Append-only record of tracked operations for reverse-mode differentiation.
///
/// Nodes are stored in creation order, so every input precedes its consumers
/// and a single reverse sweep visits the DAG in topological order. One tape
/// is meant to live for one training step.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    OpKind op = OpKind::Constant;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  /// With gradients disabled every parameter binds as a constant and no
  /// backward closures are recorded.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var constant(Tensor value);
  /// Leaf whose gradient is accumulated into `p.grad` by backward().
  /// Binding the same parameter twice returns the same node.
  Var parameter(Parameter& p);
  /// Tracked leaf not tied to a Parameter; read its gradient with grad().
  Var input(Tensor value);

  /// Reverse sweep from a single-element loss. Parameter gradients
  /// accumulate; callers reset them between steps.
  void backward(const Var& loss);

  /// Gradient of the last backward() with respect to a leaf.
  Tensor grad(const Var& v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t count(OpKind kind) const;

  // Used by op implementations.
  Var record(OpKind op, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);
  const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
  bool tracked(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of node `id`, zero-initialised on first access.
  Tensor& grad_buffer(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  /// Unset gradient buffer for a node without one; the caller must write
  /// every entry.
  Tensor& fresh_grad(std::size_t id);
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

 private:
  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
};

// Tracked operations. Each records a node when any input requires a
// gradient; otherwise the result is an untracked constant on the same tape.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var sin(const Var& a);
Var tanh(const Var& a);
Var square(const Var& a);
/// Sum of all entries, shape [1,1].
Var sum(const Var& a);
/// Mean of all entries, shape [1,1].
Var mean(const Var& a);
/// Frobenius norm, shape [1,1]. Subgradient 0 at the origin.
Var norm(const Var& a);
Var reshape(const Var& a, Shape shape);
/// Stacks rank-2 tensors with equal column counts along the first axis.
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, std::size_t begin, std::size_t count);
/// Column vector [n,1] of flat entries a[indices[i]].
Var gather(const Var& a, IndexList indices);
/// [r,c] -> [r*times, c], whole block repeated.
Var tile_rows(const Var& a, std::size_t times);
/// [r,c] -> [r*times, c], each row repeated `times` times consecutively.
Var repeat_rows(const Var& a, std::size_t times);

/// x w_t + b with `b` [1,out] added to every row of x w_t.
Var affine(const Var& x, const Var& w_t, const Var& b);
/// Row s*P+p of the [S*P, w] result is amp[s] * filt[p] (elementwise), for
/// amp [S,w] and filt [P,w].
Var modulate(const Var& amp, const Var& filt);
/// z * modulate(amp, filt), elementwise.
Var modulate(const Var& z, const Var& amp, const Var& filt);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace inrrom
