// SPDX-License-Identifier: Apache-2.0
#include "inrrom/autodiff.hpp"

#include <Eigen/Core>

#include <cmath>

#include "inrrom/errors.hpp"

namespace inrrom {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;
using ArrayMap = Eigen::Map<Eigen::ArrayXd>;

ConstMatrixMap as_matrix(const Tensor& t) { return {t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())}; }
MatrixMap as_matrix(Tensor& t) { return {t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())}; }
ConstArrayMap as_array(const Tensor& t) { return {t.data(), Eigen::Index(t.size())}; }
ArrayMap as_array(Tensor& t) { return {t.data(), Eigen::Index(t.size())}; }

using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowArrayMap = Eigen::Map<const RowArray>;
using RowArrayMap = Eigen::Map<RowArray>;
using ConstRowVecMap = Eigen::Map<const Eigen::Array<double, 1, Eigen::Dynamic>>;

// Adds an elementwise expression into a node gradient, writing directly on
// first touch instead of zero-filling and adding.
template <class Expr>
void accumulate(Tape& tp, std::size_t id, const Expr& e) {
  if (tp.has_grad(id)) {
    as_array(tp.grad_buffer(id)) += e;
  } else {
    as_array(tp.fresh_grad(id)) = e;
  }
}

template <class Expr>
void accumulate_product(Tape& tp, std::size_t id, const Expr& e) {
  if (tp.has_grad(id)) {
    as_matrix(tp.grad_buffer(id)).noalias() += e;
  } else {
    as_matrix(tp.fresh_grad(id)).noalias() = e;
  }
}

Tape& same_tape(const Var& a, const Var& b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands live on different tapes");
  return a.tape();
}

}  // namespace

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) {
    grad = Tensor(value.shape());
  } else {
    grad.fill(0.0);
  }
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Hadamard: return "hadamard";
    case OpKind::Scale: return "scale";
    case OpKind::Sin: return "sin";
    case OpKind::Tanh: return "tanh";
    case OpKind::Square: return "square";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Norm: return "norm";
    case OpKind::Reshape: return "reshape";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::Gather: return "gather";
    case OpKind::TileRows: return "tile_rows";
    case OpKind::RepeatRows: return "repeat_rows";
    case OpKind::Affine: return "affine";
    case OpKind::Modulate: return "modulate";
  }
  return "?";
}

const Tensor& Var::value() const { return tape_->value_of(id_); }
bool Var::requires_grad() const { return tape_->tracked(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.op = OpKind::Constant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  if (!grad_enabled_) return constant(p.value);
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  if (p.grad.shape() != p.value.shape()) p.zero_grad();
  Node n;
  n.op = OpKind::Leaf;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  bound_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  Node n;
  n.op = OpKind::Leaf;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind op, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (auto id : inputs) {
      if (nodes_[id].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Tensor& Tape::fresh_grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.empty()) throw ContractError("fresh_grad: node already holds a gradient");
  n.grad = Tensor::uninitialized(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] += 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.op == OpKind::Leaf) {
      if (n.param != nullptr) as_array(n.param->grad) += as_array(n.grad);
      continue;
    }
    n.backward(*this, i);
    n.grad = Tensor();
  }
}

Tensor Tape::grad(const Var& v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

std::size_t Tape::count(OpKind kind) const {
  std::size_t c = 0;
  for (const auto& n : nodes_) c += (n.op == kind);
  return c;
}

// --- operations -------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b, "matmul");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::MatMul, {ia, ib}, matmul(a.value(), b.value()),
                  [ia, ib](Tape& tp, std::size_t self) {
                    const auto g = as_matrix(tp.upstream(self));
                    if (tp.tracked(ia)) accumulate_product(tp, ia, g * as_matrix(tp.value_of(ib)).transpose());
                    if (tp.tracked(ib)) accumulate_product(tp, ib, as_matrix(tp.value_of(ia)).transpose() * g);
                  });
}

Var transpose(const Var& a) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Transpose, {ia}, transpose(a.value()),
                         [ia](Tape& tp, std::size_t self) {
                           as_matrix(tp.grad_buffer(ia)) += as_matrix(tp.upstream(self)).transpose();
                         });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::Add, {ia, ib}, add(a.value(), b.value()),
                  [ia, ib](Tape& tp, std::size_t self) {
                    const auto g = as_array(tp.upstream(self));
                    if (tp.tracked(ia)) accumulate(tp, ia, g);
                    if (tp.tracked(ib)) accumulate(tp, ib, g);
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::Sub, {ia, ib}, sub(a.value(), b.value()),
                  [ia, ib](Tape& tp, std::size_t self) {
                    const auto g = as_array(tp.upstream(self));
                    if (tp.tracked(ia)) accumulate(tp, ia, g);
                    if (tp.tracked(ib)) accumulate(tp, ib, -g);
                  });
}

Var hadamard(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b, "hadamard");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::Hadamard, {ia, ib}, hadamard(a.value(), b.value()),
                  [ia, ib](Tape& tp, std::size_t self) {
                    const auto g = as_array(tp.upstream(self));
                    if (tp.tracked(ia)) accumulate(tp, ia, g * as_array(tp.value_of(ib)));
                    if (tp.tracked(ib)) accumulate(tp, ib, g * as_array(tp.value_of(ia)));
                  });
}

Var scale(const Var& a, double s) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Scale, {ia}, scale(a.value(), s),
                         [ia, s](Tape& tp, std::size_t self) {
                           accumulate(tp, ia, s * as_array(tp.upstream(self)));
                         });
}

Var sin(const Var& a) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Sin, {ia}, sin(a.value()),
                         [ia](Tape& tp, std::size_t self) {
                           accumulate(tp, ia, as_array(tp.upstream(self)) * as_array(tp.value_of(ia)).cos());
                         });
}

Var tanh(const Var& a) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Tanh, {ia}, tanh(a.value()),
                         [ia](Tape& tp, std::size_t self) {
                           const auto y = as_array(tp.value_of(self));
                           accumulate(tp, ia, as_array(tp.upstream(self)) * (1.0 - y.square()));
                         });
}

Var square(const Var& a) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Square, {ia}, square(a.value()),
                         [ia](Tape& tp, std::size_t self) {
                           accumulate(tp, ia, 2.0 * as_array(tp.upstream(self)) * as_array(tp.value_of(ia)));
                         });
}

Var sum(const Var& a) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Sum, {ia}, Tensor::scalar(sum(a.value())),
                         [ia](Tape& tp, std::size_t self) {
                           as_array(tp.grad_buffer(ia)) += tp.upstream(self)[0];
                         });
}

Var mean(const Var& a) {
  const std::size_t ia = a.id();
  const double inv_n = 1.0 / double(a.size());
  return a.tape().record(OpKind::Mean, {ia}, Tensor::scalar(sum(a.value()) * inv_n),
                         [ia, inv_n](Tape& tp, std::size_t self) {
                           as_array(tp.grad_buffer(ia)) += tp.upstream(self)[0] * inv_n;
                         });
}

Var norm(const Var& a) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Norm, {ia}, Tensor::scalar(frobenius_norm(a.value())),
                         [ia](Tape& tp, std::size_t self) {
                           const double y = tp.value_of(self)[0];
                           if (y == 0.0) return;
                           as_array(tp.grad_buffer(ia)) +=
                               (tp.upstream(self)[0] / y) * as_array(tp.value_of(ia));
                         });
}

Var reshape(const Var& a, Shape shape) {
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Reshape, {ia}, a.value().reshaped(std::move(shape)),
                         [ia](Tape& tp, std::size_t self) {
                           accumulate(tp, ia, as_array(tp.upstream(self)));
                         });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    if (&p.tape() != &t) throw ContractError("concat_rows: operands live on different tapes");
    if (p.value().cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts.front().shape()) +
                           " vs " + shape_string(p.shape()));
    }
    rows += p.value().rows();
    ids.push_back(p.id());
  }
  Tensor out = Tensor::uninitialized({rows, cols});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.size(), out.data() + offset);
    offset += p.size();
  }
  auto input_ids = ids;
  return t.record(OpKind::ConcatRows, std::move(input_ids), std::move(out),
                  [ids](Tape& tp, std::size_t self) {
                    const double* g = tp.upstream(self).data();
                    for (auto id : ids) {
                      const std::size_t n = tp.value_of(id).size();
                      if (tp.tracked(id)) accumulate(tp, id, ConstArrayMap(g, Eigen::Index(n)));
                      g += n;
                    }
                  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t count) {
  const Tensor& v = a.value();
  if (count == 0 || begin + count > v.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + shape_string(v.shape()));
  }
  const std::size_t cols = v.cols();
  Tensor out = Tensor::uninitialized({count, cols});
  std::copy(v.data() + begin * cols, v.data() + (begin + count) * cols, out.data());
  const std::size_t ia = a.id();
  const std::size_t offset = begin * cols;
  return a.tape().record(OpKind::SliceRows, {ia}, std::move(out),
                         [ia, offset](Tape& tp, std::size_t self) {
                           const Tensor& g = tp.upstream(self);
                           ArrayMap(tp.grad_buffer(ia).data() + offset, Eigen::Index(g.size())) += as_array(g);
                         });
}

Var gather(const Var& a, IndexList indices) {
  if (!indices || indices->empty()) throw ContractError("gather: empty index list");
  const Tensor& v = a.value();
  Tensor out = Tensor::uninitialized({indices->size(), 1});
  for (std::size_t i = 0; i < indices->size(); ++i) {
    const std::size_t k = (*indices)[i];
    if (k >= v.size()) {
      throw DimensionError("gather: index " + std::to_string(k) + " out of range for " +
                           shape_string(v.shape()));
    }
    out[i] = v[k];
  }
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::Gather, {ia}, std::move(out),
                         [ia, indices](Tape& tp, std::size_t self) {
                           const Tensor& g = tp.upstream(self);
                           Tensor& ga = tp.grad_buffer(ia);
                           const auto& idx = *indices;
                           for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
                         });
}

Var tile_rows(const Var& a, std::size_t times) {
  if (times == 0) throw ContractError("tile_rows: times must be positive");
  const Tensor& v = a.value();
  Tensor out = Tensor::uninitialized({v.rows() * times, v.cols()});
  for (std::size_t k = 0; k < times; ++k) std::copy(v.data(), v.data() + v.size(), out.data() + k * v.size());
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::TileRows, {ia}, std::move(out),
                         [ia, times](Tape& tp, std::size_t self) {
                           Tensor& ga = tp.grad_buffer(ia);
                           const std::size_t n = ga.size();
                           const double* g = tp.upstream(self).data();
                           auto acc = as_array(ga);
                           for (std::size_t k = 0; k < times; ++k) acc += ConstArrayMap(g + k * n, Eigen::Index(n));
                         });
}

Var repeat_rows(const Var& a, std::size_t times) {
  if (times == 0) throw ContractError("repeat_rows: times must be positive");
  const Tensor& v = a.value();
  const std::size_t rows = v.rows(), cols = v.cols();
  Tensor out = Tensor::uninitialized({rows * times, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < times; ++k) {
      std::copy(v.data() + r * cols, v.data() + (r + 1) * cols, out.data() + (r * times + k) * cols);
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record(OpKind::RepeatRows, {ia}, std::move(out),
                         [ia, times, rows](Tape& tp, std::size_t self) {
                           // Row r of the input collects the column sums of its block.
                           const auto g = as_matrix(tp.upstream(self));
                           auto ga = as_matrix(tp.grad_buffer(ia));
                           for (std::size_t r = 0; r < rows; ++r) {
                             ga.row(Eigen::Index(r)) +=
                                 g.middleRows(Eigen::Index(r * times), Eigen::Index(times)).colwise().sum();
                           }
                         });
}

Var affine(const Var& x, const Var& w_t, const Var& b) {
  Tape& t = same_tape(x, w_t, "affine");
  same_tape(x, b, "affine");
  const Tensor& xv = x.value();
  const Tensor& wv = w_t.value();
  const Tensor& bv = b.value();
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw DimensionError("affine: shapes " + shape_string(xv.shape()) + " x " + shape_string(wv.shape()) + " + " +
                         shape_string(bv.shape()));
  }
  Tensor out = Tensor::uninitialized({xv.rows(), wv.cols()});
  auto o = as_matrix(out);
  o.noalias() = as_matrix(xv) * as_matrix(wv);
  o.rowwise() += as_matrix(bv).row(0);
  const std::size_t ix = x.id(), iw = w_t.id(), ib = b.id();
  return t.record(OpKind::Affine, {ix, iw, ib}, std::move(out), [ix, iw, ib](Tape& tp, std::size_t self) {
    const auto g = as_matrix(tp.upstream(self));
    if (tp.tracked(ix)) accumulate_product(tp, ix, g * as_matrix(tp.value_of(iw)).transpose());
    if (tp.tracked(iw)) accumulate_product(tp, iw, as_matrix(tp.value_of(ix)).transpose() * g);
    if (tp.tracked(ib)) accumulate(tp, ib, g.colwise().sum().transpose().array());
  });
}

namespace {

Var modulate_impl(const Var* z, const Var& amp, const Var& filt) {
  Tape& t = same_tape(amp, filt, "modulate");
  const Tensor& av = amp.value();
  const Tensor& fv = filt.value();
  const std::size_t snaps = av.rows(), points = fv.rows(), w = fv.cols();
  if (av.cols() != w) {
    throw DimensionError("modulate: amplitude " + shape_string(av.shape()) + " vs filter " + shape_string(fv.shape()));
  }
  if (z) {
    same_tape(*z, amp, "modulate");
    if (z->value().rows() != snaps * points || z->value().cols() != w) {
      throw DimensionError("modulate: input " + shape_string(z->shape()) + " does not match [" +
                           std::to_string(snaps * points) + "," + std::to_string(w) + "]");
    }
  }
  const auto P = Eigen::Index(points), W = Eigen::Index(w);
  Tensor out = Tensor::uninitialized({snaps * points, w});
  const ConstRowArrayMap f(fv.data(), P, W);
  for (std::size_t s = 0; s < snaps; ++s) {
    const ConstRowVecMap a(av.data() + s * w, W);
    RowArrayMap o(out.data() + s * points * w, P, W);
    if (z) {
      o = ConstRowArrayMap(z->value().data() + s * points * w, P, W) * (f.rowwise() * a);
    } else {
      o = f.rowwise() * a;
    }
  }
  std::vector<std::size_t> inputs{amp.id(), filt.id()};
  const std::size_t ia = amp.id(), ifl = filt.id();
  const bool has_z = z != nullptr;
  const std::size_t iz = has_z ? z->id() : 0;
  if (has_z) inputs.push_back(iz);
  return t.record(OpKind::Modulate, std::move(inputs), std::move(out),
                  [=](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.upstream(self);
                    const Tensor& av2 = tp.value_of(ia);
                    const ConstRowArrayMap f2(tp.value_of(ifl).data(), P, W);
                    const bool want_z = has_z && tp.tracked(iz);
                    const bool want_a = tp.tracked(ia), want_f = tp.tracked(ifl);
                    Tensor* gz = nullptr;
                    bool gz_fresh = false;
                    if (want_z) {
                      gz_fresh = !tp.has_grad(iz);
                      gz = gz_fresh ? &tp.fresh_grad(iz) : &tp.grad_buffer(iz);
                    }
                    Tensor* ga = want_a ? &tp.grad_buffer(ia) : nullptr;
                    Tensor* gf = want_f ? &tp.grad_buffer(ifl) : nullptr;
                    RowArray tmp(P, W);
                    for (std::size_t s = 0; s < snaps; ++s) {
                      const ConstRowVecMap a(av2.data() + s * w, W);
                      const ConstRowArrayMap gs(g.data() + s * points * w, P, W);
                      if (gz) {
                        RowArrayMap dz(gz->data() + s * points * w, P, W);
                        if (gz_fresh) {
                          dz = gs * (f2.rowwise() * a);
                        } else {
                          dz += gs * (f2.rowwise() * a);
                        }
                      }
                      if (!ga && !gf) continue;
                      if (has_z) {
                        tmp = gs * ConstRowArrayMap(tp.value_of(iz).data() + s * points * w, P, W);
                      } else {
                        tmp = gs;
                      }
                      if (ga) {
                        Eigen::Map<Eigen::Array<double, 1, Eigen::Dynamic>>(ga->data() + s * w, W) +=
                            (tmp * f2).colwise().sum();
                      }
                      if (gf) RowArrayMap(gf->data(), P, W) += tmp.rowwise() * a;
                    }
                  });
}

}  // namespace

Var modulate(const Var& amp, const Var& filt) { return modulate_impl(nullptr, amp, filt); }
Var modulate(const Var& z, const Var& amp, const Var& filt) { return modulate_impl(&z, amp, filt); }

}  // namespace inrrom
