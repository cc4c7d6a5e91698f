// SPDX-License-Identifier: Apache-2.0
#include "inrrom/latent.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>

#include "inrrom/errors.hpp"

namespace inrrom {

namespace {

std::vector<std::size_t> mlp_sizes(std::size_t in, std::size_t width, std::size_t hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  for (std::size_t i = 0; i < hidden; ++i) sizes.push_back(width);
  sizes.push_back(out);
  return sizes;
}

std::size_t dense_count(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) n += sizes[i] * sizes[i + 1] + sizes[i + 1];
  return n;
}

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  DenseLayer layer;
  layer.weight = Parameter(name + ".weight", uniform_fan_in(out, in, in, rng));
  layer.bias = Parameter(name + ".bias", uniform_fan_in(out, 1, in, rng));
  return layer;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::NODE: return "NODE";
    case ModelKind::PNODE: return "PNODE";
    case ModelKind::HyperPNODE: return "HyperPNODE";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "NODE") return ModelKind::NODE;
  if (name == "PNODE") return ModelKind::PNODE;
  if (name == "HyperPNODE") return ModelKind::HyperPNODE;
  throw ConfigError("unknown model kind '" + name + "' (expected NODE, PNODE or HyperPNODE)");
}

double MuEncoding::encode(double mu) const {
  if (!(mu > 0.0)) throw DomainError("Reynolds number must be positive");
  return (std::log10(mu) - center) / scale;
}

MuEncoding MuEncoding::fit(const std::vector<double>& params) {
  if (params.empty()) throw ContractError("MuEncoding::fit: no parameters");
  std::vector<double> logs;
  for (double mu : params) {
    if (!(mu > 0.0)) throw DomainError("Reynolds number must be positive");
    logs.push_back(std::log10(mu));
  }
  const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / double(logs.size());
  double var = 0.0;
  for (double l : logs) var += (l - mean) * (l - mean);
  var /= double(logs.size());
  const double sd = std::sqrt(var);
  return {mean, sd > 0.0 ? sd : 1.0};
}

void DynamicsConfig::validate() const {
  if (latent_dim == 0 || width == 0) throw ConfigError("latent_dim and width must be positive");
  if (hidden_layers < 1) throw ConfigError("hidden_layers must be at least 1");
  if (kind == ModelKind::HyperPNODE) {
    if (hidden_layers < 2) throw ConfigError("HyperPNODE needs at least one internal layer (hidden_layers >= 2)");
    if (rank == 0 || rank > width) throw ConfigError("rank must be in [1, width]");
    if (hyper_width == 0) throw ConfigError("hyper_width must be positive");
  }
}

std::size_t count_parameters(const DynamicsConfig& cfg) {
  cfg.validate();
  const std::size_t in = cfg.input_dim(), w = cfg.width, out = cfg.latent_dim;
  if (cfg.kind != ModelKind::HyperPNODE) return dense_count(mlp_sizes(in, w, cfg.hidden_layers, out));
  const std::size_t internal = cfg.internal_layers();
  std::size_t n = (in * w + w) + internal * (2 * w * cfg.rank + w) + (w * out + out);
  n += dense_count(mlp_sizes(1, cfg.hyper_width, cfg.hyper_hidden_layers, cfg.rank * internal));
  return n;
}

Tensor uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / double(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Tensor random_orthonormal(std::size_t n, std::size_t r, std::mt19937_64& rng) {
  if (r > n) throw ContractError("random_orthonormal: more columns than rows");
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = dist(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Tensor t({n, r});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < r; ++j) t(i, j) = q(Eigen::Index(i), Eigen::Index(j));
  }
  return t;
}

// --- DenseMlp ---------------------------------------------------------------

DenseMlp::DenseMlp(const std::string& name, const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw ContractError("DenseMlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers.push_back(make_dense(name + ".layer" + std::to_string(i), sizes[i], sizes[i + 1], rng));
  }
}

DenseMlp::Bound DenseMlp::bind(Tape& tape) {
  Bound b;
  for (auto& l : layers) {
    b.weights.push_back(tape.parameter(l.weight));
    b.biases.push_back(tape.parameter(l.bias));
  }
  return b;
}

Var DenseMlp::apply(const Bound& b, Var x) {
  const std::size_t n = b.weights.size();
  for (std::size_t i = 0; i < n; ++i) {
    x = matmul(b.weights[i], x) + b.biases[i];
    if (i + 1 < n) x = tanh(x);
  }
  return x;
}

std::vector<Parameter*> DenseMlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

// --- LowRankMlp -------------------------------------------------------------

LowRankMlp::LowRankMlp(const std::string& name, std::size_t in, std::size_t width,
                       std::size_t internal_layers, std::size_t rank, std::size_t out,
                       std::mt19937_64& rng) {
  first = make_dense(name + ".layer0", in, width, rng);
  for (std::size_t l = 0; l < internal_layers; ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l + 1);
    Internal layer;
    layer.u = Parameter(prefix + ".u", random_orthonormal(width, rank, rng));
    layer.v = Parameter(prefix + ".v", random_orthonormal(width, rank, rng));
    layer.bias = Parameter(prefix + ".bias", uniform_fan_in(width, 1, width, rng));
    internal.push_back(std::move(layer));
  }
  last = make_dense(name + ".layer" + std::to_string(internal_layers + 1), width, out, rng);
}

LowRankMlp::Bound LowRankMlp::bind(Tape& tape) {
  Bound b;
  b.first_w = tape.parameter(first.weight);
  b.first_b = tape.parameter(first.bias);
  for (auto& l : internal) {
    b.u.push_back(tape.parameter(l.u));
    b.vt.push_back(transpose(tape.parameter(l.v)));
    b.bias.push_back(tape.parameter(l.bias));
  }
  b.last_w = tape.parameter(last.weight);
  b.last_b = tape.parameter(last.bias);
  return b;
}

Var LowRankMlp::apply(const Bound& b, const std::vector<Var>& diagonals, Var x) {
  if (diagonals.size() != b.u.size()) {
    throw ContractError("LowRankMlp: expected " + std::to_string(b.u.size()) + " diagonals, got " +
                        std::to_string(diagonals.size()));
  }
  x = tanh(matmul(b.first_w, x) + b.first_b);
  for (std::size_t l = 0; l < b.u.size(); ++l) {
    const Var projected = hadamard(diagonals[l], matmul(b.vt[l], x));
    x = tanh(matmul(b.u[l], projected) + b.bias[l]);
  }
  return matmul(b.last_w, x) + b.last_b;
}

Var LowRankMlp::orthogonality_penalty(Tape& tape, double rho_u, double rho_v) {
  Var total = tape.constant(Tensor::scalar(0.0));
  for (auto& l : internal) {
    const Var eye = tape.constant(Tensor::identity(l.u.value.cols()));
    const Var u = tape.parameter(l.u);
    const Var v = tape.parameter(l.v);
    total = total + rho_u * norm(matmul(transpose(u), u) - eye);
    total = total + rho_v * norm(matmul(transpose(v), v) - eye);
  }
  return total;
}

std::vector<Parameter*> LowRankMlp::parameters() {
  std::vector<Parameter*> out{&first.weight, &first.bias};
  for (auto& l : internal) {
    out.push_back(&l.u);
    out.push_back(&l.v);
    out.push_back(&l.bias);
  }
  out.push_back(&last.weight);
  out.push_back(&last.bias);
  return out;
}

// --- LatentDynamics ---------------------------------------------------------

LatentDynamics::LatentDynamics(const DynamicsConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  if (cfg.kind == ModelKind::HyperPNODE) {
    low_rank = LowRankMlp("dynamics", cfg.input_dim(), cfg.width, cfg.internal_layers(), cfg.rank,
                          cfg.latent_dim, rng);
    hyper = DenseMlp("hyper", mlp_sizes(1, cfg.hyper_width, cfg.hyper_hidden_layers,
                                        cfg.rank * cfg.internal_layers()), rng);
    // Start the generated diagonals near one.
    auto& out = hyper.layers.back();
    for (auto& v : out.weight.value.values()) v *= 1e-2;
    out.bias.value.fill(1.0);
  } else {
    dense = DenseMlp("dynamics", mlp_sizes(cfg.input_dim(), cfg.width, cfg.hidden_layers, cfg.latent_dim), rng);
  }
}

LatentDynamics::Bound LatentDynamics::bind(Tape& tape, double mu_tilde) {
  Bound b;
  b.kind = cfg_.kind;
  b.tape = &tape;
  b.mu_tilde = mu_tilde;
  if (cfg_.kind != ModelKind::HyperPNODE) {
    b.dense = dense.bind(tape);
    return b;
  }
  b.low_rank = low_rank.bind(tape);
  const Var s = DenseMlp::apply(hyper.bind(tape), tape.constant(Tensor::scalar(mu_tilde)));
  for (std::size_t l = 0; l < cfg_.internal_layers(); ++l) {
    b.diagonals.push_back(slice_rows(s, l * cfg_.rank, cfg_.rank));
  }
  return b;
}

Var LatentDynamics::velocity(const Bound& b, Var u, double t) {
  Tape& tape = *b.tape;
  std::vector<Var> parts{u, tape.constant(Tensor::scalar(t))};
  switch (b.kind) {
    case ModelKind::NODE:
      return DenseMlp::apply(b.dense, concat_rows(parts));
    case ModelKind::PNODE:
      parts.push_back(tape.constant(Tensor::scalar(b.mu_tilde)));
      return DenseMlp::apply(b.dense, concat_rows(parts));
    case ModelKind::HyperPNODE:
      return LowRankMlp::apply(b.low_rank, b.diagonals, concat_rows(parts));
  }
  throw ContractError("unknown model kind");
}

Var LatentDynamics::orthogonality_penalty(Tape& tape, double rho_u, double rho_v) {
  if (cfg_.kind != ModelKind::HyperPNODE) {
    throw ContractError("orthogonality penalty is only defined for HyperPNODE, got " + to_string(cfg_.kind));
  }
  return low_rank.orthogonality_penalty(tape, rho_u, rho_v);
}

std::vector<Parameter*> LatentDynamics::parameters() {
  if (cfg_.kind != ModelKind::HyperPNODE) return dense.parameters();
  auto out = low_rank.parameters();
  for (auto* p : hyper.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> LatentDynamics::hyper_parameters() {
  if (cfg_.kind != ModelKind::HyperPNODE) return {};
  return hyper.parameters();
}

// --- integration ------------------------------------------------------------

Var rk4_step(const VelocityFn& f, Var u, double t, double h) {
  if (!(h > 0.0)) throw ContractError("rk4_step: step size must be positive");
  const Var k1 = f(u, t);
  const Var k2 = f(u + (0.5 * h) * k1, t + 0.5 * h);
  const Var k3 = f(u + (0.5 * h) * k2, t + 0.5 * h);
  const Var k4 = f(u + h * k3, t + h);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

LatentTrajectory integrate(const VelocityFn& f, Var u0, const std::vector<double>& times,
                           std::size_t substeps) {
  if (times.empty() || times.front() != 0.0) throw ContractError("integrate: times must start at 0");
  if (substeps == 0) throw ContractError("integrate: substeps must be positive");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ContractError("integrate: times must be strictly increasing");
  }
  LatentTrajectory traj;
  traj.states.push_back(u0);
  Var u = u0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double h = (times[i] - times[i - 1]) / double(substeps);
    for (std::size_t s = 0; s < substeps; ++s) {
      u = rk4_step(f, u, times[i - 1] + double(s) * h, h);
      ++traj.rk4_steps;
    }
    traj.states.push_back(u);
  }
  return traj;
}

}  // namespace inrrom
