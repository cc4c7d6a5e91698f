// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "inrrom/autodiff.hpp"

namespace inrrom {

enum class ModelKind { NODE, PNODE, HyperPNODE };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Standardised log10 of the Reynolds number. The constants are fitted on
/// the training parameters and frozen into the checkpoint.
struct MuEncoding {
  double center = 0.0;
  double scale = 1.0;

  double encode(double mu) const;
  static MuEncoding fit(const std::vector<double>& params);
};

struct DynamicsConfig {
  ModelKind kind = ModelKind::PNODE;
  /// Total latent dimension over all solution components.
  std::size_t latent_dim = 100;
  std::size_t hidden_layers = 3;
  std::size_t width = 256;
  std::size_t rank = 50;
  std::size_t hyper_hidden_layers = 1;
  std::size_t hyper_width = 50;

  std::size_t input_dim() const { return latent_dim + 1 + (kind == ModelKind::PNODE ? 1 : 0); }
  std::size_t internal_layers() const { return hidden_layers - 1; }
  void validate() const;
};

/// Trainable scalars of the forecaster (ODE net plus hypernetwork).
std::size_t count_parameters(const DynamicsConfig& cfg);

struct DenseLayer {
  Parameter weight;  // [out, in]
  Parameter bias;    // [out, 1]
};

/// tanh MLP with a linear output layer.
class DenseMlp {
 public:
  DenseMlp() = default;
  DenseMlp(const std::string& name, const std::vector<std::size_t>& sizes, std::mt19937_64& rng);

  struct Bound {
    std::vector<Var> weights;
    std::vector<Var> biases;
  };
  Bound bind(Tape& tape);
  static Var apply(const Bound& b, Var x);

  std::vector<DenseLayer> layers;
  std::vector<Parameter*> parameters();
};

/// Dense first and last layers; every internal layer applies
/// U diag(s) V^T h + b with s supplied per call.
class LowRankMlp {
 public:
  struct Internal {
    Parameter u;     // [n, r]
    Parameter v;     // [n, r]
    Parameter bias;  // [n, 1]
  };

  LowRankMlp() = default;
  LowRankMlp(const std::string& name, std::size_t in, std::size_t width, std::size_t internal_layers,
             std::size_t rank, std::size_t out, std::mt19937_64& rng);

  struct Bound {
    Var first_w, first_b;
    std::vector<Var> u, vt, bias;
    Var last_w, last_b;
  };
  Bound bind(Tape& tape);
  /// `diagonals[l]` is the [r,1] column s for internal layer l.
  static Var apply(const Bound& b, const std::vector<Var>& diagonals, Var x);

  /// Sum over internal layers of rho_u ||U^T U - I||_F + rho_v ||V^T V - I||_F.
  Var orthogonality_penalty(Tape& tape, double rho_u, double rho_v);

  std::size_t rank() const { return internal.empty() ? 0 : internal.front().u.value.cols(); }

  DenseLayer first;
  std::vector<Internal> internal;
  DenseLayer last;
  std::vector<Parameter*> parameters();
};

/// NODE / PNODE / HyperPNODE velocity field over the latent state.
class LatentDynamics {
 public:
  LatentDynamics() = default;
  LatentDynamics(const DynamicsConfig& cfg, std::mt19937_64& rng);

  /// Parameters bound to one tape, with the hypernetwork diagonals already
  /// evaluated for one encoded Reynolds number.
  struct Bound {
    ModelKind kind = ModelKind::NODE;
    Tape* tape = nullptr;
    double mu_tilde = 0.0;
    DenseMlp::Bound dense;
    LowRankMlp::Bound low_rank;
    std::vector<Var> diagonals;
  };
  Bound bind(Tape& tape, double mu_tilde);
  static Var velocity(const Bound& b, Var u, double t);

  Var orthogonality_penalty(Tape& tape, double rho_u, double rho_v);

  const DynamicsConfig& config() const { return cfg_; }
  std::vector<Parameter*> parameters();
  /// Hypernetwork parameters only; empty unless kind is HyperPNODE.
  std::vector<Parameter*> hyper_parameters();

  DenseMlp dense;
  LowRankMlp low_rank;
  DenseMlp hyper;

 private:
  DynamicsConfig cfg_;
};

using VelocityFn = std::function<Var(Var, double)>;

/// Classical fourth-order Runge-Kutta step, recorded on the tape.
Var rk4_step(const VelocityFn& f, Var u, double t, double h);

struct LatentTrajectory {
  std::vector<Var> states;
  std::size_t rk4_steps = 0;
};

/// States at every instant of `times` (times[0] must be 0), taking
/// `substeps` RK4 steps per interval.
LatentTrajectory integrate(const VelocityFn& f, Var u0, const std::vector<double>& times,
                           std::size_t substeps = 1);

/// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) initialisation.
Tensor uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng);
/// n x r matrix with orthonormal columns (thin QR of a Gaussian matrix).
Tensor random_orthonormal(std::size_t n, std::size_t r, std::mt19937_64& rng);

}  // namespace inrrom
