// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "inrrom/autodiff.hpp"
#include "inrrom/decoder.hpp"
#include "inrrom/latent.hpp"

namespace inrrom {

struct ModelConfig {
  ModelKind kind = ModelKind::PNODE;
  /// Latent size per solution component.
  std::size_t latent_per_component = 50;
  std::size_t components = 2;
  std::size_t ode_hidden_layers = 3;
  std::size_t ode_width = 256;
  std::size_t rank = 50;
  std::size_t hyper_hidden_layers = 1;
  std::size_t hyper_width = 50;
  std::size_t substeps = 1;
  std::size_t decoder_depth = 3;
  std::size_t decoder_width = 128;
  double omega_max = 32.0;
  /// One trainable initial latent per training Reynolds number instead of a
  /// single shared one. Only meaningful for parameter-dependent initial data.
  bool per_mu_latent = false;

  DynamicsConfig dynamics() const;
  DecoderConfig decoder() const;
  void validate() const;
};

/// Latent initial state, latent dynamics and decoder of one reduced model.
class RomModel {
 public:
  RomModel() = default;
  RomModel(const ModelConfig& cfg, std::uint64_t seed, MuEncoding mu_encoding,
           const std::vector<double>& train_params = {});

  struct Forward {
    LatentTrajectory latents;
    Var decoded;  // [snapshot][component][row][col]
  };
  /// Integrates the latent dynamics from the initial latent over `times`
  /// and decodes every state at `coords`, all on one tape.
  Forward forward(Tape& tape, double mu, const std::vector<double>& times, const Var& coords);

  /// Untracked prediction on a grid, laid out [snapshot][component][row][col].
  std::vector<double> predict(double mu, const std::vector<double>& times, const GridSpec& grid);

  Parameter& initial_latent(double mu);

  const ModelConfig& config() const { return cfg_; }
  const MuEncoding& mu_encoding() const { return mu_encoding_; }
  const std::vector<double>& latent_keys() const { return latent_keys_; }

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> decoder_parameters() { return decoder.parameters(); }
  std::vector<Parameter*> hyper_parameters() { return dynamics.hyper_parameters(); }
  Parameter* find(const std::string& name);

  /// Forecaster size: ODE net plus hypernetwork.
  std::size_t forecaster_parameter_count() const { return count_parameters(cfg_.dynamics()); }

  std::vector<Parameter> latent_ic;
  LatentDynamics dynamics;
  FourierNet decoder;

 private:
  ModelConfig cfg_;
  MuEncoding mu_encoding_;
  std::vector<double> latent_keys_;
};

}  // namespace inrrom
