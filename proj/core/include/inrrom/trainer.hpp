// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inrrom/fom.hpp"
#include "inrrom/losses.hpp"
#include "inrrom/model.hpp"

namespace inrrom {

struct TrainConfig {
  bool physics_informed = false;
  std::size_t epochs = 50000;
  double lr_decoder = 0.01;
  double lr_other = 0.001;
  /// Both learning rates decay geometrically to this fraction of their
  /// initial value over `epochs`. 1 keeps them constant.
  double lr_final_factor = 1.0;
  LossWeights weights;
  std::uint64_t seed = 0;
  /// Fraction of residual collocation points kept (seeded subsample).
  double residual_fraction = 1.0;
  /// Epoch cadence for checkpoint callbacks; 0 disables intermediate ones.
  std::size_t checkpoint_every = 0;

  void validate() const;
};

/// Adam moments for every model parameter, in RomModel::parameters() order.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState zeros_like(const std::vector<Parameter*>& params);
};

/// One bias-corrected Adam update. `lrs[i]` is the rate for `params[i]`;
/// moments advance for every parameter, including those with rate 0.
void adam_step(const std::vector<Parameter*>& params, const std::vector<double>& lrs, AdamState& state);

/// Everything needed to resume or reproduce a run.
struct Checkpoint {
  ModelConfig model_config;
  TrainConfig train_config;
  std::vector<double> train_params;
  RomModel model;
  AdamState adam;
  std::size_t epoch = 0;
  /// Reynolds number a fine-tuned checkpoint was adapted to; 0 otherwise.
  double finetuned_mu = 0.0;
  std::size_t finetune_steps = 0;
};

Checkpoint initialize(const ModelConfig& model_config, const TrainConfig& train_config,
                      const std::vector<double>& train_params);

struct EpochLog {
  std::size_t epoch = 0;
  double data = 0.0;
  double residual = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double orth = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
};

std::string epoch_log_header();
std::string epoch_log_row(const EpochLog& row);

/// Per-learning-rate parameter groups: decoder parameters use lr_decoder,
/// every other parameter lr_other.
std::vector<double> learning_rates(Checkpoint& ckpt);

/// Builds the loss terms of one trajectory. Exposed for gradient checks.
LossTerms trajectory_loss_terms(RomModel& model, Tape& tape, double mu, const std::vector<double>& truth,
                                const TrajectoryStencil& stencil, const std::vector<double>& times,
                                const TrainConfig& cfg);

using EpochCallback = std::function<void(const EpochLog&, const Checkpoint&)>;

/// Trains `ckpt` for `epochs` more epochs, one Adam step per training
/// trajectory in the order of `ckpt.train_params`. On a non-finite loss a
/// DivergenceError is thrown before the update, so `ckpt` keeps the last
/// good state. `on_epoch` runs after every epoch.
std::vector<EpochLog> train(Checkpoint& ckpt, const Dataset& dataset, std::size_t epochs,
                            const EpochCallback& on_epoch = {});

/// Initializes and trains for `train_config.epochs` epochs on the given
/// parameters of `dataset` (all of them when `train_params` is empty).
struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};
TrainResult train(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                  std::vector<double> train_params = {}, const EpochCallback& on_epoch = {});

struct FineTuneOptions {
  std::size_t steps = 300;
  FineTuneWeights weights;
  double lr_decoder = 1e-4;
  double lr_hyper = 1e-4;
  double residual_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FineTuneLog {
  std::size_t step = 0;
  double residual = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double total = 0.0;
};

struct FineTuneResult {
  Checkpoint checkpoint;
  std::vector<FineTuneLog> log;
  std::vector<std::string> warnings;
};

/// Physics-only adaptation at an unseen Reynolds number. Updates decoder
/// parameters and, for HyperPNODE, the hypernetwork; everything else is
/// left bit-identical. Needs only the grid and snapshot instants.
FineTuneResult finetune(const Checkpoint& ckpt, double mu, const GridSpec& grid, const std::vector<double>& times,
                        const FineTuneOptions& options);

struct ParamMetrics {
  double mu = 0.0;
  double relative_error = 0.0;
  double fom_seconds = 0.0;
  double rom_seconds = 0.0;
  double speedup = 0.0;
};

struct Metrics {
  std::vector<ParamMetrics> per_param;
  double avg_error = 0.0;
  double max_error = 0.0;
  double min_speedup = 0.0;
  double max_speedup = 0.0;
};

/// ||truth - pred||_F / ||truth||_F.
double relative_error(const std::vector<double>& truth, const std::vector<double>& pred);

/// Untracked, timed inference for every Reynolds number in `params`.
Metrics evaluate(Checkpoint& ckpt, const Dataset& dataset, const std::vector<double>& params);

}  // namespace inrrom
