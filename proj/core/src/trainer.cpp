// SPDX-License-Identifier: Apache-2.0
#include "inrrom/trainer.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <unordered_set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "inrrom/errors.hpp"

namespace inrrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Every step allocates and frees the same multi-megabyte tape buffers.
// Serving them from the heap instead of fresh mappings avoids a page-fault
// storm that otherwise costs about a third of the step time.
void keep_tape_buffers_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 512 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 256 << 20);
  });
#endif
}

bool grads_finite(const std::vector<Parameter*>& params) {
  for (const auto* p : params) {
    if (!p->grad.all_finite()) return false;
  }
  return true;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_decoder >= 0.0) || !(lr_other >= 0.0) || !std::isfinite(lr_decoder) || !std::isfinite(lr_other)) {
    throw ConfigError("learning rates must be finite and non-negative");
  }
  if (!(residual_fraction > 0.0 && residual_fraction <= 1.0)) {
    throw ConfigError("residual_fraction must be in (0, 1]");
  }
  if (!(lr_final_factor > 0.0 && lr_final_factor <= 1.0)) {
    throw ConfigError("lr_final_factor must be in (0, 1]");
  }
  weights.validate();
}

void FineTuneOptions::validate() const {
  if (!(lr_decoder >= 0.0) || !(lr_hyper >= 0.0) || !std::isfinite(lr_decoder) || !std::isfinite(lr_hyper)) {
    throw ConfigError("fine-tune learning rates must be finite and non-negative");
  }
  if (!(residual_fraction > 0.0 && residual_fraction <= 1.0)) {
    throw ConfigError("fine-tune residual_fraction must be in (0, 1]");
  }
  weights.validate();
}

AdamState AdamState::zeros_like(const std::vector<Parameter*>& params) {
  AdamState s;
  for (const auto* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

void adam_step(const std::vector<Parameter*>& params, const std::vector<double>& lrs, AdamState& state) {
  if (lrs.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: parameter, rate and moment counts differ");
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, double(state.step));
  const double c2 = 1.0 - std::pow(b2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (state.m[i].shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
      throw ContractError("adam_step: shape mismatch for " + p.name);
    }
    double* x = p.value.data();
    const double* g = p.grad.data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    const double lr = lrs[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      x[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

Checkpoint initialize(const ModelConfig& model_config, const TrainConfig& train_config,
                      const std::vector<double>& train_params) {
  model_config.validate();
  train_config.validate();
  if (train_params.empty()) throw ContractError("initialize: no training parameters");
  Checkpoint c;
  c.model_config = model_config;
  c.train_config = train_config;
  c.train_params = train_params;
  c.model = RomModel(model_config, train_config.seed, MuEncoding::fit(train_params), train_params);
  c.adam = AdamState::zeros_like(c.model.parameters());
  return c;
}

std::string epoch_log_header() { return "epoch,data,residual,ic,bc,orth,total,wall_seconds"; }

std::string epoch_log_row(const EpochLog& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f", r.epoch, r.data, r.residual, r.ic,
                r.bc, r.orth, r.total, r.wall_seconds);
  return buf;
}

std::vector<double> learning_rates(Checkpoint& ckpt) {
  std::unordered_set<const Parameter*> decoder;
  for (auto* p : ckpt.model.decoder_parameters()) decoder.insert(p);
  std::vector<double> out;
  for (auto* p : ckpt.model.parameters()) {
    out.push_back(decoder.count(p) ? ckpt.train_config.lr_decoder : ckpt.train_config.lr_other);
  }
  return out;
}

LossTerms trajectory_loss_terms(RomModel& model, Tape& tape, double mu, const std::vector<double>& truth,
                                const TrajectoryStencil& stencil, const std::vector<double>& times,
                                const TrainConfig& cfg) {
  const Var coords = tape.constant(normalized_coords(stencil.grid()));
  const auto fwd = model.forward(tape, mu, times, coords);
  LossTerms t;
  t.data = data_loss(fwd.decoded, tape.constant(Tensor::column(truth)));
  if (cfg.physics_informed) t.residual = mean(square(pde_residual(fwd.decoded, stencil, times, mu)));
  t.ic = ic_loss(fwd.decoded, stencil, initial_state_tensor(stencil.grid()));
  t.bc = bc_loss(fwd.decoded, stencil);
  if (model.config().kind == ModelKind::HyperPNODE) {
    t.orthogonality = model.dynamics.orthogonality_penalty(tape, cfg.weights.rho_u, cfg.weights.rho_v);
  }
  return t;
}

std::vector<EpochLog> train(Checkpoint& ckpt, const Dataset& dataset, std::size_t epochs,
                            const EpochCallback& on_epoch) {
  dataset.validate();
  if (dataset.params.empty()) throw ContractError("train: empty dataset");
  const TrainConfig& cfg = ckpt.train_config;
  cfg.validate();
  keep_tape_buffers_on_heap();

  std::vector<std::vector<double>> truths;
  for (double mu : ckpt.train_params) {
    const auto span = dataset.trajectory(dataset.index_of(mu));
    truths.emplace_back(span.begin(), span.end());
  }
  const TrajectoryStencil stencil(dataset.grid, dataset.snapshot_count(), cfg.residual_fraction, cfg.seed);
  const std::vector<Parameter*> params = ckpt.model.parameters();
  const std::vector<double> base_lrs = learning_rates(ckpt);
  std::vector<double> lrs = base_lrs;

  std::vector<EpochLog> log;
  const auto start = Clock::now();
  for (std::size_t e = 0; e < epochs; ++e) {
    EpochLog row;
    row.epoch = ckpt.epoch + 1;
    if (cfg.lr_final_factor != 1.0 && cfg.epochs > 0) {
      const double progress = double(std::min(ckpt.epoch, cfg.epochs)) / double(cfg.epochs);
      const double scale = std::pow(cfg.lr_final_factor, progress);
      for (std::size_t k = 0; k < lrs.size(); ++k) lrs[k] = base_lrs[k] * scale;
    }
    for (std::size_t i = 0; i < ckpt.train_params.size(); ++i) {
      const double mu = ckpt.train_params[i];
      for (auto* p : params) p->zero_grad();
      Tape tape;
      const LossTerms terms = trajectory_loss_terms(ckpt.model, tape, mu, truths[i], stencil, dataset.times, cfg);
      const Var total = total_loss(terms, cfg.weights, cfg.physics_informed);
      const double value = total.value().item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss at Re=" + std::to_string(mu), int(row.epoch));
      }
      tape.backward(total);
      if (!grads_finite(params)) {
        throw DivergenceError("non-finite gradient at Re=" + std::to_string(mu), int(row.epoch));
      }
      adam_step(params, lrs, ckpt.adam);

      row.data += terms.data.value().item();
      if (terms.residual) row.residual += terms.residual->value().item();
      row.ic += terms.ic.value().item();
      row.bc += terms.bc.value().item();
      if (terms.orthogonality) row.orth += terms.orthogonality->value().item();
      row.total += value;
    }
    const double n = double(ckpt.train_params.size());
    row.data /= n;
    row.residual /= n;
    row.ic /= n;
    row.bc /= n;
    row.orth /= n;
    row.total /= n;
    row.wall_seconds = seconds_since(start);
    ckpt.epoch = row.epoch;
    log.push_back(row);
    if (on_epoch) on_epoch(row, ckpt);
  }
  return log;
}

TrainResult train(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                  std::vector<double> train_params, const EpochCallback& on_epoch) {
  if (train_params.empty()) train_params = dataset.params;
  TrainResult r{initialize(model_config, train_config, train_params), {}};
  r.log = train(r.checkpoint, dataset, train_config.epochs, on_epoch);
  return r;
}

FineTuneResult finetune(const Checkpoint& ckpt, double mu, const GridSpec& grid, const std::vector<double>& times,
                        const FineTuneOptions& options) {
  options.validate();
  if (!(mu > 0.0)) throw DomainError("Reynolds number must be positive");
  keep_tape_buffers_on_heap();
  FineTuneResult r{ckpt, {}, {}};
  Checkpoint& c = r.checkpoint;
  if (!ckpt.train_config.physics_informed) {
    r.warnings.push_back("fine-tuning a checkpoint trained without physics-informed loss");
  }

  std::vector<Parameter*> tuned;
  std::vector<double> lrs;
  for (auto* p : c.model.decoder_parameters()) {
    tuned.push_back(p);
    lrs.push_back(options.lr_decoder);
  }
  for (auto* p : c.model.hyper_parameters()) {
    tuned.push_back(p);
    lrs.push_back(options.lr_hyper);
  }
  AdamState adam = AdamState::zeros_like(tuned);
  const TrajectoryStencil stencil(grid, times.size(), options.residual_fraction, options.seed);
  const std::vector<Parameter*> all = c.model.parameters();

  for (std::size_t step = 0; step < options.steps; ++step) {
    for (auto* p : all) p->zero_grad();
    Tape tape;
    const auto fwd = c.model.forward(tape, mu, times, tape.constant(normalized_coords(grid)));
    const FineTuneTerms t = finetune_loss(fwd.decoded, stencil, times, mu, options.weights);
    const double value = t.total.value().item();
    if (!std::isfinite(value)) throw DivergenceError("non-finite fine-tune loss", int(step + 1));
    tape.backward(t.total);
    if (!grads_finite(tuned)) throw DivergenceError("non-finite fine-tune gradient", int(step + 1));
    adam_step(tuned, lrs, adam);
    r.log.push_back({step + 1, t.residual.value().item(), t.ic.value().item(), t.bc.value().item(), value});
  }
  c.finetuned_mu = mu;
  c.finetune_steps = ckpt.finetune_steps + options.steps;
  return r;
}

double relative_error(const std::vector<double>& truth, const std::vector<double>& pred) {
  if (truth.size() != pred.size()) throw ContractError("relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  if (!(den > 0.0)) throw DomainError("relative_error: reference trajectory is identically zero");
  return std::sqrt(num / den);
}

Metrics evaluate(Checkpoint& ckpt, const Dataset& dataset, const std::vector<double>& params) {
  dataset.validate();
  if (params.empty()) throw ContractError("evaluate: empty parameter set");
  Metrics out;
  for (double mu : params) {
    const std::size_t idx = dataset.index_of(mu);
    const auto span = dataset.trajectory(idx);
    const std::vector<double> truth(span.begin(), span.end());

    const auto start = Clock::now();
    const std::vector<double> pred = ckpt.model.predict(mu, dataset.times, dataset.grid);
    const double rom = std::max(seconds_since(start), 1e-9);

    ParamMetrics pm;
    pm.mu = mu;
    pm.relative_error = relative_error(truth, pred);
    pm.fom_seconds = dataset.fom_wall_seconds[idx];
    pm.rom_seconds = rom;
    pm.speedup = pm.fom_seconds / rom;
    out.per_param.push_back(pm);
  }
  out.min_speedup = out.per_param.front().speedup;
  for (const auto& pm : out.per_param) {
    out.avg_error += pm.relative_error;
    out.max_error = std::max(out.max_error, pm.relative_error);
    out.min_speedup = std::min(out.min_speedup, pm.speedup);
    out.max_speedup = std::max(out.max_speedup, pm.speedup);
  }
  out.avg_error /= double(out.per_param.size());
  return out;
}

}  // namespace inrrom
