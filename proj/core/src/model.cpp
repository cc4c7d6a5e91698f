// SPDX-License-Identifier: Apache-2.0
#include "inrrom/model.hpp"

#include "inrrom/errors.hpp"

namespace inrrom {

DynamicsConfig ModelConfig::dynamics() const {
  DynamicsConfig d;
  d.kind = kind;
  d.latent_dim = latent_per_component * components;
  d.hidden_layers = ode_hidden_layers;
  d.width = ode_width;
  d.rank = rank;
  d.hyper_hidden_layers = hyper_hidden_layers;
  d.hyper_width = hyper_width;
  return d;
}

DecoderConfig ModelConfig::decoder() const {
  DecoderConfig d;
  d.latent_dim = latent_per_component;
  d.components = components;
  d.depth = decoder_depth;
  d.width = decoder_width;
  d.omega_max = omega_max;
  return d;
}

void ModelConfig::validate() const {
  if (components != 2) throw ConfigError("the Burgers model has exactly 2 solution components");
  if (substeps == 0) throw ConfigError("substeps must be positive");
  dynamics().validate();
  decoder().validate();
}

RomModel::RomModel(const ModelConfig& cfg, std::uint64_t seed, MuEncoding mu_encoding,
                   const std::vector<double>& train_params)
    : cfg_(cfg), mu_encoding_(mu_encoding) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> code(0.0, 0.01);
  const std::size_t latent = cfg.latent_per_component * cfg.components;
  auto make_code = [&](const std::string& name) {
    Tensor t({latent, 1});
    for (auto& v : t.values()) v = code(rng);
    return Parameter(name, std::move(t));
  };
  if (cfg.per_mu_latent) {
    if (train_params.empty()) throw ConfigError("per-mu latent codes need the training parameters");
    latent_keys_ = train_params;
    for (std::size_t i = 0; i < train_params.size(); ++i) latent_ic.push_back(make_code("latent_ic." + std::to_string(i)));
  } else {
    latent_ic.push_back(make_code("latent_ic"));
  }
  dynamics = LatentDynamics(cfg.dynamics(), rng);
  decoder = FourierNet(cfg.decoder(), rng);
}

Parameter& RomModel::initial_latent(double mu) {
  if (!cfg_.per_mu_latent) return latent_ic.front();
  for (std::size_t i = 0; i < latent_keys_.size(); ++i) {
    if (latent_keys_[i] == mu) return latent_ic[i];
  }
  throw ContractError("no latent code for Re=" + std::to_string(mu) +
                      "; per-mu latent codes exist only for training parameters");
}

RomModel::Forward RomModel::forward(Tape& tape, double mu, const std::vector<double>& times, const Var& coords) {
  auto bound = dynamics.bind(tape, mu_encoding_.encode(mu));
  const VelocityFn f = [&bound](Var u, double t) { return LatentDynamics::velocity(bound, u, t); };
  Forward out;
  out.latents = integrate(f, tape.parameter(initial_latent(mu)), times, cfg_.substeps);
  out.decoded = decoder.decode(decoder.bind(tape), out.latents.states, coords);
  return out;
}

std::vector<double> RomModel::predict(double mu, const std::vector<double>& times, const GridSpec& grid) {
  Tape tape(false);
  auto bound = dynamics.bind(tape, mu_encoding_.encode(mu));
  const VelocityFn f = [&bound](Var u, double t) { return LatentDynamics::velocity(bound, u, t); };
  const auto latents = integrate(f, tape.parameter(initial_latent(mu)), times, cfg_.substeps);

  // One short-lived tape per snapshot keeps memory at a single decoded state.
  const Tensor coords = normalized_coords(grid);
  std::vector<double> out;
  out.reserve(times.size() * cfg_.components * grid.nodes());
  for (const Var& state : latents.states) {
    Tape snap(false);
    const Var decoded = decoder.decode(decoder.bind(snap), {snap.constant(state.value())}, snap.constant(coords));
    const auto v = decoded.value().values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<Parameter*> RomModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : latent_ic) out.push_back(&p);
  for (auto* p : dynamics.parameters()) out.push_back(p);
  for (auto* p : decoder.parameters()) out.push_back(p);
  return out;
}

Parameter* RomModel::find(const std::string& name) {
  for (auto* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

}  // namespace inrrom
