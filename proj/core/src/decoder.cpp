// SPDX-License-Identifier: Apache-2.0
#include "inrrom/decoder.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "inrrom/errors.hpp"

namespace inrrom {

void DecoderConfig::validate() const {
  if (latent_dim == 0 || components == 0 || depth == 0 || width == 0) {
    throw ConfigError("decoder latent_dim, components, depth and width must be positive");
  }
  if (!(omega_max > 0.0)) throw ConfigError("decoder omega_max must be positive");
}

FourierNet::FourierNet(const DecoderConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  const std::size_t w = cfg.width, k = cfg.latent_dim;
  const double band = cfg.omega_max / double(cfg.depth);
  std::uniform_real_distribution<double> freq(-band, band);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);

  for (std::size_t c = 0; c < cfg.components; ++c) {
    const std::string head_name = "decoder.head" + std::to_string(c);
    FourierHead head;
    for (std::size_t i = 0; i < cfg.depth; ++i) {
      const std::string name = head_name + ".stage" + std::to_string(i);
      FourierStage st;
      Tensor omega({w, 2});
      for (auto& v : omega.values()) v = freq(rng);
      Tensor ph({1, w});
      for (auto& v : ph.values()) v = phase(rng);
      st.omega = Parameter(name + ".omega", std::move(omega));
      st.phase = Parameter(name + ".phase", std::move(ph));
      st.mod_weight = Parameter(name + ".mod_weight", uniform_fan_in(w, k, k, rng));
      st.mod_bias = Parameter(name + ".mod_bias", Tensor({1, w}, 1.0));
      head.stages.push_back(std::move(st));
    }
    for (std::size_t i = 0; i + 1 < cfg.depth; ++i) {
      const std::string name = head_name + ".linear" + std::to_string(i);
      DenseLayer l;
      l.weight = Parameter(name + ".weight", uniform_fan_in(w, w, w, rng));
      l.bias = Parameter(name + ".bias", uniform_fan_in(1, w, w, rng));
      head.linears.push_back(std::move(l));
    }
    head.out_weight = Parameter(head_name + ".out.weight", uniform_fan_in(1, w, w, rng));
    head.out_bias = Parameter(head_name + ".out.bias", Tensor({1, 1}));
    heads.push_back(std::move(head));
  }
}

FourierNet::Bound FourierNet::bind(Tape& tape) {
  Bound b;
  b.tape = &tape;
  for (auto& h : heads) {
    BoundHead bh;
    for (auto& st : h.stages) {
      bh.omega_t.push_back(transpose(tape.parameter(st.omega)));
      bh.phase.push_back(tape.parameter(st.phase));
      bh.mod_weight_t.push_back(transpose(tape.parameter(st.mod_weight)));
      bh.mod_bias.push_back(tape.parameter(st.mod_bias));
    }
    for (auto& l : h.linears) {
      bh.linear_t.push_back(transpose(tape.parameter(l.weight)));
      bh.linear_b.push_back(tape.parameter(l.bias));
    }
    bh.out_weight_t = transpose(tape.parameter(h.out_weight));
    bh.out_bias = tape.parameter(h.out_bias);
    b.heads.push_back(std::move(bh));
  }
  return b;
}

std::vector<Var> FourierNet::filters(const Bound& b, std::size_t head, const Var& coords) const {
  const BoundHead& h = b.heads.at(head);
  std::vector<Var> out;
  for (std::size_t i = 0; i < h.omega_t.size(); ++i) {
    out.push_back(sin(affine(coords, h.omega_t[i], h.phase[i])));
  }
  return out;
}

Var FourierNet::decode(const Bound& b, const std::vector<Var>& latents, const Var& coords) const {
  const std::size_t k = cfg_.latent_dim, nc = cfg_.components;
  const std::size_t snaps = latents.size();
  if (snaps == 0) throw ContractError("decode: no latent states");
  if (coords.value().rank() != 2 || coords.value().cols() != 2) {
    throw ContractError("decode: coordinates must have shape [P,2], got " + shape_string(coords.shape()));
  }
  if (!coords.value().all_finite()) throw ContractError("decode: non-finite coordinates");
  for (const auto& l : latents) {
    if (l.size() != nc * k) {
      throw ContractError("decode: latent has " + std::to_string(l.size()) + " entries, decoder expects " +
                          std::to_string(nc * k));
    }
  }
  const std::size_t points = coords.value().rows();
  const std::size_t rows = snaps * points;

  // [S*nc*k, 1] -> per head [S, k].
  const Var stacked = concat_rows(latents);
  std::vector<Var> head_out;
  for (std::size_t c = 0; c < nc; ++c) {
    auto idx = std::make_shared<std::vector<std::size_t>>();
    idx->reserve(snaps * k);
    for (std::size_t s = 0; s < snaps; ++s) {
      for (std::size_t j = 0; j < k; ++j) idx->push_back((s * nc + c) * k + j);
    }
    const Var code = reshape(gather(stacked, std::move(idx)), {snaps, k});

    const BoundHead& h = b.heads[c];
    const std::vector<Var> g = filters(b, c, coords);
    auto amplitude = [&](std::size_t i) { return affine(code, h.mod_weight_t[i], h.mod_bias[i]); };

    Var z = modulate(amplitude(0), g[0]);
    for (std::size_t i = 0; i + 1 < h.omega_t.size(); ++i) {
      z = modulate(affine(z, h.linear_t[i], h.linear_b[i]), amplitude(i + 1), g[i + 1]);
    }
    head_out.push_back(affine(z, h.out_weight_t, h.out_bias));
  }
  if (nc == 1) return head_out.front();

  // [comp][snap][point] -> [snap][comp][point]
  auto perm = std::make_shared<std::vector<std::size_t>>();
  perm->reserve(nc * rows);
  for (std::size_t s = 0; s < snaps; ++s) {
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t p = 0; p < points; ++p) perm->push_back(c * rows + s * points + p);
    }
  }
  return gather(concat_rows(head_out), std::move(perm));
}

std::vector<Parameter*> FourierNet::parameters() {
  std::vector<Parameter*> out;
  for (auto& h : heads) {
    for (auto& st : h.stages) {
      out.push_back(&st.omega);
      out.push_back(&st.phase);
      out.push_back(&st.mod_weight);
      out.push_back(&st.mod_bias);
    }
    for (auto& l : h.linears) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    out.push_back(&h.out_weight);
    out.push_back(&h.out_bias);
  }
  return out;
}

Tensor normalized_coords(const GridSpec& grid) {
  Tensor out({grid.nodes(), 2});
  for (std::size_t row = 0; row < grid.ny; ++row) {
    for (std::size_t col = 0; col < grid.nx; ++col) {
      const std::size_t k = row * grid.nx + col;
      out(k, 0) = 2.0 * (grid.x(col) - grid.xmin) / (grid.xmax - grid.xmin) - 1.0;
      out(k, 1) = 2.0 * (grid.y(row) - grid.ymin) / (grid.ymax - grid.ymin) - 1.0;
    }
  }
  return out;
}

Tensor decode(FourierNet& net, const Tensor& latent, const Tensor& coords) {
  Tape tape(false);
  const auto bound = net.bind(tape);
  const Var out = net.decode(bound, {tape.constant(latent)}, tape.constant(coords));
  return out.value().reshaped({net.config().components, coords.rows()});
}

std::vector<double> decode_trajectory(FourierNet& net, const std::vector<Tensor>& latents,
                                      const GridSpec& grid) {
  Tape tape(false);
  const auto bound = net.bind(tape);
  std::vector<Var> vars;
  for (const auto& l : latents) vars.push_back(tape.constant(l));
  const Var out = net.decode(bound, vars, tape.constant(normalized_coords(grid)));
  const auto v = out.value().values();
  return {v.begin(), v.end()};
}

}  // namespace inrrom
