// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "inrrom/autodiff.hpp"
#include "inrrom/fom.hpp"
#include "inrrom/latent.hpp"

namespace inrrom {

struct DecoderConfig {
  /// Latent size per head (one head per solution component).
  std::size_t latent_dim = 50;
  std::size_t components = 2;
  std::size_t depth = 3;
  std::size_t width = 128;
  double omega_max = 32.0;

  void validate() const;
};

/// One multiplicative stage: filter sin(Omega x + phase), amplitude M u + c.
struct FourierStage {
  Parameter omega;       // [width, 2]
  Parameter phase;       // [1, width]
  Parameter mod_weight;  // [width, latent]
  Parameter mod_bias;    // [1, width]
};

struct FourierHead {
  std::vector<FourierStage> stages;  // depth
  std::vector<DenseLayer> linears;   // depth - 1, weight [width, width], bias [1, width]
  Parameter out_weight;              // [1, width]
  Parameter out_bias;                // [1, 1]
};

/// Multiplicative filter network decoding a latent code into field values at
/// arbitrary 2D coordinates:
///   z_1     = m_1(u) * g_1(x)
///   z_{i+1} = m_{i+1}(u) * (W_i z_i + b_i) * g_{i+1}(x)
///   out     = W_out z_d + b_out
/// with g_i(x) = sin(Omega_i x + phase_i) and m_i(u) = M_i u + c_i.
class FourierNet {
 public:
  FourierNet() = default;
  FourierNet(const DecoderConfig& cfg, std::mt19937_64& rng);

  struct BoundHead {
    std::vector<Var> omega_t, phase, mod_weight_t, mod_bias;
    std::vector<Var> linear_t, linear_b;
    Var out_weight_t, out_bias;
  };
  struct Bound {
    Tape* tape = nullptr;
    std::vector<BoundHead> heads;
  };
  Bound bind(Tape& tape);

  /// Decodes S latent states at P coordinates.
  ///   latents: S vars of shape [components * latent_dim, 1]
  ///   coords:  [P, 2] normalised coordinates
  /// Returns a flat column laid out [snapshot][component][point].
  Var decode(const Bound& b, const std::vector<Var>& latents, const Var& coords) const;

  /// Filter outputs sin(Omega_i x + phase_i) of one head, [P, width] each.
  std::vector<Var> filters(const Bound& b, std::size_t head, const Var& coords) const;

  const DecoderConfig& config() const { return cfg_; }
  std::vector<Parameter*> parameters();

  std::vector<FourierHead> heads;

 private:
  DecoderConfig cfg_;
};

/// Grid nodes mapped to [-1, 1]^2, row-major over (row, col); column 0 is x.
Tensor normalized_coords(const GridSpec& grid);

/// Decoded values of a single latent at arbitrary coordinates, one row per
/// component: [components, P].
Tensor decode(FourierNet& net, const Tensor& latent, const Tensor& coords);

/// Untracked decoding of a latent trajectory on a grid, laid out
/// [snapshot][component][row][col].
std::vector<double> decode_trajectory(FourierNet& net, const std::vector<Tensor>& latents,
                                      const GridSpec& grid);

}  // namespace inrrom
