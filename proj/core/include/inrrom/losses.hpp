// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "inrrom/autodiff.hpp"
#include "inrrom/fom.hpp"

namespace inrrom {

struct LossWeights {
  double data = 1.0;
  double residual = 1e-4;
  double ic = 1.0;
  double bc = 1.0;
  double rho_u = 1e-3;
  double rho_v = 1e-3;

  void validate() const;
};

struct FineTuneWeights {
  double residual = 1e-4;
  double ic = 1.0;
  double bc = 1.0;

  void validate() const;
};

/// Index tables over a flat two-component trajectory laid out
/// [snapshot][component][row][col]. Built once per (grid, snapshot count).
class TrajectoryStencil {
 public:
  /// `residual_fraction` < 1 keeps a seeded random subset of the residual
  /// collocation points (interior nodes at interior snapshots).
  TrajectoryStencil(const GridSpec& grid, std::size_t snapshots, double residual_fraction = 1.0,
                    std::uint64_t seed = 0);

  const GridSpec& grid() const { return grid_; }
  std::size_t snapshots() const { return snapshots_; }
  std::size_t size() const { return snapshots_ * 2 * grid_.nodes(); }
  std::size_t index(std::size_t snap, std::size_t comp, std::size_t row, std::size_t col) const {
    return ((snap * 2 + comp) * grid_.ny + row) * grid_.nx + col;
  }

  const IndexList& initial() const { return initial_; }
  const IndexList& boundary() const { return boundary_; }

  struct Residual {
    IndexList centre, east, west, north, south, later, earlier, adv_x, adv_y;
  };
  /// Empty when there are fewer than three snapshots.
  const std::optional<Residual>& residual() const { return residual_; }

 private:
  GridSpec grid_;
  std::size_t snapshots_;
  IndexList initial_;
  IndexList boundary_;
  std::optional<Residual> residual_;
};

/// Mean squared difference over every entry.
Var data_loss(const Var& decoded, const Var& truth);

/// Discrete residual D_t u + (u . grad) u - (1/Re) Lap u with central
/// differences in time and space, at interior nodes of interior snapshots.
/// Snapshot instants must be uniformly spaced. Layout [snap][comp][node]
/// over the collocation set.
Var pde_residual(const Var& decoded, const TrajectoryStencil& stencil, const std::vector<double>& times,
                 double reynolds);

/// MSE of the decoded snapshot 0 against the true initial state.
Var ic_loss(const Var& decoded, const TrajectoryStencil& stencil, const Tensor& initial_state);
/// MSE of decoded boundary values against zero over all snapshots.
Var bc_loss(const Var& decoded, const TrajectoryStencil& stencil);

struct LossTerms {
  Var data;
  std::optional<Var> residual;
  Var ic;
  Var bc;
  std::optional<Var> orthogonality;
};

/// alpha_1 data + alpha_2 residual (physics-informed runs only) +
/// alpha_3 ic + alpha_4 bc + orthogonality penalty (HyperPNODE only; its
/// rho weights are applied when the penalty is built).
Var total_loss(const LossTerms& terms, const LossWeights& weights, bool physics_informed);

struct FineTuneTerms {
  Var residual;
  Var ic;
  Var bc;
  Var total;
};

/// beta_1 residual + beta_2 ic + beta_3 bc. Touches no ground truth beyond
/// the analytic initial condition and the zero boundary.
FineTuneTerms finetune_loss(const Var& decoded, const TrajectoryStencil& stencil,
                            const std::vector<double>& times, double reynolds,
                            const FineTuneWeights& weights);

/// Root-mean-square of the discrete residual of a stored trajectory.
double residual_rms(const std::vector<double>& trajectory, const GridSpec& grid,
                    const std::vector<double>& times, double reynolds);

/// Flat [component][row][col] copy of the analytic initial condition.
Tensor initial_state_tensor(const GridSpec& grid);

}  // namespace inrrom
