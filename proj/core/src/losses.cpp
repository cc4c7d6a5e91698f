// SPDX-License-Identifier: Apache-2.0
#include "inrrom/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "inrrom/errors.hpp"

namespace inrrom {

namespace {

using Indices = std::vector<std::size_t>;

IndexList share(Indices v) { return std::make_shared<const Indices>(std::move(v)); }

Var mse_zero(const Var& v) { return mean(square(v)); }

double uniform_spacing(const std::vector<double>& times) {
  if (times.size() < 3) throw ContractError("pde_residual needs at least 3 snapshots");
  const double dt = times[1] - times[0];
  for (std::size_t i = 2; i < times.size(); ++i) {
    if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw ContractError("pde_residual needs uniformly spaced snapshots");
    }
  }
  return dt;
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {data, residual, ic, bc, rho_u, rho_v}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be finite and non-negative");
  }
  if (!(data > 0.0)) throw ConfigError("the data weight must be positive for supervised training");
}

void FineTuneWeights::validate() const {
  for (double v : {residual, ic, bc}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("fine-tune weights must be finite and non-negative");
  }
  if (!(residual > 0.0)) throw ConfigError("the fine-tune residual weight must be positive");
}

TrajectoryStencil::TrajectoryStencil(const GridSpec& grid, std::size_t snapshots, double residual_fraction,
                                     std::uint64_t seed)
    : grid_(grid), snapshots_(snapshots) {
  grid.validate();
  if (snapshots == 0) throw ContractError("TrajectoryStencil: no snapshots");
  if (!(residual_fraction > 0.0 && residual_fraction <= 1.0)) {
    throw ConfigError("residual_fraction must be in (0, 1]");
  }
  const std::size_t nx = grid.nx, ny = grid.ny;

  Indices initial;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < ny; ++r) {
      for (std::size_t col = 0; col < nx; ++col) initial.push_back(index(0, c, r, col));
    }
  }
  initial_ = share(std::move(initial));

  Indices boundary;
  for (std::size_t s = 0; s < snapshots; ++s) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t r = 0; r < ny; ++r) {
        for (std::size_t col = 0; col < nx; ++col) {
          if (grid.on_boundary(r, col)) boundary.push_back(index(s, c, r, col));
        }
      }
    }
  }
  boundary_ = share(std::move(boundary));

  if (snapshots < 3) return;

  // Collocation points as (snapshot, row, col); both components share them.
  struct Point {
    std::size_t s, r, c;
  };
  std::vector<Point> points;
  for (std::size_t s = 1; s + 1 < snapshots; ++s) {
    for (std::size_t r = 1; r + 1 < ny; ++r) {
      for (std::size_t col = 1; col + 1 < nx; ++col) points.push_back({s, r, col});
    }
  }
  if (residual_fraction < 1.0) {
    std::mt19937_64 rng(seed);
    std::shuffle(points.begin(), points.end(), rng);
    const auto keep = std::max<std::size_t>(1, std::size_t(std::llround(residual_fraction * double(points.size()))));
    points.resize(keep);
    std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
      return std::tie(a.s, a.r, a.c) < std::tie(b.s, b.r, b.c);
    });
  }

  Indices centre, east, west, north, south, later, earlier, adv_x, adv_y;
  std::size_t i = 0;
  while (i < points.size()) {
    // Group by snapshot so the layout is [snap][comp][point].
    std::size_t j = i;
    while (j < points.size() && points[j].s == points[i].s) ++j;
    for (std::size_t comp = 0; comp < 2; ++comp) {
      for (std::size_t q = i; q < j; ++q) {
        const auto [s, r, col] = points[q];
        centre.push_back(index(s, comp, r, col));
        east.push_back(index(s, comp, r, col + 1));
        west.push_back(index(s, comp, r, col - 1));
        north.push_back(index(s, comp, r + 1, col));
        south.push_back(index(s, comp, r - 1, col));
        later.push_back(index(s + 1, comp, r, col));
        earlier.push_back(index(s - 1, comp, r, col));
        adv_x.push_back(index(s, 0, r, col));
        adv_y.push_back(index(s, 1, r, col));
      }
    }
    i = j;
  }
  residual_ = Residual{share(std::move(centre)), share(std::move(east)),  share(std::move(west)),
                       share(std::move(north)),  share(std::move(south)), share(std::move(later)),
                       share(std::move(earlier)), share(std::move(adv_x)), share(std::move(adv_y))};
}

Var data_loss(const Var& decoded, const Var& truth) {
  if (decoded.shape() != truth.shape()) {
    throw ContractError("data_loss: shape mismatch " + shape_string(decoded.shape()) + " vs " +
                        shape_string(truth.shape()));
  }
  return mse_zero(decoded - truth);
}

Var pde_residual(const Var& decoded, const TrajectoryStencil& stencil, const std::vector<double>& times,
                 double reynolds) {
  if (!(reynolds > 0.0)) throw DomainError("Reynolds number must be positive");
  if (times.size() != stencil.snapshots()) throw ContractError("pde_residual: times/stencil snapshot mismatch");
  const double dt = uniform_spacing(times);
  if (decoded.size() != stencil.size()) {
    throw ContractError("pde_residual: trajectory has " + std::to_string(decoded.size()) + " entries, expected " +
                        std::to_string(stencil.size()));
  }
  const auto& st = *stencil.residual();
  const double hx = stencil.grid().hx(), hy = stencil.grid().hy();
  const double nu = 1.0 / reynolds;

  const Var c = gather(decoded, st.centre);
  const Var e = gather(decoded, st.east);
  const Var w = gather(decoded, st.west);
  const Var n = gather(decoded, st.north);
  const Var s = gather(decoded, st.south);
  const Var dudt = (0.5 / dt) * (gather(decoded, st.later) - gather(decoded, st.earlier));
  const Var dudx = (0.5 / hx) * (e - w);
  const Var dudy = (0.5 / hy) * (n - s);
  const Var lap = (1.0 / (hx * hx)) * (e - 2.0 * c + w) + (1.0 / (hy * hy)) * (n - 2.0 * c + s);
  const Var advection = hadamard(gather(decoded, st.adv_x), dudx) + hadamard(gather(decoded, st.adv_y), dudy);
  return dudt + advection - nu * lap;
}

Var ic_loss(const Var& decoded, const TrajectoryStencil& stencil, const Tensor& initial_state) {
  const Var ic = gather(decoded, stencil.initial());
  if (ic.size() != initial_state.size()) {
    throw ContractError("ic_loss: initial state has " + std::to_string(initial_state.size()) +
                        " entries, expected " + std::to_string(ic.size()));
  }
  return mse_zero(ic - decoded.tape().constant(initial_state.reshaped(ic.shape())));
}

Var bc_loss(const Var& decoded, const TrajectoryStencil& stencil) {
  if (decoded.size() != stencil.size()) throw ContractError("bc_loss: trajectory/stencil size mismatch");
  return mse_zero(gather(decoded, stencil.boundary()));
}

Var total_loss(const LossTerms& terms, const LossWeights& weights, bool physics_informed) {
  Var total = weights.data * terms.data + weights.ic * terms.ic + weights.bc * terms.bc;
  if (physics_informed) {
    if (!terms.residual) throw ContractError("total_loss: physics-informed run without a residual term");
    total = total + weights.residual * *terms.residual;
  }
  if (terms.orthogonality) total = total + *terms.orthogonality;
  return total;
}

FineTuneTerms finetune_loss(const Var& decoded, const TrajectoryStencil& stencil,
                            const std::vector<double>& times, double reynolds,
                            const FineTuneWeights& weights) {
  FineTuneTerms t;
  t.residual = mse_zero(pde_residual(decoded, stencil, times, reynolds));
  t.ic = ic_loss(decoded, stencil, initial_state_tensor(stencil.grid()));
  t.bc = bc_loss(decoded, stencil);
  t.total = weights.residual * t.residual + weights.ic * t.ic + weights.bc * t.bc;
  return t;
}

double residual_rms(const std::vector<double>& trajectory, const GridSpec& grid,
                    const std::vector<double>& times, double reynolds) {
  Tape tape(false);
  const TrajectoryStencil stencil(grid, times.size());
  const Var traj = tape.constant(Tensor::column(trajectory));
  const Var r = pde_residual(traj, stencil, times, reynolds);
  return std::sqrt(mean(square(r)).value().item());
}

Tensor initial_state_tensor(const GridSpec& grid) {
  return Tensor::column(initial_condition(grid).values);
}

}  // namespace inrrom
