// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace inrrom {

/// Uniform node-centred grid on a rectangle. Node (row, col) sits at
/// (x(col), y(row)); rows run along y.
struct GridSpec {
  std::size_t nx = 64;
  std::size_t ny = 64;
  double xmin = -3.0;
  double xmax = 3.0;
  double ymin = -3.0;
  double ymax = 3.0;

  double hx() const { return (xmax - xmin) / double(nx - 1); }
  double hy() const { return (ymax - ymin) / double(ny - 1); }
  double x(std::size_t col) const { return xmin + double(col) * hx(); }
  double y(std::size_t row) const { return ymin + double(row) * hy(); }
  std::size_t nodes() const { return nx * ny; }
  bool on_boundary(std::size_t row, std::size_t col) const {
    return row == 0 || col == 0 || row + 1 == ny || col + 1 == nx;
  }
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct FomConfig {
  GridSpec grid;
  double dt = 1.0 / 1000.0;
  double t_final = 1.0;
  double reynolds = 100.0;
  std::size_t snapshot_stride = 20;
  double newton_tol = 1e-10;
  int newton_max_iters = 20;

  std::size_t steps() const;
  std::size_t snapshot_count() const { return steps() / snapshot_stride + 1; }
  void validate() const;
};

/// Velocity components w and z stored component-major: [comp][row][col].
struct FieldState {
  FieldState() = default;
  explicit FieldState(const GridSpec& grid);

  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  double& w(std::size_t row, std::size_t col) { return values[row * nx + col]; }
  double w(std::size_t row, std::size_t col) const { return values[row * nx + col]; }
  double& z(std::size_t row, std::size_t col) { return values[nx * ny + row * nx + col]; }
  double z(std::size_t row, std::size_t col) const { return values[nx * ny + row * nx + col]; }
  std::span<const double> component(std::size_t c) const {
    return std::span<const double>(values).subspan(c * nx * ny, nx * ny);
  }
  double max_abs() const;
};

/// 0.8 exp(-(x^2 + y^2) / 1.02), before any boundary clamping.
double initial_profile(double x, double y);

/// Gaussian bump in both components with boundary nodes forced to zero.
FieldState initial_condition(const GridSpec& grid);

/// Semi-discrete right-hand side: central 5-point diffusion scaled by
/// 1/reynolds plus first-order upwind advection. Zero on boundary nodes.
FieldState spatial_residual(const FieldState& state, const GridSpec& grid, double reynolds);

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_norms;
};

/// One implicit Euler step, solved by Newton with an analytic sparse
/// Jacobian and a direct sparse LU factorisation.
FieldState backward_euler_step(const FieldState& u_n, const FomConfig& cfg,
                               NewtonReport* report = nullptr);

struct Trajectory {
  std::vector<double> times;
  std::vector<FieldState> states;
  double wall_seconds = 0.0;
};

Trajectory solve(const FomConfig& cfg);

/// FOM trajectories for a list of Reynolds numbers on a shared grid.
struct Dataset {
  GridSpec grid;
  std::vector<double> times;
  std::vector<double> params;
  std::vector<std::string> components{"w", "z"};
  std::vector<double> fom_wall_seconds;
  /// [param][snapshot][component][row][col]
  std::vector<double> states;
  /// JSON text of the configuration that produced the dataset.
  std::string config_json;

  std::size_t snapshot_count() const { return times.size(); }
  std::size_t trajectory_size() const { return times.size() * components.size() * grid.nodes(); }
  std::size_t index_of(double mu) const;
  std::span<const double> trajectory(std::size_t param_index) const;
  double at(std::size_t p, std::size_t snap, std::size_t comp, std::size_t row, std::size_t col) const;
  void validate() const;
};

/// Runs `solve` for every Reynolds number in `params` using up to
/// `threads` concurrent solves.
Dataset generate_dataset(const FomConfig& defaults, const std::vector<double>& params,
                         unsigned threads = 1);

/// Reynolds numbers of the reference Burgers experiment.
const std::vector<double>& default_train_params();
const std::vector<double>& default_test_params();

}  // namespace inrrom
