// SPDX-License-Identifier: Apache-2.0
#include "inrrom/fom.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "inrrom/errors.hpp"

namespace inrrom {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

void require_positive_reynolds(double reynolds) {
  if (!(reynolds > 0.0) || !std::isfinite(reynolds)) {
    throw DomainError("Reynolds number must be positive, got " + std::to_string(reynolds));
  }
}

// Upwind one-sided difference of `f` along an axis, oriented by the
// advecting velocity `a`. Returns (derivative, d/d f_centre, d/d f_upwind
// neighbour) and which neighbour was used (-1 previous, +1 next).
struct Upwind {
  double derivative;
  double d_centre;
  double d_neighbour;
  int side;
};

Upwind upwind(double a, double f_prev, double f_centre, double f_next, double h) {
  if (a > 0.0) return {(f_centre - f_prev) / h, 1.0 / h, -1.0 / h, -1};
  return {(f_next - f_centre) / h, -1.0 / h, 1.0 / h, +1};
}

// Residual of u - u_n - dt F(u) with identity rows on the boundary, and
// optionally the Jacobian triplets with a fixed 5-point pattern per
// component block.
void assemble(const FieldState& u, const FieldState& u_n, const GridSpec& g, double dt,
              double nu, std::vector<double>& residual,
              std::vector<Eigen::Triplet<double>>* triplets) {
  const std::size_t nx = g.nx, ny = g.ny, n = nx * ny;
  const double hx = g.hx(), hy = g.hy();
  const double cx = nu / (hx * hx), cy = nu / (hy * hy);
  residual.assign(2 * n, 0.0);
  if (triplets) triplets->clear();

  auto add = [&](std::size_t r, std::size_t c, double v) {
    if (triplets) triplets->emplace_back(int(r), int(c), v);
  };

  for (std::size_t row = 0; row < ny; ++row) {
    for (std::size_t col = 0; col < nx; ++col) {
      const std::size_t k = row * nx + col;
      if (g.on_boundary(row, col)) {
        residual[k] = u.values[k];
        residual[n + k] = u.values[n + k];
        add(k, k, 1.0);
        add(n + k, n + k, 1.0);
        continue;
      }
      const double w = u.values[k], z = u.values[n + k];
      const std::size_t west = k - 1, east = k + 1, south = k - nx, north = k + nx;

      for (std::size_t comp = 0; comp < 2; ++comp) {
        const std::size_t o = comp * n;
        const double* f = u.values.data() + o;
        const Upwind dx = upwind(w, f[west], f[k], f[east], hx);
        const Upwind dy = upwind(z, f[south], f[k], f[north], hy);
        const double lap = cx * (f[east] - 2.0 * f[k] + f[west]) + cy * (f[north] - 2.0 * f[k] + f[south]);
        const double rhs = -(w * dx.derivative + z * dy.derivative) + lap;
        residual[o + k] = u.values[o + k] - u_n.values[o + k] - dt * rhs;

        if (!triplets) continue;
        // dF/du on this row; J = I - dt dF/du.
        double diag = -(w * dx.d_centre + z * dy.d_centre) - 2.0 * (cx + cy);
        if (comp == 0) diag -= dx.derivative;  // w is also the x-advecting velocity
        else diag -= dy.derivative;           // z is also the y-advecting velocity
        add(o + k, o + k, 1.0 - dt * diag);

        const double w_west = cx + (dx.side < 0 ? -w * dx.d_neighbour : 0.0);
        const double w_east = cx + (dx.side > 0 ? -w * dx.d_neighbour : 0.0);
        const double s_south = cy + (dy.side < 0 ? -z * dy.d_neighbour : 0.0);
        const double s_north = cy + (dy.side > 0 ? -z * dy.d_neighbour : 0.0);
        add(o + k, o + west, -dt * w_west);
        add(o + k, o + east, -dt * w_east);
        add(o + k, o + south, -dt * s_south);
        add(o + k, o + north, -dt * s_north);

        // Coupling through the advecting velocity of the other component.
        if (comp == 0) add(o + k, n + k, dt * dy.derivative);
        else add(o + k, k, dt * dx.derivative);
      }
    }
  }
}

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void GridSpec::validate() const {
  if (nx < 3 || ny < 3) throw ConfigError("grid needs at least 3 nodes per axis");
  if (!(xmax > xmin) || !(ymax > ymin)) throw ConfigError("grid ranges must be non-degenerate");
}

std::size_t FomConfig::steps() const {
  const double ratio = t_final / dt;
  return std::size_t(std::llround(ratio));
}

void FomConfig::validate() const {
  grid.validate();
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (t_final < 0.0) throw ConfigError("t_final must be non-negative");
  const double ratio = t_final / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-12 * std::max(1.0, ratio)) {
    throw ConfigError("t_final / dt must be an integer number of steps");
  }
  if (snapshot_stride == 0) throw ConfigError("snapshot_stride must be positive");
  if (steps() % snapshot_stride != 0) throw ConfigError("snapshot_stride must divide the step count");
  if (!(newton_tol > 0.0) || newton_max_iters < 1) throw ConfigError("invalid Newton settings");
  require_positive_reynolds(reynolds);
}

FieldState::FieldState(const GridSpec& grid)
    : nx(grid.nx), ny(grid.ny), values(2 * grid.nodes(), 0.0) {}

double FieldState::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double initial_profile(double x, double y) { return 0.8 * std::exp(-(x * x + y * y) / 1.02); }

FieldState initial_condition(const GridSpec& grid) {
  grid.validate();
  FieldState s(grid);
  for (std::size_t row = 0; row < grid.ny; ++row) {
    for (std::size_t col = 0; col < grid.nx; ++col) {
      if (grid.on_boundary(row, col)) continue;
      const double v = initial_profile(grid.x(col), grid.y(row));
      s.w(row, col) = v;
      s.z(row, col) = v;
    }
  }
  return s;
}

FieldState spatial_residual(const FieldState& state, const GridSpec& grid, double reynolds) {
  require_positive_reynolds(reynolds);
  if (state.nx != grid.nx || state.ny != grid.ny) throw DimensionError("spatial_residual: state/grid mismatch");
  // With u_n = u and dt = 1 the step residual is exactly -F(u).
  std::vector<double> r;
  assemble(state, state, grid, 1.0, 1.0 / reynolds, r, nullptr);
  FieldState out(grid);
  for (std::size_t row = 0; row < grid.ny; ++row) {
    for (std::size_t col = 0; col < grid.nx; ++col) {
      if (grid.on_boundary(row, col)) continue;
      const std::size_t k = row * grid.nx + col;
      out.values[k] = -r[k];
      out.values[grid.nodes() + k] = -r[grid.nodes() + k];
    }
  }
  return out;
}

FieldState backward_euler_step(const FieldState& u_n, const FomConfig& cfg, NewtonReport* report) {
  const GridSpec& g = cfg.grid;
  require_positive_reynolds(cfg.reynolds);
  const double nu = 1.0 / cfg.reynolds;
  const std::size_t n = 2 * g.nodes();

  FieldState u = u_n;
  std::vector<double> residual;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(12 * g.nodes());
  SparseMatrix jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analysed = false;

  if (report) *report = NewtonReport{};
  for (int it = 0;; ++it) {
    assemble(u, u_n, g, cfg.dt, nu, residual, &triplets);
    const double rnorm = max_norm(residual);
    if (report) report->residual_norms.push_back(rnorm);
    if (!std::isfinite(rnorm)) throw SolverError("Newton iteration produced a non-finite residual", rnorm);
    if (rnorm < cfg.newton_tol) break;
    if (it == cfg.newton_max_iters) {
      std::ostringstream msg;
      msg << "Newton did not converge in " << cfg.newton_max_iters << " iterations, residual " << rnorm;
      throw SolverError(msg.str(), rnorm);
    }
    jac.setFromTriplets(triplets.begin(), triplets.end());
    if (!analysed) {
      lu.analyzePattern(jac);
      analysed = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorisation failed", rnorm);
    const Eigen::Map<const Eigen::VectorXd> rhs(residual.data(), Eigen::Index(n));
    const Eigen::VectorXd delta = lu.solve(rhs);
    for (std::size_t i = 0; i < n; ++i) u.values[i] -= delta[Eigen::Index(i)];
    if (report) report->iterations = it + 1;
  }
  // Boundary rows are identity constraints; pin them exactly.
  for (std::size_t row = 0; row < g.ny; ++row) {
    for (std::size_t col = 0; col < g.nx; ++col) {
      if (!g.on_boundary(row, col)) continue;
      u.w(row, col) = 0.0;
      u.z(row, col) = 0.0;
    }
  }
  return u;
}

Trajectory solve(const FomConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Trajectory traj;
  FieldState u = initial_condition(cfg.grid);
  traj.times.push_back(0.0);
  traj.states.push_back(u);
  const std::size_t steps = cfg.steps();
  for (std::size_t step = 1; step <= steps; ++step) {
    try {
      u = backward_euler_step(u, cfg);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << "time step " << step << " (t=" << double(step) * cfg.dt << ", Re=" << cfg.reynolds
          << "): " << e.what();
      throw SolverError(msg.str(), e.residual_norm());
    }
    if (step % cfg.snapshot_stride == 0) {
      traj.times.push_back(double(step) * cfg.dt);
      traj.states.push_back(u);
    }
  }
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

std::size_t Dataset::index_of(double mu) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] == mu) return i;
  }
  throw ContractError("Reynolds number " + std::to_string(mu) + " is not in the dataset");
}

std::span<const double> Dataset::trajectory(std::size_t p) const {
  return std::span<const double>(states).subspan(p * trajectory_size(), trajectory_size());
}

double Dataset::at(std::size_t p, std::size_t snap, std::size_t comp, std::size_t row,
                   std::size_t col) const {
  const std::size_t nc = components.size();
  return states[(((p * times.size() + snap) * nc + comp) * grid.ny + row) * grid.nx + col];
}

void Dataset::validate() const {
  grid.validate();
  if (times.empty() || times.front() != 0.0) throw ContractError("dataset times must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ContractError("dataset times must be strictly increasing");
  }
  if (params.empty()) throw ContractError("dataset has no parameters");
  if (fom_wall_seconds.size() != params.size()) throw ContractError("dataset wall-time list length mismatch");
  if (states.size() != params.size() * trajectory_size()) throw ContractError("dataset payload length mismatch");
}

Dataset generate_dataset(const FomConfig& defaults, const std::vector<double>& params, unsigned threads) {
  if (params.empty()) throw ConfigError("generate_dataset: empty parameter list");
  for (double mu : params) require_positive_reynolds(mu);
  defaults.validate();

  std::vector<Trajectory> runs(params.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < params.size(); i = next++) {
      try {
        FomConfig cfg = defaults;
        cfg.reynolds = params[i];
        runs[i] = solve(cfg);
      } catch (const SolverError& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(
              SolverError("Re=" + std::to_string(params[i]) + ": " + e.what(), e.residual_norm()));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, unsigned(params.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  Dataset ds;
  ds.grid = defaults.grid;
  ds.times = runs.front().times;
  ds.params = params;
  ds.states.reserve(params.size() * ds.trajectory_size());
  for (const auto& run : runs) {
    ds.fom_wall_seconds.push_back(run.wall_seconds);
    for (const auto& s : run.states) ds.states.insert(ds.states.end(), s.values.begin(), s.values.end());
  }
  return ds;
}

const std::vector<double>& default_train_params() {
  static const std::vector<double> p{30, 50, 100, 500, 1000, 2000, 5000, 10000, 30000, 50000};
  return p;
}

const std::vector<double>& default_test_params() {
  static const std::vector<double> p{20, 300, 20000, 60000};
  return p;
}

}  // namespace inrrom
