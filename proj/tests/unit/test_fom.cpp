// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "inrrom/errors.hpp"
#include "inrrom/fom.hpp"
#include "oracles.hpp"

using namespace inrrom;

namespace {

GridSpec grid(std::size_t n) {
  GridSpec g;
  g.nx = n;
  g.ny = n;
  return g;
}

FomConfig small_config(std::size_t n, double re, double dt, double t_final, std::size_t stride) {
  FomConfig c;
  c.grid = grid(n);
  c.reynolds = re;
  c.dt = dt;
  c.t_final = t_final;
  c.snapshot_stride = stride;
  return c;
}

FieldState random_state(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FieldState s(g);
  for (std::size_t r = 1; r + 1 < g.ny; ++r) {
    for (std::size_t c = 1; c + 1 < g.nx; ++c) {
      s.w(r, c) = d(rng);
      s.z(r, c) = d(rng);
    }
  }
  return s;
}

bool boundary_is_zero(const FieldState& s, const GridSpec& g) {
  for (std::size_t r = 0; r < g.ny; ++r) {
    for (std::size_t c = 0; c < g.nx; ++c) {
      if (g.on_boundary(r, c) && (s.w(r, c) != 0.0 || s.z(r, c) != 0.0)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("fom") {
  TEST_CASE("initial condition") {
    const GridSpec g = grid(7);  // unit spacing, node (3,3) at the origin
    const FieldState ic = initial_condition(g);
    CHECK(ic.w(3, 3) == 0.8);
    CHECK(ic.z(3, 3) == 0.8);
    CHECK(initial_profile(-3.0, -3.0) == doctest::Approx(0.8 * std::exp(-18.0 / 1.02)).epsilon(1e-15));
    CHECK(boundary_is_zero(ic, g));
    for (std::size_t r = 0; r < 7; ++r) {
      for (std::size_t c = 0; c < 7; ++c) CHECK(ic.w(r, c) == ic.w(6 - r, 6 - c));
    }
    CHECK(testing::max_abs_diff(ic.values, testing::oracle_initial(g)) < 1e-15);
  }

  TEST_CASE("spatial residual matches the loop oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const GridSpec g = grid(9 + seed);
      const FieldState s = random_state(g, seed);
      const FieldState r = spatial_residual(s, g, 37.0);
      CHECK(testing::max_abs_diff(r.values, testing::oracle_rhs(s.values, g, 37.0)) < 1e-12);
    }
  }

  TEST_CASE("zero state has zero residual") {
    const GridSpec g = grid(8);
    for (double v : spatial_residual(FieldState(g), g, 100.0).values) CHECK(v == 0.0);
  }

  TEST_CASE("clamped constant field against a direct stencil") {
    const GridSpec g = grid(9);
    FieldState s(g);
    for (std::size_t r = 1; r + 1 < g.ny; ++r) {
      for (std::size_t c = 1; c + 1 < g.nx; ++c) s.z(r, c) = 0.5;
    }
    const FieldState res = spatial_residual(s, g, 4.0);
    const double h2 = g.hx() * g.hx();
    for (std::size_t row = 1; row + 1 < g.ny; ++row) {
      for (std::size_t col = 1; col + 1 < g.nx; ++col) {
        const double lap =
            (s.z(row, col + 1) + s.z(row, col - 1) + s.z(row + 1, col) + s.z(row - 1, col) - 4.0 * s.z(row, col)) / h2;
        const double dzdy = (s.z(row, col) - s.z(row - 1, col)) / g.hy();  // z > 0 looks south
        CHECK(res.z(row, col) == doctest::Approx(-0.5 * dzdy + lap / 4.0).epsilon(1e-12));
        CHECK(res.w(row, col) == 0.0);
      }
    }
  }

  TEST_CASE("linear field has unit upwind slope") {
    const GridSpec g = grid(11);
    FieldState s(g);
    for (std::size_t r = 1; r + 1 < g.ny; ++r) {
      for (std::size_t c = 1; c + 1 < g.nx; ++c) s.w(r, c) = g.x(c);
    }
    const FieldState res = spatial_residual(s, g, 1e300);
    for (std::size_t r = 1; r + 1 < g.ny; ++r) {
      for (std::size_t c = 2; c + 2 < g.nx; ++c) {
        // -(w dw/dx) with dw/dx = 1 and a vanishing Laplacian
        CHECK(res.w(r, c) == doctest::Approx(-g.x(c)).epsilon(1e-12).scale(1.0));
        CHECK(res.z(r, c) == 0.0);
      }
    }
  }

  TEST_CASE("non-positive Reynolds numbers are rejected") {
    const GridSpec g = grid(5);
    CHECK_THROWS_AS(spatial_residual(FieldState(g), g, 0.0), DomainError);
    CHECK_THROWS_AS(spatial_residual(FieldState(g), g, -3.0), DomainError);
    FomConfig c = small_config(5, -1.0, 0.1, 0.1, 1);
    CHECK_THROWS_AS(backward_euler_step(FieldState(c.grid), c), DomainError);
  }

  TEST_CASE("zero is a fixed point of the implicit step") {
    const FomConfig c = small_config(8, 100.0, 1e-3, 1e-3, 1);
    NewtonReport report;
    const FieldState next = backward_euler_step(FieldState(c.grid), c, &report);
    for (double v : next.values) CHECK(v == 0.0);
    CHECK(report.residual_norms.size() == 1);
    CHECK(report.iterations == 0);
  }

  TEST_CASE("implicit step solves its own equation with a fast Newton tail") {
    const FomConfig c = small_config(16, 100.0, 1e-2, 1e-2, 1);
    const FieldState u0 = initial_condition(c.grid);
    NewtonReport report;
    const FieldState u1 = backward_euler_step(u0, c, &report);
    CHECK(boundary_is_zero(u1, c.grid));
    const auto f = testing::oracle_rhs(u1.values, c.grid, c.reynolds);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(u1.values[i] - u0.values[i] - c.dt * f[i]));
    CHECK(worst < 1e-10);
    const auto& norms = report.residual_norms;
    REQUIRE(norms.size() >= 3);
    CHECK(norms.back() / norms[norms.size() - 2] < 0.5);
    CHECK(norms[norms.size() - 2] / norms[norms.size() - 3] < 0.5);
  }

  TEST_CASE("Newton failure carries the residual norm") {
    FomConfig c = small_config(12, 100.0, 1e-2, 1e-2, 1);
    c.newton_max_iters = 1;
    c.newton_tol = 1e-300;
    try {
      backward_euler_step(initial_condition(c.grid), c);
      FAIL("expected a solver error");
    } catch (const SolverError& e) {
      CHECK(e.residual_norm() > 0.0);
    }
  }

  TEST_CASE("first-order convergence in time against a refined explicit reference") {
    const GridSpec g = grid(12);
    const auto ref = testing::rk4_reference(g, 100.0, 0.5, 2.5e-5);
    std::vector<double> errors;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
      const auto traj = solve(small_config(12, 100.0, dt, 0.5, std::size_t(std::llround(0.5 / dt))));
      errors.push_back(testing::max_abs_diff(traj.states.back().values, ref));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double factor = errors[i - 1] / errors[i];
      CHECK(factor >= 1.7);
      CHECK(factor <= 2.3);
    }
  }

  TEST_CASE("trajectory invariants") {
    const auto traj = solve(small_config(14, 30.0, 1e-2, 1.0, 5));
    REQUIRE(traj.states.size() == 21);
    const GridSpec g = grid(14);
    double prev = traj.states.front().max_abs();
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
      const FieldState& st = traj.states[s];
      CHECK(boundary_is_zero(st, g));
      // (x, y, w, z) -> (y, x, z, w) symmetry
      double asym = 0.0;
      for (std::size_t r = 0; r < g.ny; ++r) {
        for (std::size_t c = 0; c < g.nx; ++c) asym = std::max(asym, std::abs(st.w(r, c) - st.z(c, r)));
      }
      CHECK(asym < 1e-10);
      CHECK(st.max_abs() <= prev);
      prev = st.max_abs();
    }
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(1.0));
    CHECK(traj.wall_seconds > 0.0);
  }

  TEST_CASE("snapshot counting") {
    CHECK(solve(small_config(6, 100.0, 1e-2, 0.0, 1)).states.size() == 1);
    CHECK(solve(small_config(6, 100.0, 1e-2, 0.1, 10)).states.size() == 2);
    FomConfig defaults;
    CHECK(defaults.snapshot_count() == 51);
    CHECK_THROWS_AS(small_config(6, 100.0, 3e-2, 0.1, 1).validate(), ConfigError);
    CHECK_THROWS_AS(small_config(6, 100.0, 1e-2, 0.1, 3).validate(), ConfigError);
    CHECK_THROWS_AS(small_config(2, 100.0, 1e-2, 0.1, 1).validate(), ConfigError);
  }

  TEST_CASE("dataset generation") {
    const FomConfig c = small_config(8, 100.0, 1e-2, 0.2, 4);
    const Dataset d = generate_dataset(c, {100.0}, 1);
    CHECK(d.params.size() == 1);
    CHECK(d.snapshot_count() == 6);
    CHECK(d.states.size() == d.trajectory_size());
    CHECK(d.fom_wall_seconds.size() == 1);
    CHECK_THROWS_AS(d.index_of(50.0), ContractError);

    const Dataset two = generate_dataset(c, {30.0, 3000.0}, 2);
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t col = 0; col < 8; ++col) CHECK(two.at(0, 0, 0, r, col) == two.at(1, 0, 0, r, col));
    }
    CHECK(two.at(0, 5, 0, 4, 4) != two.at(1, 5, 0, 4, 4));
    // Thread count does not change the numbers.
    const Dataset serial = generate_dataset(c, {30.0, 3000.0}, 1);
    CHECK(serial.states == two.states);
  }

  TEST_CASE("reference parameter sets") {
    CHECK(default_train_params() ==
          std::vector<double>{30, 50, 100, 500, 1000, 2000, 5000, 10000, 30000, 50000});
    CHECK(default_test_params() == std::vector<double>{20, 300, 20000, 60000});
  }
}
