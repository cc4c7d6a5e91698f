// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "composites.hpp"
#include "doctest.h"
#include "gradcheck.hpp"
#include "inrrom/decoder.hpp"
#include "inrrom/errors.hpp"
#include "inrrom/losses.hpp"

using namespace inrrom;
using testing::random_tensor;

namespace {

DecoderConfig config(std::size_t latent, std::size_t depth, std::size_t width) {
  DecoderConfig c;
  c.latent_dim = latent;
  c.depth = depth;
  c.width = width;
  c.omega_max = 8.0;
  return c;
}

// Point-by-point evaluation of the multiplicative filter recursion.
double oracle_head(const FourierHead& h, const Tensor& latent, std::size_t offset, double x, double y) {
  const std::size_t depth = h.stages.size();
  const std::size_t width = h.stages[0].omega.value.rows();
  const std::size_t k = h.stages[0].mod_weight.value.cols();
  auto stage_factor = [&](std::size_t i, std::size_t j) {
    const FourierStage& s = h.stages[i];
    const double g = std::sin(s.omega.value(j, 0) * x + s.omega.value(j, 1) * y + s.phase.value(0, j));
    double m = s.mod_bias.value(0, j);
    for (std::size_t l = 0; l < k; ++l) m += s.mod_weight.value(j, l) * latent[offset + l];
    return g * m;
  };
  std::vector<double> z(width), next(width);
  for (std::size_t j = 0; j < width; ++j) z[j] = stage_factor(0, j);
  for (std::size_t i = 1; i < depth; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      double a = h.linears[i - 1].bias.value(0, j);
      for (std::size_t l = 0; l < width; ++l) a += h.linears[i - 1].weight.value(j, l) * z[l];
      next[j] = a * stage_factor(i, j);
    }
    z.swap(next);
  }
  double out = h.out_bias.value(0, 0);
  for (std::size_t j = 0; j < width; ++j) out += h.out_weight.value(0, j) * z[j];
  return out;
}

}  // namespace

TEST_SUITE("decoder") {
  TEST_CASE("batched decoding matches a point-wise oracle on a 64x64 grid") {
    std::mt19937_64 rng(11);
    const DecoderConfig cfg = config(5, 3, 16);
    FourierNet net(cfg, rng);
    const Tensor latent = random_tensor({10, 1}, rng);
    GridSpec g;  // 64 x 64
    const Tensor coords = normalized_coords(g);
    const Tensor out = decode(net, latent, coords);
    REQUIRE(out.shape() == Shape{2, g.nodes()});
    double worst = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t p = 0; p < g.nodes(); ++p) {
        const double ref = oracle_head(net.heads[c], latent, c * 5, coords(p, 0), coords(p, 1));
        worst = std::max(worst, std::abs(out(c, p) - ref));
      }
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("normalised coordinates") {
    GridSpec g;
    g.nx = 5;
    g.ny = 3;
    const Tensor c = normalized_coords(g);
    CHECK(c.shape() == Shape{15, 2});
    CHECK(c(0, 0) == -1.0);
    CHECK(c(0, 1) == -1.0);
    CHECK(c(4, 0) == 1.0);
    CHECK(c(5, 1) == 0.0);  // row 1 is the middle of 3
    CHECK(c(14, 0) == 1.0);
    CHECK(c(14, 1) == 1.0);
  }

  TEST_CASE("zero phases at the origin leave only the output bias") {
    std::mt19937_64 rng(12);
    FourierNet net(config(4, 3, 8), rng);
    for (auto& h : net.heads) {
      for (auto& s : h.stages) s.phase.value.fill(0.0);
      h.out_bias.value.fill(0.25);
    }
    const Tensor out = decode(net, random_tensor({8, 1}, rng), Tensor({1, 2}));
    CHECK(out(0, 0) == 0.25);
    CHECK(out(1, 0) == 0.25);
  }

  TEST_CASE("single stage without biases is linear in the latent") {
    std::mt19937_64 rng(13);
    FourierNet net(config(4, 1, 8), rng);
    for (auto& h : net.heads) {
      h.stages[0].mod_bias.value.fill(0.0);
      h.out_bias.value.fill(0.0);
    }
    const Tensor u = random_tensor({8, 1}, rng);
    const Tensor coords = random_tensor({9, 2}, rng);
    const Tensor a = decode(net, u, coords);
    const Tensor b = decode(net, scale(u, -2.5), coords);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(-2.5 * a[i]).epsilon(1e-13));
  }

  TEST_CASE("filters stay within [-1, 1]") {
    std::mt19937_64 rng(14);
    FourierNet net(config(4, 3, 32), rng);
    Tape tape(false);
    const auto b = net.bind(tape);
    const Var coords = tape.constant(random_tensor({200, 2}, rng, -3.0, 3.0));
    for (std::size_t head = 0; head < 2; ++head) {
      const auto gs = net.filters(b, head, coords);
      CHECK(gs.size() == 3);
      for (const auto& g : gs) CHECK(max_abs(g.value()) <= 1.0);
    }
  }

  TEST_CASE("trajectory decoding") {
    std::mt19937_64 rng(15);
    FourierNet net(config(3, 2, 8), rng);
    GridSpec g;
    g.nx = 5;
    g.ny = 4;
    const Tensor l0 = random_tensor({6, 1}, rng), l1 = random_tensor({6, 1}, rng);
    const auto one = decode_trajectory(net, {l0}, g);
    CHECK(one.size() == 2 * g.nodes());
    const auto three = decode_trajectory(net, {l0, l1, l0}, g);
    REQUIRE(three.size() == 3 * 2 * g.nodes());
    const std::size_t block = 2 * g.nodes();
    for (std::size_t i = 0; i < block; ++i) {
      CHECK(three[i] == three[2 * block + i]);
      CHECK(three[i] == one[i]);
    }
    // [snapshot][component][row][col]
    const Tensor direct = decode(net, l1, normalized_coords(g));
    CHECK(three[block + g.nodes() + 7] == direct(1, 7));
  }

  TEST_CASE("refined grids agree bit for bit at shared nodes") {
    std::mt19937_64 rng(16);
    FourierNet net(config(4, 3, 16), rng);
    const Tensor u = random_tensor({8, 1}, rng);
    GridSpec coarse;
    coarse.nx = 9;
    coarse.ny = 9;
    GridSpec fine = coarse;
    fine.nx = 17;
    fine.ny = 17;
    const auto a = decode_trajectory(net, {u}, coarse);
    const auto b = decode_trajectory(net, {u}, fine);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t r = 0; r < 9; ++r) {
        for (std::size_t k = 0; k < 9; ++k) {
          CHECK(a[c * 81 + r * 9 + k] == b[c * 289 + 2 * r * 17 + 2 * k]);
        }
      }
    }
  }

  TEST_CASE("off-grid evaluation is smooth") {
    std::mt19937_64 rng(17);
    FourierNet net(config(4, 3, 16), rng);
    const Tensor u = random_tensor({8, 1}, rng);
    Tensor pts = random_tensor({50, 2}, rng);
    Tensor shifted = pts;
    const double h = 1e-6;
    for (std::size_t p = 0; p < 50; ++p) shifted(p, 0) += h;
    const Tensor a = decode(net, u, pts), b = decode(net, u, shifted);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double slope = (b[i] - a[i]) / h;
      CHECK(std::isfinite(slope));
      CHECK(std::abs(slope) < 1e4);
    }
  }

  TEST_CASE("dimension checks") {
    std::mt19937_64 rng(18);
    FourierNet net(config(4, 2, 8), rng);
    CHECK_THROWS_AS(decode(net, Tensor({7, 1}), Tensor({3, 2})), ContractError);
    CHECK_THROWS_AS(decode(net, Tensor({8, 1}), Tensor({3, 3})), ContractError);
    Tensor bad({1, 2});
    bad[0] = std::nan("");
    CHECK_THROWS_AS(decode(net, Tensor({8, 1}), bad), ContractError);
    DecoderConfig c = config(4, 0, 8);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("gradients of a decoded-field MSE on a 4x4 grid") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      FourierNet net(config(3, 3, 6), rng);
      Parameter code("code", random_tensor({6, 1}, rng));
      GridSpec g;
      g.nx = 4;
      g.ny = 4;
      const Tensor coords = normalized_coords(g);
      const Tensor truth = random_tensor({2 * g.nodes(), 1}, rng);
      auto params = net.parameters();
      params.push_back(&code);
      const auto r = testing::gradcheck(
          params,
          [&](Tape& t) {
            return data_loss(net.decode(net.bind(t), {t.parameter(code)}, t.constant(coords)), t.constant(truth));
          },
          seed, 6);
      CHECK_MESSAGE(r.max_rel_error < 1e-5, r.worst);
    }
    const auto stage = testing::check_fourier_stage(10);
    CHECK_MESSAGE(stage.max_rel_error < 1e-5, stage.worst);
  }
}
