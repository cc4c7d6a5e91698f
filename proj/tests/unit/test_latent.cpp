// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "composites.hpp"
#include "doctest.h"
#include "gradcheck.hpp"
#include "inrrom/errors.hpp"
#include "inrrom/latent.hpp"
#include "oracles.hpp"

using namespace inrrom;
using testing::random_tensor;

namespace {

DynamicsConfig small(ModelKind kind) {
  DynamicsConfig c;
  c.kind = kind;
  c.latent_dim = 4;
  c.hidden_layers = 3;
  c.width = 8;
  c.rank = 3;
  c.hyper_width = 5;
  return c;
}

void zero_all(std::vector<Parameter*> params) {
  for (auto* p : params) p->value.fill(0.0);
}

Tensor velocity_of(LatentDynamics& dyn, const Tensor& u, double t, double mu_tilde) {
  Tape tape(false);
  const auto b = dyn.bind(tape, mu_tilde);
  return LatentDynamics::velocity(b, tape.constant(u), t).value();
}

}  // namespace

TEST_SUITE("latent") {
  TEST_CASE("parameter counts") {
    DynamicsConfig c;
    c.kind = ModelKind::NODE;
    c.latent_dim = 255;  // input 255 + t = 256
    c.hidden_layers = 1;
    c.width = 256;
    // [256 -> 256] plus [256 -> 255]
    CHECK(count_parameters(c) == 65792 + 256 * 255 + 255);

    DynamicsConfig pnode;  // defaults: 3 x 256, rank 50
    pnode.kind = ModelKind::PNODE;
    DynamicsConfig hyper = pnode;
    hyper.kind = ModelKind::HyperPNODE;
    CHECK(count_parameters(hyper) < count_parameters(pnode));
    DynamicsConfig node = pnode;
    node.kind = ModelKind::NODE;
    CHECK(count_parameters(pnode) - count_parameters(node) == 256);

    std::mt19937_64 rng(1);
    for (auto kind : {ModelKind::NODE, ModelKind::PNODE, ModelKind::HyperPNODE}) {
      LatentDynamics dyn(small(kind), rng);
      std::size_t total = 0;
      for (auto* p : dyn.parameters()) total += p->size();
      CHECK(total == count_parameters(small(kind)));
    }
  }

  TEST_CASE("model kind names round-trip") {
    for (auto kind : {ModelKind::NODE, ModelKind::PNODE, ModelKind::HyperPNODE}) {
      CHECK(parse_model_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_model_kind("LSTM"), ConfigError);
  }

  TEST_CASE("configuration checks") {
    DynamicsConfig c = small(ModelKind::HyperPNODE);
    c.hidden_layers = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small(ModelKind::HyperPNODE);
    c.rank = 9;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("mu encoding is a frozen standardised log") {
    const MuEncoding e = MuEncoding::fit({10.0, 1000.0});
    CHECK(e.center == doctest::Approx(2.0));
    CHECK(e.scale == doctest::Approx(1.0));
    CHECK(e.encode(100.0) == doctest::Approx(0.0));
    CHECK(e.encode(1e4) == doctest::Approx(2.0));
    CHECK(MuEncoding::fit({50.0}).scale == 1.0);
    CHECK_THROWS_AS(e.encode(0.0), DomainError);
    CHECK_THROWS_AS(MuEncoding::fit({}), ContractError);
  }

  TEST_CASE("zero weights give zero velocity") {
    std::mt19937_64 rng(2);
    for (auto kind : {ModelKind::NODE, ModelKind::PNODE, ModelKind::HyperPNODE}) {
      LatentDynamics dyn(small(kind), rng);
      zero_all(dyn.parameters());
      const Tensor v = velocity_of(dyn, random_tensor({4, 1}, rng), 0.3, 1.2);
      for (double x : v.values()) CHECK(x == 0.0);
    }
  }

  TEST_CASE("only the parametric kinds see mu") {
    std::mt19937_64 rng(3);
    const Tensor u = random_tensor({4, 1}, rng);
    LatentDynamics node(small(ModelKind::NODE), rng);
    CHECK(velocity_of(node, u, 0.2, -1.0) == velocity_of(node, u, 0.2, 1.5));
    LatentDynamics pnode(small(ModelKind::PNODE), rng);
    CHECK_FALSE(velocity_of(pnode, u, 0.2, -1.0) == velocity_of(pnode, u, 0.2, 1.5));
    LatentDynamics hyper(small(ModelKind::HyperPNODE), rng);
    CHECK_FALSE(velocity_of(hyper, u, 0.2, -1.0) == velocity_of(hyper, u, 0.2, 1.5));
    // Time is an input for every kind.
    CHECK_FALSE(velocity_of(node, u, 0.2, 0.0) == velocity_of(node, u, 0.7, 0.0));
  }

  TEST_CASE("hypernetwork diagonals depend on mu only") {
    std::mt19937_64 rng(4);
    LatentDynamics dyn(small(ModelKind::HyperPNODE), rng);
    Tape tape(false);
    const auto a = dyn.bind(tape, 0.75);
    const auto b = dyn.bind(tape, 0.75);
    REQUIRE(a.diagonals.size() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(a.diagonals[l].value() == b.diagonals[l].value());
      // near one at initialisation
      for (double s : a.diagonals[l].value().values()) CHECK(std::abs(s - 1.0) < 0.1);
    }
  }

  TEST_CASE("full-rank SVD factorisation reproduces the dense network") {
    CHECK(testing::svd_equivalence_error(6, 10, 3, 4, 1) < 1e-10);
    CHECK(testing::svd_equivalence_error(101, 256, 3, 100, 2, 2) < 1e-10);
  }

  TEST_CASE("orthogonality penalty") {
    std::mt19937_64 rng(5);
    LatentDynamics dyn(small(ModelKind::HyperPNODE), rng);
    Tape tape(false);
    CHECK(dyn.orthogonality_penalty(tape, 1.0, 1.0).value().item() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    LowRankMlp single("one", 3, 8, 1, 3, 2, rng);
    for (auto& v : single.internal[0].u.value.values()) v *= 2.0;
    const double before = single.orthogonality_penalty(tape, 0.4, 0.0).value().item();
    CHECK(before == doctest::Approx(0.4 * 3.0 * std::sqrt(3.0)).epsilon(1e-12));
    for (auto& v : single.internal[0].bias.value.values()) v = 17.0;
    CHECK(single.orthogonality_penalty(tape, 0.4, 0.0).value().item() == before);

    LatentDynamics pnode(small(ModelKind::PNODE), rng);
    CHECK_THROWS_AS(pnode.orthogonality_penalty(tape, 1.0, 1.0), ContractError);
  }

  TEST_CASE("random orthonormal columns") {
    std::mt19937_64 rng(6);
    const Tensor q = random_orthonormal(12, 5, rng);
    const Tensor g = matmul(transpose(q), q);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) CHECK(g(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-13));
    }
    CHECK_THROWS_AS(random_orthonormal(3, 4, rng), ContractError);
  }

  TEST_CASE("rk4 step") {
    Tape tape(false);
    const Var one = tape.constant(Tensor::scalar(1.0));
    const VelocityFn zero = [&](Var u, double) { return 0.0 * u; };
    CHECK(rk4_step(zero, one, 0.0, 0.1).value().item() == 1.0);
    const VelocityFn decay = [](Var u, double) { return -1.0 * u; };
    CHECK(std::abs(rk4_step(decay, one, 0.0, 0.1).value().item() - std::exp(-0.1)) < 1e-7);
    CHECK_THROWS_AS(rk4_step(decay, one, 0.0, 0.0), ContractError);

    // Exact for cubic-in-time solutions: u' = 3t^2.
    const VelocityFn cubic = [&](Var u, double t) { return 0.0 * u + tape.constant(Tensor::scalar(3.0 * t * t)); };
    CHECK(rk4_step(cubic, tape.constant(Tensor::scalar(0.0)), 0.5, 0.25).value().item() ==
          doctest::Approx(0.75 * 0.75 * 0.75 - 0.125).epsilon(1e-14));
  }

  TEST_CASE("rk4 converges at fourth order") {
    std::vector<double> errors;
    for (std::size_t steps : {5, 10, 20, 40}) errors.push_back(testing::rk4_decay_error(steps));
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double factor = errors[i - 1] / errors[i];
      CHECK(factor >= 14.0);
      CHECK(factor <= 18.0);
    }
  }

  TEST_CASE("integrate") {
    Tape tape(false);
    const VelocityFn decay = [](Var u, double) { return -1.0 * u; };
    const Var u0 = tape.constant(Tensor::scalar(2.0));
    const auto single = integrate(decay, u0, {0.0});
    CHECK(single.states.size() == 1);
    CHECK(single.rk4_steps == 0);
    std::vector<double> times(51);
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = double(i) / 50.0;
    const auto traj = integrate(decay, u0, times);
    CHECK(traj.rk4_steps == 50);
    CHECK(traj.states.front().value().item() == 2.0);
    CHECK(integrate(decay, u0, times, 3).rk4_steps == 150);
    CHECK_THROWS_AS(integrate(decay, u0, {0.0, 0.5, 0.5}), ContractError);
    CHECK_THROWS_AS(integrate(decay, u0, {0.1, 0.5}), ContractError);

    std::mt19937_64 rng(7);
    LatentDynamics dyn(small(ModelKind::PNODE), rng);
    zero_all(dyn.parameters());
    const auto b = dyn.bind(tape, 0.0);
    const Var start = tape.constant(random_tensor({4, 1}, rng));
    const auto still = integrate([&](Var u, double t) { return LatentDynamics::velocity(b, u, t); }, start, times);
    for (const auto& s : still.states) CHECK(s.value() == start.value());
  }

  TEST_CASE("gradients flow through a 50-step unrolled integration") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      std::mt19937_64 rng(seed);
      LatentDynamics dyn(small(ModelKind::HyperPNODE), rng);
      Parameter u0("u0", random_tensor({4, 1}, rng));
      std::vector<double> times(51);
      for (std::size_t i = 0; i < times.size(); ++i) times[i] = double(i) / 50.0;
      auto params = dyn.parameters();
      params.push_back(&u0);
      const auto r = testing::gradcheck(
          params,
          [&](Tape& t) {
            const auto b = dyn.bind(t, 0.3);
            const auto traj =
                integrate([&](Var u, double time) { return LatentDynamics::velocity(b, u, time); }, t.parameter(u0), times);
            return testing::weighted_sum(t, concat_rows(traj.states), seed);
          },
          seed, 6);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
    }
  }

  TEST_CASE("composite gradient checks") {
    for (const auto& c : {testing::check_low_rank_layer(10), testing::check_rk4_step(10)}) {
      CHECK_MESSAGE(c.max_rel_error < 1e-5, c.name << ": " << c.worst);
    }
  }
}
