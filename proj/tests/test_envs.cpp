#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "paug/envs.hpp"

using namespace paug;

namespace {

EnvState make_state(EnvId env, std::initializer_list<double> v) {
  EnvState s;
  s.dim = observation_dim(env);
  std::size_t i = 0;
  for (double x : v) s.values[i++] = x;
  return s;
}

}  // namespace

TEST_CASE("reset distributions") {
  const auto mc = EnvConfig::mountain_car();
  const EnvState s = reset_with(mc, [] { return 0.5; });
  CHECK(s[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(s[1] == 0.0);
  CHECK(s.dim == 2);

  const auto cp = EnvConfig::cart_pole();
  // The largest double below one stands in for the (excluded) upper bound.
  const EnvState top = reset_with(cp, [] { return std::nextafter(1.0, 0.0); });
  for (std::size_t i = 0; i < 4; ++i) CHECK(top[i] == doctest::Approx(0.05));

  Rng rng(42);
  for (int k = 0; k < 1000; ++k) {
    const EnvState r = reset(mc, rng);
    CHECK(r[0] >= -0.6);
    CHECK(r[0] <= -0.4);
    CHECK(r[1] == 0.0);
    const EnvState c = reset(cp, rng);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(c[i]) <= 0.05);
  }
}

TEST_CASE("reset is seed deterministic") {
  const auto cp = EnvConfig::cart_pole();
  Rng a(7), b(7);
  for (int k = 0; k < 20; ++k) CHECK(reset(cp, a).values == reset(cp, b).values);
}

TEST_CASE("mountain car step examples") {
  const auto mc = EnvConfig::mountain_car();
  const Transition t = step(make_state(EnvId::kMountainCar, {-0.5, 0.0}), 2, mc);
  const double v = 0.001 - 0.0025 * std::cos(1.5);
  CHECK(t.next_state[1] == doctest::Approx(v).epsilon(1e-12));
  CHECK(t.next_state[1] == doctest::Approx(0.0008232).epsilon(1e-4));
  CHECK(t.next_state[0] == doctest::Approx(-0.5 + v).epsilon(1e-12));
  CHECK(t.reward == -1.0);
  CHECK_FALSE(t.done);

  const Transition g = step(make_state(EnvId::kMountainCar, {0.49, 0.07}), 2, mc);
  CHECK(g.next_state[0] >= 0.5);
  CHECK(g.reward == 10.0);
  CHECK(g.done);
  CHECK(g.reached_goal);
}

TEST_CASE("mountain car left wall is inelastic") {
  const auto mc = EnvConfig::mountain_car();
  const Transition t = step(make_state(EnvId::kMountainCar, {-1.19, -0.07}), 0, mc);
  CHECK(t.next_state[0] == -1.2);
  CHECK(t.next_state[1] == 0.0);
  CHECK_FALSE(t.done);
}

TEST_CASE("cart pole one step from equilibrium") {
  const auto cp = EnvConfig::cart_pole();
  for (std::size_t a : {0u, 1u}) {
    const Transition t = step(make_state(EnvId::kCartPole, {0, 0, 0, 0}), a, cp);
    CHECK(t.reward == 1.0);
    CHECK_FALSE(t.done);
    CHECK(std::abs(t.next_state[2]) < 12.0 * M_PI / 180.0);
  }
}

TEST_CASE("episodes hold at most 200 steps") {
  for (EnvId env : {EnvId::kMountainCar, EnvId::kCartPole}) {
    const auto cfg = EnvConfig::for_env(env);
    // Stationary-ish states that survive 200 steps under a fixed action.
    EnvState s = env == EnvId::kMountainCar
                     ? make_state(env, {-0.5236, 0.0})
                     : make_state(env, {0, 0, 0, 0});
    int steps = 0;
    std::size_t action = env == EnvId::kMountainCar ? 1 : 0;
    Transition t;
    do {
      if (env == EnvId::kCartPole) action = s[2] + 0.5 * s[3] > 0 ? 1 : 0;
      t = step(s, action, cfg);
      s = t.next_state;
      ++steps;
    } while (!t.done);
    CHECK(steps == 200);
    CHECK_FALSE(t.reached_goal);
    CHECK_THROWS_AS(step(s, action, cfg), std::logic_error);
  }
}

TEST_CASE("invalid action is rejected") {
  CHECK_THROWS_AS(step(make_state(EnvId::kCartPole, {0, 0, 0, 0}), 2,
                       EnvConfig::cart_pole()),
                  std::out_of_range);
  CHECK_THROWS_AS(step(make_state(EnvId::kMountainCar, {-0.5, 0}), 3,
                       EnvConfig::mountain_car()),
                  std::out_of_range);
}

TEST_CASE("dynamics match the reference implementation") {
  Rng rng(2024);
  const auto mc = EnvConfig::mountain_car();
  for (int k = 0; k < 1000; ++k) {
    const double p = rng.uniform(-1.2, 0.6), v = rng.uniform(-0.07, 0.07);
    const auto a = static_cast<int>(rng.index(3));
    const Transition t = step(make_state(EnvId::kMountainCar, {p, v}), a, mc);
    const auto ref = oracle::mountain_car(p, v, a);
    CHECK(std::abs(t.next_state[0] - ref.position) <= 1e-12);
    CHECK(std::abs(t.next_state[1] - ref.velocity) <= 1e-12);
    CHECK(t.done == ref.at_goal);
  }
  const auto cp = EnvConfig::cart_pole();
  for (int k = 0; k < 1000; ++k) {
    const std::array<double, 4> s{rng.uniform(-2.4, 2.4), rng.uniform(-3, 3),
                                  rng.uniform(-0.2, 0.2), rng.uniform(-3, 3)};
    const auto a = static_cast<int>(rng.index(2));
    const Transition t =
        step(make_state(EnvId::kCartPole, {s[0], s[1], s[2], s[3]}), a, cp);
    const auto ref = oracle::cart_pole(s, a);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(t.next_state[i] - ref[i]) <= 1e-12);
    }
    CHECK(t.done == oracle::cart_pole_failed(ref));
  }
}

TEST_CASE("mountain car observations stay in the box") {
  Environment env(EnvConfig::mountain_car(3));
  Rng actions(9);
  env.reset();
  for (long k = 0; k < 1'000'000; ++k) {
    const Transition t = env.step(actions.index(3));
    const double p = t.next_state[0], v = t.next_state[1];
    if (p < -1.2 || p > 0.6 || v < -0.07 || v > 0.07) {
      FAIL("observation left the box at step " << k);
    }
    if (t.done) env.reset();
  }
}

TEST_CASE("reward accounting") {
  for (EnvId id : {EnvId::kMountainCar, EnvId::kCartPole}) {
    Environment env(EnvConfig::for_env(id, 11));
    Rng actions(5);
    for (int ep = 0; ep < 50; ++ep) {
      env.reset();
      double total = 0.0;
      int steps = 0;
      bool goal = false;
      Transition t;
      do {
        // Pump energy on MountainCar so that some episodes reach the flag.
        const std::size_t a = id == EnvId::kMountainCar
                                  ? (env.state()[1] >= 0 ? 2 : 0)
                                  : actions.index(2);
        t = env.step(a);
        total += t.reward;
        goal = goal || t.reached_goal;
        ++steps;
      } while (!t.done);
      const double expected =
          id == EnvId::kMountainCar ? -1.0 * steps + (goal ? 11.0 : 0.0) : steps;
      CHECK(total == expected);
    }
  }
}

TEST_CASE("env ids") {
  CHECK(parse_env_id("mountaincar") == EnvId::kMountainCar);
  CHECK(parse_env_id("cartpole") == EnvId::kCartPole);
  CHECK_THROWS_AS(parse_env_id("pendulum"), std::invalid_argument);
  CHECK(num_actions(EnvId::kMountainCar) == 3);
  CHECK(num_actions(EnvId::kCartPole) == 2);
}
