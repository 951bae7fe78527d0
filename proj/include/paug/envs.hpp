#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include "paug/rng.hpp"

namespace paug {

enum class EnvId { kMountainCar, kCartPole };

EnvId parse_env_id(std::string_view name);
std::string_view to_string(EnvId env);

std::size_t num_actions(EnvId env);
std::size_t observation_dim(EnvId env);

// Classic-control constants. The MountainCar goal reward (+10) differs from
// the usual toolkit default of 0.
namespace mountain_car {
inline constexpr double kMinPosition = -1.2;
inline constexpr double kMaxPosition = 0.6;
inline constexpr double kMaxSpeed = 0.07;
inline constexpr double kGoalPosition = 0.5;
inline constexpr double kForce = 0.001;
inline constexpr double kGravity = 0.0025;
}  // namespace mountain_car

namespace cart_pole {
inline constexpr double kGravity = 9.8;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kTotalMass = kCartMass + kPoleMass;
inline constexpr double kHalfPoleLength = 0.5;
inline constexpr double kPoleMassLength = kPoleMass * kHalfPoleLength;
inline constexpr double kForceMagnitude = 10.0;
inline constexpr double kTimeStep = 0.02;
inline constexpr double kPositionLimit = 2.4;
inline constexpr double kAngleLimitDegrees = 12.0;
inline constexpr double kObservedAngleDegrees = 24.0;
inline constexpr double kResetHalfWidth = 0.05;
}  // namespace cart_pole

constexpr double degrees_to_radians(double degrees) {
  return degrees * std::numbers::pi / 180.0;
}

struct EnvConfig {
  EnvId env = EnvId::kMountainCar;
  int max_episode_length = 200;
  std::uint64_t seed = 0;
  double goal_reward = 10.0;  // MountainCar only
  double step_reward = -1.0;  // MountainCar -1, CartPole +1
  double pole_angle_limit = 0.0;  // radians, CartPole only

  static EnvConfig mountain_car(std::uint64_t seed = 0);
  static EnvConfig cart_pole(std::uint64_t seed = 0);
  static EnvConfig for_env(EnvId env, std::uint64_t seed = 0);

  void validate() const;
};

// Continuous observation plus the bookkeeping needed to enforce the episode
// contract. MountainCar: (position, velocity). CartPole: (cart position, cart
// velocity, pole angle [rad], pole angular velocity).
struct EnvState {
  std::array<double, 4> values{};
  std::size_t dim = 0;
  int steps = 0;      // steps taken so far in this episode
  bool done = false;  // true once a terminal transition has been emitted

  std::span<const double> observation() const { return {values.data(), dim}; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct Transition {
  EnvState state;
  std::size_t action = 0;
  double reward = 0.0;
  EnvState next_state;
  bool done = false;
  int step_index = 0;  // zero-based index of this step within the episode
  bool reached_goal = false;
};

// Draws an initial state. `draw` returns uniforms on [0, 1); MountainCar
// consumes one draw, CartPole four.
template <class Draw>
EnvState reset_with(const EnvConfig& config, Draw&& draw) {
  EnvState s;
  switch (config.env) {
    case EnvId::kMountainCar:
      s.dim = 2;
      s.values[0] = -0.6 + 0.2 * draw();
      s.values[1] = 0.0;
      break;
    case EnvId::kCartPole:
      s.dim = 4;
      for (std::size_t i = 0; i < 4; ++i) {
        s.values[i] = -cart_pole::kResetHalfWidth +
                      2.0 * cart_pole::kResetHalfWidth * draw();
      }
      break;
  }
  return s;
}

EnvState reset(const EnvConfig& config, Rng& rng);

// Advances one step. Throws std::logic_error when `state` is already terminal
// and std::out_of_range for an invalid action.
Transition step(const EnvState& state, std::size_t action,
                const EnvConfig& config);

// Owning wrapper used by the experiment runner.
class Environment {
 public:
  explicit Environment(EnvConfig config)
      : config_(config), rng_(config.seed) {
    config_.validate();
  }

  const EnvState& reset() {
    state_ = paug::reset(config_, rng_);
    return state_;
  }

  Transition step(std::size_t action) {
    Transition t = paug::step(state_, action, config_);
    state_ = t.next_state;
    return t;
  }

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }

 private:
  EnvConfig config_;
  Rng rng_;
  EnvState state_;
};

}  // namespace paug
