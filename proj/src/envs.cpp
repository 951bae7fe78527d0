#include "paug/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace paug {

EnvId parse_env_id(std::string_view name) {
  if (name == "mountaincar") return EnvId::kMountainCar;
  if (name == "cartpole") return EnvId::kCartPole;
  throw std::invalid_argument("unknown env id: " + std::string(name));
}

std::string_view to_string(EnvId env) {
  switch (env) {
    case EnvId::kMountainCar:
      return "mountaincar";
    case EnvId::kCartPole:
      return "cartpole";
  }
  return "unknown";
}

std::size_t num_actions(EnvId env) {
  return env == EnvId::kMountainCar ? 3 : 2;
}

std::size_t observation_dim(EnvId env) {
  return env == EnvId::kMountainCar ? 2 : 4;
}

EnvConfig EnvConfig::mountain_car(std::uint64_t seed) {
  EnvConfig c;
  c.env = EnvId::kMountainCar;
  c.seed = seed;
  c.goal_reward = 10.0;
  c.step_reward = -1.0;
  return c;
}

EnvConfig EnvConfig::cart_pole(std::uint64_t seed) {
  EnvConfig c;
  c.env = EnvId::kCartPole;
  c.seed = seed;
  c.goal_reward = 0.0;
  c.step_reward = 1.0;
  c.pole_angle_limit = degrees_to_radians(cart_pole::kAngleLimitDegrees);
  return c;
}

EnvConfig EnvConfig::for_env(EnvId env, std::uint64_t seed) {
  return env == EnvId::kMountainCar ? mountain_car(seed) : cart_pole(seed);
}

void EnvConfig::validate() const {
  if (max_episode_length <= 0) {
    throw std::invalid_argument("max episode length must be positive");
  }
  if (env == EnvId::kCartPole && !(pole_angle_limit > 0.0)) {
    throw std::invalid_argument("cartpole pole angle limit must be positive");
  }
}

EnvState reset(const EnvConfig& config, Rng& rng) {
  return reset_with(config, [&rng] { return rng.uniform(); });
}

namespace {

void step_mountain_car(const EnvState& s, std::size_t action,
                       const EnvConfig& config, Transition& t) {
  using namespace mountain_car;
  double position = s[0];
  double velocity = s[1];
  velocity += (static_cast<double>(action) - 1.0) * kForce +
              std::cos(3.0 * position) * (-kGravity);
  velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
  position += velocity;
  position = std::clamp(position, kMinPosition, kMaxPosition);
  // Inelastic left wall.
  if (position == kMinPosition && velocity < 0.0) velocity = 0.0;

  t.next_state.values[0] = position;
  t.next_state.values[1] = velocity;
  t.reached_goal = position >= kGoalPosition;
  t.reward = t.reached_goal ? config.goal_reward : config.step_reward;
  t.done = t.reached_goal;
}

void step_cart_pole(const EnvState& s, std::size_t action,
                    const EnvConfig& config, Transition& t) {
  using namespace cart_pole;
  double x = s[0];
  double x_dot = s[1];
  double theta = s[2];
  double theta_dot = s[3];

  const double force = action == 1 ? kForceMagnitude : -kForceMagnitude;
  const double cos_theta = std::cos(theta);
  const double sin_theta = std::sin(theta);
  const double temp =
      (force + kPoleMassLength * theta_dot * theta_dot * sin_theta) /
      kTotalMass;
  const double theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kHalfPoleLength *
       (4.0 / 3.0 - kPoleMass * cos_theta * cos_theta / kTotalMass));
  const double x_acc =
      temp - kPoleMassLength * theta_acc * cos_theta / kTotalMass;

  // Explicit Euler.
  x += kTimeStep * x_dot;
  x_dot += kTimeStep * x_acc;
  theta += kTimeStep * theta_dot;
  theta_dot += kTimeStep * theta_acc;

  t.next_state.values = {x, x_dot, theta, theta_dot};
  t.reward = config.step_reward;
  t.done = std::abs(x) > kPositionLimit ||
           std::abs(theta) > config.pole_angle_limit;
}

}  // namespace

Transition step(const EnvState& state, std::size_t action,
                const EnvConfig& config) {
  if (state.done) {
    throw std::logic_error("step called on a finished episode");
  }
  if (action >= num_actions(config.env)) {
    throw std::out_of_range("action " + std::to_string(action) +
                            " out of range for " +
                            std::string(to_string(config.env)));
  }
  if (state.dim != observation_dim(config.env)) {
    throw std::invalid_argument("state dimension does not match env");
  }

  Transition t;
  t.state = state;
  t.action = action;
  t.step_index = state.steps;
  t.next_state.dim = state.dim;
  t.next_state.steps = state.steps + 1;

  if (config.env == EnvId::kMountainCar) {
    step_mountain_car(state, action, config, t);
  } else {
    step_cart_pole(state, action, config, t);
  }

  // Time limit: an episode holds at most max_episode_length steps.
  if (t.next_state.steps >= config.max_episode_length) t.done = true;
  t.next_state.done = t.done;
  return t;
}

}  // namespace paug
