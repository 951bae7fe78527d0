#include "paug/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <type_traits>

namespace paug {

ScheduleConfig ScheduleConfig::defaults(EnvId env) {
  ScheduleConfig s;
  if (env == EnvId::kCartPole) {
    s.solve_period = 20;
    s.reset_threshold = 15.0;
  }
  return s;
}

void ScheduleConfig::validate() const {
  if (!(tau_q < tau_e && tau_e < total_steps)) {
    throw std::invalid_argument("schedule requires tau_q < tau_e < tau");
  }
  if (tau_q < 0) throw std::invalid_argument("tau_q must be non-negative");
  if (solve_period < 1) throw std::invalid_argument("solve period must be >= 1");
  if (reset_window < 1) throw std::invalid_argument("reset window must be >= 1");
}

std::string_view to_string(Phase phase) {
  return phase == Phase::kAugmentation ? "augmentation" : "learner";
}

std::string_view to_string(ActionSource source) {
  switch (source) {
    case ActionSource::kAugmented:
      return "augmented";
    case ActionSource::kRandomFallback:
      return "random-fallback";
    case ActionSource::kForcedRandom:
      return "forced-random";
    case ActionSource::kInner:
      return "inner";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

EpsilonGreedyAgent::EpsilonGreedyAgent(std::size_t states, std::size_t actions,
                                       QParams q, EpsilonSchedule epsilon)
    : table_(states, actions, q), epsilon_(epsilon) {}

std::size_t EpsilonGreedyAgent::select_action(const StepInput& in, Rng& rng) {
  if (rng.uniform() < epsilon_.value(in.step)) {
    return rng.index(table_.actions());
  }
  return argmax_row(table_.values(), in.state);
}

void EpsilonGreedyAgent::observe(const StepFeedback& feedback, Rng&) {
  IndexedTransition t = feedback.indexed;
  t.reward = shaped_reward(t);
  table_.update(t);
}

double count_bonus_reward(double reward, std::uint64_t visits, double beta) {
  if (beta < 0.0) throw std::invalid_argument("count bonus beta must be >= 0");
  if (visits == 0) throw std::invalid_argument("visit count must be >= 1");
  return reward + beta / std::sqrt(static_cast<double>(visits));
}

CountBonusAgent::CountBonusAgent(std::size_t states, std::size_t actions,
                                 QParams q, EpsilonSchedule epsilon,
                                 double beta)
    : EpsilonGreedyAgent(states, actions, q, epsilon),
      beta_(beta),
      visits_(states, 0) {
  if (beta < 0.0) throw std::invalid_argument("count bonus beta must be >= 0");
}

double CountBonusAgent::shaped_reward(const IndexedTransition& t) {
  return count_bonus_reward(t.reward, ++visits_.at(t.state), beta_);
}

// ---------------------------------------------------------------------------

DqnAgent::DqnAgent(MlpConfig config, Rng& init_rng)
    : config_(config),
      online_(config.input_width, config.hidden_width, config.output_width,
              init_rng),
      target_(online_),
      optimizer_(config.learning_rate),
      replay_(config.replay_capacity) {
  config_.validate();
}

std::size_t DqnAgent::select_action(const StepInput& in, Rng& rng) {
  if (rng.uniform() < config_.epsilon.value(in.step)) {
    return rng.index(config_.output_width);
  }
  const Eigen::VectorXd q = online_.forward(in.observation);
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < q.size(); ++a) {
    if (q(a) > q(best)) best = a;
  }
  return static_cast<std::size_t>(best);
}

void DqnAgent::observe(const StepFeedback& feedback, Rng& rng) {
  const Transition& t = *feedback.transition;
  Experience e;
  e.dim = t.state.dim;
  e.observation = t.state.values;
  e.next_observation = t.next_state.values;
  e.action = t.action;
  e.reward = t.reward;
  e.done = t.done;
  train_step(e, rng);
}

void DqnAgent::train_step(const Experience& e, Rng& rng) {
  replay_.push(e);
  ++stored_;
  if (replay_.size() >= std::max(config_.warmup, config_.batch_size)) {
    const auto batch = replay_.sample(config_.batch_size, rng);
    MlpGradient g;
    td_loss(online_, target_, batch, config_.gamma, &g);
    optimizer_.step(online_, g);
    ++updates_;
  }
  if (stored_ % config_.target_sync_period == 0) target_ = online_;
}

// ---------------------------------------------------------------------------

ResetDecision reset_check(std::span<const double> episode_rewards,
                          const ScheduleConfig& schedule) {
  const auto window = static_cast<std::size_t>(schedule.reset_window);
  if (episode_rewards.size() < window) return ResetDecision::kKeep;
  const double mean =
      std::accumulate(episode_rewards.begin(), episode_rewards.begin() + window,
                      0.0) /
      static_cast<double>(window);
  return mean < schedule.reset_threshold ? ResetDecision::kReset
                                         : ResetDecision::kKeep;
}

PolicyAugmentedAgent::PolicyAugmentedAgent(SideInfo side,
                                           PolicyAugmentationConfig config,
                                           std::unique_ptr<Agent> inner)
    : side_(std::move(side)),
      config_(config),
      inner_(std::move(inner)),
      table_(static_cast<std::size_t>(side_.x.rows()),
             static_cast<std::size_t>(side_.y.rows()), config.q) {
  config_.schedule.validate();
  config_.imc.validate();
  if (!inner_) throw std::invalid_argument("policy augmentation needs an inner agent");
  name_ = "paug-" + std::string(inner_->name() == "eps" ? "q" : inner_->name());
}

std::size_t PolicyAugmentedAgent::select_action(const StepInput& in, Rng& rng) {
  if (in.state >= table_.states()) throw std::out_of_range("state index");
  ProvenanceRecord rec;
  rec.step = in.step;
  rec.phase = in.step < config_.schedule.tau_e ? Phase::kAugmentation
                                               : Phase::kLearner;
  std::size_t action = 0;
  if (force_random_) {
    force_random_ = false;
    rec.source = ActionSource::kForcedRandom;
    action = rng.index(table_.actions());
  } else if (rec.phase == Phase::kAugmentation) {
    if (q_hat_) {
      rec.source = ActionSource::kAugmented;
      action = argmax_row(*q_hat_, in.state);
    } else {
      rec.source = ActionSource::kRandomFallback;
      action = rng.index(table_.actions());
    }
  } else {
    rec.source = ActionSource::kInner;
    action = inner_->select_action(in, rng);
  }
  provenance_.push_back(rec);
  return action;
}

void PolicyAugmentedAgent::observe(const StepFeedback& feedback, Rng& rng) {
  inner_->observe(feedback, rng);
  const bool solved = augmentation_step(feedback.step, feedback.indexed, rng);
  if (solved && !provenance_.empty() && provenance_.back().step == feedback.step) {
    provenance_.back().solver_invoked = true;
  }
}

bool PolicyAugmentedAgent::augmentation_step(long step,
                                             const IndexedTransition& t,
                                             Rng& rng) {
  last_step_ = step;
  table_.update(t);
  const auto& s = config_.schedule;
  if (step >= s.tau_q || (step + 1) % s.solve_period != 0) return false;

  SolveDiagnostic diag;
  diag.step = step;
  const auto frac = table_.observed_fraction(side_.state_dim(), side_.action_dim());
  diag.observed_fraction = frac.fraction;
  diag.identifiable = frac.identifiable;
  try {
    SolveResult r = solve(table_.normalize(), side_, factors_, config_.imc, rng);
    diag.iterations = r.augmented.iterations;
    diag.initial_cost = r.augmented.initial_cost;
    diag.final_cost = r.augmented.final_cost;
    diag.converged = r.augmented.converged;
    diag.trace = std::move(r.augmented.trace);
    q_hat_ = std::move(r.augmented.q_hat);
    factors_ = std::move(r.factors);
  } catch (const SolverDivergence& e) {
    // Keep the previous completion.
    diag.diverged = true;
    diag.error = e.what();
  }
  solves_.push_back(std::move(diag));
  return true;
}

void PolicyAugmentedAgent::end_episode(double cumulative_reward) {
  inner_->end_episode(cumulative_reward);
  episode_rewards_.push_back(cumulative_reward);
  if (reset_done_ ||
      episode_rewards_.size() !=
          static_cast<std::size_t>(config_.schedule.reset_window)) {
    return;
  }
  if (reset_check(episode_rewards_, config_.schedule) == ResetDecision::kReset) {
    apply_reset();
  }
}

void PolicyAugmentedAgent::apply_reset() {
  reset_done_ = true;
  table_.reset();
  factors_.reset();
  q_hat_.reset();
  force_random_ = true;
  reset_steps_.push_back(last_step_ + 1);
}

// ---------------------------------------------------------------------------

namespace {

MlpConfig fitted(MlpConfig net, EnvId env) {
  net.input_width = observation_dim(env);
  net.output_width = num_actions(env);
  return net;
}

std::unique_ptr<Agent> make_inner(const std::variant<EpsilonGreedySpec, DqnSpec>& spec,
                                  EnvId env, const GridSpec& grid,
                                  Rng& init_rng) {
  if (const auto* e = std::get_if<EpsilonGreedySpec>(&spec)) {
    return std::make_unique<EpsilonGreedyAgent>(grid.size(), num_actions(env),
                                                e->q, e->epsilon);
  }
  return std::make_unique<DqnAgent>(fitted(std::get<DqnSpec>(spec).net, env),
                                    init_rng);
}

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentKind& kind, EnvId env,
                                  const GridSpec& grid, const SideInfo& side,
                                  Rng& init_rng) {
  if (static_cast<std::size_t>(side.x.rows()) != grid.size() ||
      static_cast<std::size_t>(side.y.rows()) != num_actions(env)) {
    throw std::invalid_argument("side information does not match grid/env");
  }
  return std::visit(
      [&](const auto& spec) -> std::unique_ptr<Agent> {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, PolicyAugmentedSpec>) {
          return std::make_unique<PolicyAugmentedAgent>(
              side, spec.config, make_inner(spec.inner, env, grid, init_rng));
        } else if constexpr (std::is_same_v<T, EpsilonGreedySpec>) {
          return std::make_unique<EpsilonGreedyAgent>(
              grid.size(), num_actions(env), spec.q, spec.epsilon);
        } else if constexpr (std::is_same_v<T, CountBonusSpec>) {
          return std::make_unique<CountBonusAgent>(
              grid.size(), num_actions(env), spec.q, spec.epsilon, spec.beta);
        } else {
          return std::make_unique<DqnAgent>(fitted(spec.net, env), init_rng);
        }
      },
      kind);
}

}  // namespace paug
