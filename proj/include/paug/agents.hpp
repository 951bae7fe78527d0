#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "paug/discretize.hpp"
#include "paug/dqn.hpp"
#include "paug/envs.hpp"
#include "paug/imc.hpp"
#include "paug/qcore.hpp"
#include "paug/rng.hpp"

namespace paug {

// Step horizons of the augmentation schedule. Actions come from the
// completed matrix while step < tau_e; the completion is refreshed every
// `solve_period` steps while step < tau_q.
struct ScheduleConfig {
  long total_steps = 2'500'000;  // tau
  long tau_e = 20'000;
  long tau_q = 10'000;
  long solve_period = 500;
  double reset_threshold = -199.5;
  int reset_window = 5;

  static ScheduleConfig defaults(EnvId env);
  void validate() const;
};

enum class Phase { kAugmentation, kLearner };
enum class ActionSource { kAugmented, kRandomFallback, kForcedRandom, kInner };

std::string_view to_string(Phase phase);
std::string_view to_string(ActionSource source);

struct ProvenanceRecord {
  long step = 0;
  Phase phase = Phase::kAugmentation;
  ActionSource source = ActionSource::kInner;
  bool solver_invoked = false;
};

struct SolveDiagnostic {
  long step = 0;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  bool diverged = false;
  double observed_fraction = 0.0;
  bool identifiable = false;
  std::vector<IterationRecord> trace;
  std::string error;
};

struct StepInput {
  long step = 0;        // global step counter t
  std::size_t state = 0;  // discretized state index
  std::span<const double> observation;
};

struct StepFeedback {
  long step = 0;
  const Transition* transition = nullptr;
  IndexedTransition indexed;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::size_t select_action(const StepInput& in, Rng& rng) = 0;
  virtual void observe(const StepFeedback& feedback, Rng& rng) = 0;
  virtual void end_episode(double /*cumulative_reward*/) {}
  virtual std::string_view name() const = 0;
};

// Tabular Q-learning with epsilon-greedy action selection.
class EpsilonGreedyAgent : public Agent {
 public:
  EpsilonGreedyAgent(std::size_t states, std::size_t actions, QParams q,
                     EpsilonSchedule epsilon);

  std::size_t select_action(const StepInput& in, Rng& rng) override;
  void observe(const StepFeedback& feedback, Rng& rng) override;
  std::string_view name() const override { return "eps"; }

  const QTable& table() const { return table_; }

 protected:
  virtual double shaped_reward(const IndexedTransition& t) { return t.reward; }

 private:
  QTable table_;
  EpsilonSchedule epsilon_;
};

// r + beta / sqrt(visits), visits counted after the current visit.
double count_bonus_reward(double reward, std::uint64_t visits, double beta);

// Epsilon-greedy Q-learning on count-bonus shaped rewards.
class CountBonusAgent : public EpsilonGreedyAgent {
 public:
  CountBonusAgent(std::size_t states, std::size_t actions, QParams q,
                  EpsilonSchedule epsilon, double beta);

  std::string_view name() const override { return "count"; }
  std::uint64_t visits(std::size_t state) const { return visits_.at(state); }

 protected:
  double shaped_reward(const IndexedTransition& t) override;

 private:
  double beta_;
  std::vector<std::uint64_t> visits_;
};

// Minimal DQN over raw observations.
class DqnAgent : public Agent {
 public:
  DqnAgent(MlpConfig config, Rng& init_rng);

  std::size_t select_action(const StepInput& in, Rng& rng) override;
  void observe(const StepFeedback& feedback, Rng& rng) override;
  std::string_view name() const override { return "dqn"; }

  // Store, then (past warm-up) one gradient step on a sampled batch and a
  // periodic target sync.
  void train_step(const Experience& e, Rng& rng);

  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }
  long updates() const { return updates_; }

 private:
  MlpConfig config_;
  Mlp online_;
  Mlp target_;
  Adam optimizer_;
  ReplayBuffer replay_;
  long stored_ = 0;
  long updates_ = 0;
};

enum class ResetDecision { kKeep, kReset };

// Reset when the mean cumulative reward of the first `reset_window` episodes
// falls below the threshold. Fewer episodes than the window: keep.
ResetDecision reset_check(std::span<const double> episode_rewards,
                          const ScheduleConfig& schedule);

struct PolicyAugmentationConfig {
  ScheduleConfig schedule;
  ImcConfig imc;
  QParams q;
};

// Takes argmax actions over the completed value matrix early in training and
// hands control to an inner learner afterwards. The inner learner sees every
// transition from step 0.
class PolicyAugmentedAgent : public Agent {
 public:
  PolicyAugmentedAgent(SideInfo side, PolicyAugmentationConfig config,
                       std::unique_ptr<Agent> inner);

  std::size_t select_action(const StepInput& in, Rng& rng) override;
  void observe(const StepFeedback& feedback, Rng& rng) override;
  void end_episode(double cumulative_reward) override;
  std::string_view name() const override { return name_; }

  // Tabular update, then a completion solve when the schedule calls for one.
  // Returns true when a solve was attempted.
  bool augmentation_step(long step, const IndexedTransition& t, Rng& rng);

  const QTable& table() const { return table_; }
  const std::optional<Eigen::MatrixXd>& augmented() const { return q_hat_; }
  const std::optional<FactorPair>& factors() const { return factors_; }
  const std::vector<ProvenanceRecord>& provenance() const { return provenance_; }
  const std::vector<SolveDiagnostic>& solves() const { return solves_; }
  const std::vector<long>& reset_steps() const { return reset_steps_; }
  const Agent& inner() const { return *inner_; }
  const PolicyAugmentationConfig& config() const { return config_; }

 private:
  void apply_reset();

  SideInfo side_;
  PolicyAugmentationConfig config_;
  std::unique_ptr<Agent> inner_;
  std::string name_;
  QTable table_;
  std::optional<FactorPair> factors_;
  std::optional<Eigen::MatrixXd> q_hat_;
  bool force_random_ = false;
  bool reset_done_ = false;
  long last_step_ = 0;
  std::vector<double> episode_rewards_;
  std::vector<ProvenanceRecord> provenance_;
  std::vector<SolveDiagnostic> solves_;
  std::vector<long> reset_steps_;
};

// Agent selection, one alternative per variant.
struct EpsilonGreedySpec {
  QParams q;
  EpsilonSchedule epsilon;
};

struct CountBonusSpec {
  QParams q;
  EpsilonSchedule epsilon;
  double beta = 0.1;
};

struct DqnSpec {
  MlpConfig net;
};

struct PolicyAugmentedSpec {
  PolicyAugmentationConfig config;
  std::variant<EpsilonGreedySpec, DqnSpec> inner;
};

using AgentKind =
    std::variant<PolicyAugmentedSpec, EpsilonGreedySpec, CountBonusSpec, DqnSpec>;

std::unique_ptr<Agent> make_agent(const AgentKind& kind, EnvId env,
                                  const GridSpec& grid, const SideInfo& side,
                                  Rng& init_rng);

}  // namespace paug
