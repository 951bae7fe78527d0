#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paug/agents.hpp"
#include "paug/discretize.hpp"
#include "paug/envs.hpp"
#include "paug/imc.hpp"

namespace paug {

enum class AgentName { kPaugQ, kPaugDqn, kEps, kCount, kDqn };

AgentName parse_agent_name(std::string_view name);
std::string_view to_string(AgentName name);

struct ExperimentConfig {
  EnvId env = EnvId::kMountainCar;
  AgentName agent = AgentName::kPaugQ;
  ScheduleConfig schedule;
  GridSpec grid;
  ImcConfig imc;
  QParams q;
  EpsilonSchedule epsilon;
  double count_beta = 0.1;
  MlpConfig dqn;
  double action_epsilon = 1.0;  // MountainCar action-feature offset
  int repetitions = 10;
  int episodes = 100;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir = "out";
  int threads = 0;  // 0: one per hardware thread
  bool record_provenance = false;

  static ExperimentConfig defaults(EnvId env, AgentName agent);

  AgentKind agent_kind() const;
  std::uint64_t repetition_seed(int repetition) const {
    return base_seed + static_cast<std::uint64_t>(repetition);
  }
  void validate() const;
};

using Settings = std::map<std::string, std::string>;

// Flat "key = value" lines; '#' starts a comment.
Settings parse_settings(std::istream& in);
Settings load_settings(const std::filesystem::path& path);

// Builds a config from env/agent defaults and then applies every other key.
// Throws std::invalid_argument on unknown keys or bad values.
ExperimentConfig resolve_config(const Settings& settings);

// Fully resolved config in the same key = value format.
std::string describe(const ExperimentConfig& config);

struct RunRecord {
  int repetition = 0;
  std::uint64_t seed = 0;
  std::vector<double> episode_rewards;
  std::vector<int> episode_steps;
  std::vector<bool> goal_reached;
  std::vector<long> reset_steps;
  std::vector<SolveDiagnostic> solves;
  std::vector<ProvenanceRecord> provenance;
  long total_steps = 0;
  std::optional<std::string> error;
};

RunRecord run_repetition(const ExperimentConfig& config, int repetition);

// Runs every repetition (concurrently when threads != 1); the result is
// ordered by repetition index and does not depend on scheduling.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

struct Summary {
  std::vector<double> mean;
  std::vector<double> stddev;  // sample (n - 1); 0 for a single repetition
};

Summary summarize(std::span<const RunRecord> records);

// curves.csv: "episode,mean,std,rep0,rep1,...", values as %#.6g.
void write_curves(std::ostream& out, const Summary& summary,
                  std::span<const RunRecord> records);
void emit_csv(const Summary& summary, std::span<const RunRecord> records,
              const std::filesystem::path& path);

struct LabeledSummary {
  std::string label;
  Summary summary;
};

// Mean line with a +/- one standard deviation band per curve.
void write_plot(std::ostream& out, std::span<const LabeledSummary> curves);
void emit_plot(std::span<const LabeledSummary> curves,
               const std::filesystem::path& path);

void write_solver_log(std::ostream& out, std::span<const RunRecord> records);
void write_provenance(std::ostream& out, const RunRecord& record);

std::string build_identifier();

// Runs the experiment and writes curves.csv, plot.svg, meta.txt and
// solver.log into config.output_dir. `compare` adds an overlay curve to the
// plot and writes its table to compare_curves.csv.
struct ExperimentOutput {
  std::vector<RunRecord> records;
  Summary summary;
};

ExperimentOutput run_and_write(const ExperimentConfig& config,
                               const std::optional<ExperimentConfig>& compare);

}  // namespace paug
