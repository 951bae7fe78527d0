#include "paug/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace paug {

namespace fs = std::filesystem;

AgentName parse_agent_name(std::string_view name) {
  if (name == "paug-q") return AgentName::kPaugQ;
  if (name == "paug-dqn") return AgentName::kPaugDqn;
  if (name == "eps") return AgentName::kEps;
  if (name == "count") return AgentName::kCount;
  if (name == "dqn") return AgentName::kDqn;
  throw std::invalid_argument("unknown agent: " + std::string(name));
}

std::string_view to_string(AgentName name) {
  switch (name) {
    case AgentName::kPaugQ:
      return "paug-q";
    case AgentName::kPaugDqn:
      return "paug-dqn";
    case AgentName::kEps:
      return "eps";
    case AgentName::kCount:
      return "count";
    case AgentName::kDqn:
      return "dqn";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::defaults(EnvId env, AgentName agent) {
  ExperimentConfig c;
  c.env = env;
  c.agent = agent;
  c.schedule = ScheduleConfig::defaults(env);
  c.grid = default_grid(env);
  c.imc.record_trace = true;
  c.dqn.input_width = observation_dim(env);
  c.dqn.output_width = num_actions(env);
  return c;
}

AgentKind ExperimentConfig::agent_kind() const {
  const EpsilonGreedySpec eps{q, epsilon};
  const DqnSpec dqn_spec{dqn};
  PolicyAugmentationConfig pa{schedule, imc, q};
  switch (agent) {
    case AgentName::kPaugQ:
      return PolicyAugmentedSpec{pa, eps};
    case AgentName::kPaugDqn:
      return PolicyAugmentedSpec{pa, dqn_spec};
    case AgentName::kEps:
      return eps;
    case AgentName::kCount:
      return CountBonusSpec{q, epsilon, count_beta};
    case AgentName::kDqn:
      return dqn_spec;
  }
  throw std::logic_error("unhandled agent name");
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (grid.dims() != observation_dim(env)) {
    throw std::invalid_argument("grid dimension does not match the env");
  }
  q.validate();
  imc.validate();
  dqn.validate();
  if (agent == AgentName::kPaugQ || agent == AgentName::kPaugDqn) {
    schedule.validate();
  }
}

// ---------------------------------------------------------------------------
// Settings

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  if (!(in >> out) || !(in >> std::ws).eof()) {
    throw std::invalid_argument("bad value for '" + key + "': '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("bad boolean for '" + key + "': '" + value + "'");
}

ResidualMode parse_residual(const std::string& value) {
  if (value == "masked") return ResidualMode::kMasked;
  if (value == "zero-fill") return ResidualMode::kZeroFill;
  throw std::invalid_argument("residual must be masked or zero-fill");
}

std::string_view to_string(ResidualMode m) {
  return m == ResidualMode::kMasked ? "masked" : "zero-fill";
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply_setting(ExperimentConfig& c, const std::string& key,
                   const std::string& value) {
  auto d = [&] { return parse_number<double>(key, value); };
  auto l = [&] { return parse_number<long>(key, value); };
  auto i = [&] { return parse_number<int>(key, value); };
  auto z = [&] { return parse_number<std::size_t>(key, value); };

  if (key == "env" || key == "agent") return;  // consumed by defaults
  if (key == "episodes") c.episodes = i();
  else if (key == "reps") c.repetitions = i();
  else if (key == "seed") c.base_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "out") c.output_dir = value;
  else if (key == "threads") c.threads = i();
  else if (key == "provenance") c.record_provenance = parse_bool(key, value);
  else if (key == "tau") c.schedule.total_steps = l();
  else if (key == "tau-e") c.schedule.tau_e = l();
  else if (key == "tau-q") c.schedule.tau_q = l();
  else if (key == "solve-period") c.schedule.solve_period = l();
  else if (key == "reset-threshold") c.schedule.reset_threshold = d();
  else if (key == "reset-window") c.schedule.reset_window = i();
  else if (key == "rank") c.imc.rank = z();
  else if (key == "lambda-u") c.imc.lambda_u = d();
  else if (key == "lambda-v") c.imc.lambda_v = d();
  else if (key == "max-iterations") c.imc.max_iterations = i();
  else if (key == "tolerance") c.imc.tolerance = d();
  else if (key == "denominator-guard") c.imc.denominator_guard = d();
  else if (key == "residual") c.imc.residual = parse_residual(value);
  else if (key == "rebalance") c.imc.rebalance = parse_bool(key, value);
  else if (key == "solver-trace") c.imc.record_trace = parse_bool(key, value);
  else if (key == "alpha") c.q.alpha = d();
  else if (key == "gamma") {
    c.q.gamma = d();
    c.dqn.gamma = c.q.gamma;
  }
  else if (key == "epsilon-start") c.epsilon.start = d();
  else if (key == "epsilon-end") c.epsilon.end = d();
  else if (key == "epsilon-decay") c.epsilon.decay_steps = l();
  else if (key == "beta") c.count_beta = d();
  else if (key == "action-epsilon") c.action_epsilon = d();
  else if (key == "grid") c.grid = parse_grid(value);
  else if (key == "hidden") c.dqn.hidden_width = z();
  else if (key == "learning-rate") c.dqn.learning_rate = d();
  else if (key == "batch") c.dqn.batch_size = z();
  else if (key == "replay") c.dqn.replay_capacity = z();
  else if (key == "target-sync") c.dqn.target_sync_period = l();
  else if (key == "warmup") c.dqn.warmup = z();
  else throw std::invalid_argument("unknown setting: " + key);
}

}  // namespace

Settings parse_settings(std::istream& in) {
  Settings out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    out[trim(std::string_view(body).substr(0, eq))] =
        trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

Settings load_settings(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_settings(in);
}

ExperimentConfig resolve_config(const Settings& settings) {
  const auto env_it = settings.find("env");
  const auto agent_it = settings.find("agent");
  if (env_it == settings.end()) throw std::invalid_argument("missing setting: env");
  if (agent_it == settings.end()) {
    throw std::invalid_argument("missing setting: agent");
  }
  ExperimentConfig c = ExperimentConfig::defaults(parse_env_id(env_it->second),
                                                  parse_agent_name(agent_it->second));
  for (const auto& [key, value] : settings) apply_setting(c, key, value);
  c.validate();
  return c;
}

std::string describe(const ExperimentConfig& c) {
  std::ostringstream o;
  auto kv = [&o](std::string_view k, const auto& v) { o << k << " = " << v << '\n'; };
  kv("env", to_string(c.env));
  kv("agent", to_string(c.agent));
  kv("episodes", c.episodes);
  kv("reps", c.repetitions);
  kv("seed", c.base_seed);
  kv("out", c.output_dir.string());
  kv("tau", c.schedule.total_steps);
  kv("tau-e", c.schedule.tau_e);
  kv("tau-q", c.schedule.tau_q);
  kv("solve-period", c.schedule.solve_period);
  kv("reset-threshold", number(c.schedule.reset_threshold));
  kv("reset-window", c.schedule.reset_window);
  kv("rank", c.imc.rank);
  kv("lambda-u", number(c.imc.lambda_u));
  kv("lambda-v", number(c.imc.lambda_v));
  kv("max-iterations", c.imc.max_iterations);
  kv("tolerance", number(c.imc.tolerance));
  kv("denominator-guard", number(c.imc.denominator_guard));
  kv("residual", to_string(c.imc.residual));
  kv("rebalance", c.imc.rebalance ? "true" : "false");
  kv("solver-trace", c.imc.record_trace ? "true" : "false");
  kv("alpha", number(c.q.alpha));
  kv("gamma", number(c.q.gamma));
  kv("epsilon-start", number(c.epsilon.start));
  kv("epsilon-end", number(c.epsilon.end));
  kv("epsilon-decay", c.epsilon.decay_steps);
  kv("beta", number(c.count_beta));
  kv("action-epsilon", number(c.action_epsilon));
  kv("grid", format_grid(c.grid));
  kv("hidden", c.dqn.hidden_width);
  kv("learning-rate", number(c.dqn.learning_rate));
  kv("batch", c.dqn.batch_size);
  kv("replay", c.dqn.replay_capacity);
  kv("target-sync", c.dqn.target_sync_period);
  kv("warmup", c.dqn.warmup);
  return o.str();
}

// ---------------------------------------------------------------------------
// Running

namespace {

double expected_return(const EnvConfig& env, int steps, bool goal) {
  if (env.env == EnvId::kCartPole) return env.step_reward * steps;
  return env.step_reward * (goal ? steps - 1 : steps) +
         (goal ? env.goal_reward : 0.0);
}

}  // namespace

RunRecord run_repetition(const ExperimentConfig& config, int repetition) {
  RunRecord rec;
  rec.repetition = repetition;
  rec.seed = config.repetition_seed(repetition);
  try {
    const EnvConfig env_config =
        EnvConfig::for_env(config.env, mix_seed(rec.seed, 0));
    Environment env(env_config);
    Rng agent_rng(mix_seed(rec.seed, 1));
    const SideInfo side =
        make_side_info(config.env, config.grid, config.action_epsilon);
    auto agent = make_agent(config.agent_kind(), config.env, config.grid, side,
                            agent_rng);

    long t = 0;
    for (int ep = 0; ep < config.episodes && t < config.schedule.total_steps;
         ++ep) {
      env.reset();
      double cumulative = 0.0;
      int steps = 0;
      bool goal = false;
      for (;;) {
        const std::span<const double> obs = env.state().observation();
        const std::size_t s = state_index(obs, config.grid);
        const std::size_t a = agent->select_action({t, s, obs}, agent_rng);
        const Transition tr = env.step(a);
        const IndexedTransition indexed{
            s, a, tr.reward, state_index(tr.next_state.observation(), config.grid),
            tr.done};
        agent->observe({t, &tr, indexed}, agent_rng);
        cumulative += tr.reward;
        goal = goal || tr.reached_goal;
        ++steps;
        ++t;
        if (tr.done) break;
      }
      if (cumulative != expected_return(env_config, steps, goal)) {
        throw std::logic_error("episode reward does not match env accounting");
      }
      agent->end_episode(cumulative);
      rec.episode_rewards.push_back(cumulative);
      rec.episode_steps.push_back(steps);
      rec.goal_reached.push_back(goal);
    }
    rec.total_steps = t;

    if (const auto* pa = dynamic_cast<const PolicyAugmentedAgent*>(agent.get())) {
      rec.solves = pa->solves();
      rec.reset_steps = pa->reset_steps();
      if (config.record_provenance) rec.provenance = pa->provenance();
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto reps = static_cast<std::size_t>(config.repetitions);
  std::vector<RunRecord> records(reps);
  unsigned workers = config.threads > 0
                         ? static_cast<unsigned>(config.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      records[r] = run_repetition(config, static_cast<int>(r));
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return records;
}

Summary summarize(std::span<const RunRecord> records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  const std::size_t episodes = records.front().episode_rewards.size();
  for (const RunRecord& r : records) {
    if (r.episode_rewards.size() != episodes) {
      throw std::invalid_argument("summarize: records have unequal episode counts");
    }
  }
  Summary s;
  s.mean.assign(episodes, 0.0);
  s.stddev.assign(episodes, 0.0);
  const auto n = static_cast<double>(records.size());
  for (std::size_t e = 0; e < episodes; ++e) {
    double sum = 0.0;
    for (const RunRecord& r : records) sum += r.episode_rewards[e];
    const double mean = sum / n;
    double ss = 0.0;
    for (const RunRecord& r : records) {
      const double d = r.episode_rewards[e] - mean;
      ss += d * d;
    }
    s.mean[e] = mean;
    s.stddev[e] = records.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string sig6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%#.6g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (fs::exists(path)) {
    std::clog << "warning: overwriting " << path.string() << '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_curves(std::ostream& out, const Summary& summary,
                  std::span<const RunRecord> records) {
  out << "episode,mean,std";
  for (const RunRecord& r : records) out << ",rep" << r.repetition;
  out << '\n';
  for (std::size_t e = 0; e < summary.mean.size(); ++e) {
    out << e << ',' << sig6(summary.mean[e]) << ',' << sig6(summary.stddev[e]);
    for (const RunRecord& r : records) out << ',' << sig6(r.episode_rewards.at(e));
    out << '\n';
  }
}

void emit_csv(const Summary& summary, std::span<const RunRecord> records,
              const fs::path& path) {
  std::ofstream out = open_output(path);
  write_curves(out, summary, records);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_plot(std::ostream& out, std::span<const LabeledSummary> curves) {
  constexpr double kWidth = 720, kHeight = 440;
  constexpr double kLeft = 80, kRight = 24, kTop = 24, kBottom = 56;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#9467bd", "#ff7f0e"};

  std::size_t episodes = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : curves) {
    episodes = std::max(episodes, c.summary.mean.size());
    for (std::size_t e = 0; e < c.summary.mean.size(); ++e) {
      lo = std::min(lo, c.summary.mean[e] - c.summary.stddev[e]);
      hi = std::max(hi, c.summary.mean[e] + c.summary.stddev[e]);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) lo -= 1.0, hi += 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double x_max = episodes > 1 ? static_cast<double>(episodes - 1) : 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double e) { return kLeft + plot_w * e / x_max; };
  auto py = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and ticks.
  out << "<g stroke=\"black\" fill=\"none\">\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
      << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kTop + plot_h << "\"/>\n</g>\n";
  out << "<g fill=\"black\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double e = x_max * k / 5.0;
    const double v = lo + (hi - lo) * k / 5.0;
    out << "<text x=\"" << f(px(e)) << "\" y=\"" << f(kTop + plot_h + 16)
        << "\" text-anchor=\"middle\">" << f(e) << "</text>\n";
    out << "<text x=\"" << f(kLeft - 6) << "\" y=\"" << f(py(v) + 4)
        << "\" text-anchor=\"end\">" << f(v) << "</text>\n";
  }
  out << "<text x=\"" << f(kLeft + plot_w / 2) << "\" y=\"" << f(kHeight - 14)
      << "\" text-anchor=\"middle\">episode</text>\n";
  out << "<text transform=\"translate(18 " << f(kTop + plot_h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">cumulative reward</text>\n";
  out << "</g>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = kColors[i % std::size(kColors)];
    const auto& mean = c.summary.mean;
    const auto& sd = c.summary.stddev;
    if (mean.empty()) continue;
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t e = 0; e < mean.size(); ++e) {
      out << f(px(static_cast<double>(e))) << ',' << f(py(mean[e] + sd[e])) << ' ';
    }
    for (std::size_t e = mean.size(); e-- > 0;) {
      out << f(px(static_cast<double>(e))) << ',' << f(py(mean[e] - sd[e])) << ' ';
    }
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t e = 0; e < mean.size(); ++e) {
      out << f(px(static_cast<double>(e))) << ',' << f(py(mean[e])) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(i);
    out << "<line x1=\"" << f(kLeft + plot_w - 130) << "\" y1=\"" << f(ly - 4)
        << "\" x2=\"" << f(kLeft + plot_w - 110) << "\" y2=\"" << f(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << f(kLeft + plot_w - 104) << "\" y=\"" << f(ly)
        << "\">" << c.label << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_plot(std::span<const LabeledSummary> curves, const fs::path& path) {
  std::ofstream out = open_output(path);
  write_plot(out, curves);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_solver_log(std::ostream& out, std::span<const RunRecord> records) {
  out << "# solve <rep> <step> <iterations> <initial_cost> <final_cost> "
         "<converged> <diverged> <observed_fraction> <identifiable>\n"
      << "# iter <rep> <step> <iteration> <cost> <distance_u> <distance_v>\n"
      << "# reset <rep> <step>\n";
  for (const RunRecord& r : records) {
    for (const SolveDiagnostic& d : r.solves) {
      out << "solve " << r.repetition << ' ' << d.step << ' ' << d.iterations
          << ' ' << number(d.initial_cost) << ' ' << number(d.final_cost) << ' '
          << d.converged << ' ' << d.diverged << ' '
          << number(d.observed_fraction) << ' ' << d.identifiable;
      if (!d.error.empty()) out << " # " << d.error;
      out << '\n';
      for (const IterationRecord& it : d.trace) {
        out << "iter " << r.repetition << ' ' << d.step << ' ' << it.iteration
            << ' ' << number(it.cost) << ' ' << number(it.distance_u) << ' '
            << number(it.distance_v) << '\n';
      }
    }
    for (long s : r.reset_steps) out << "reset " << r.repetition << ' ' << s << '\n';
    if (r.error) out << "error " << r.repetition << " # " << *r.error << '\n';
  }
}

void write_provenance(std::ostream& out, const RunRecord& record) {
  out << "step,phase,source,solver_invoked\n";
  for (const ProvenanceRecord& p : record.provenance) {
    out << p.step << ',' << to_string(p.phase) << ',' << to_string(p.source)
        << ',' << (p.solver_invoked ? 1 : 0) << '\n';
  }
}

std::string build_identifier() {
#ifndef PAUG_VERSION
#define PAUG_VERSION "dev"
#endif
  return std::string("paug ") + PAUG_VERSION + " (" +
#if defined(__clang__)
         "clang " __clang_version__
#elif defined(__GNUC__)
         "gcc " __VERSION__
#else
         "unknown compiler"
#endif
         + ")";
}

namespace {

std::vector<RunRecord> successful(const std::vector<RunRecord>& records) {
  std::vector<RunRecord> ok;
  for (const RunRecord& r : records) {
    if (r.error) {
      std::cerr << "repetition " << r.repetition << " failed: " << *r.error << '\n';
    } else {
      ok.push_back(r);
    }
  }
  if (ok.empty()) throw std::runtime_error("every repetition failed");
  return ok;
}

}  // namespace

ExperimentOutput run_and_write(const ExperimentConfig& config,
                               const std::optional<ExperimentConfig>& compare) {
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);

  ExperimentOutput result;
  result.records = run_experiment(config);
  const auto ok = successful(result.records);
  result.summary = summarize(ok);
  emit_csv(result.summary, ok, dir / "curves.csv");

  std::vector<LabeledSummary> curves{
      {std::string(to_string(config.agent)), result.summary}};
  if (compare) {
    const auto other = successful(run_experiment(*compare));
    const Summary s = summarize(other);
    emit_csv(s, other, dir / "compare_curves.csv");
    curves.push_back({std::string(to_string(compare->agent)), s});
  }
  emit_plot(curves, dir / "plot.svg");

  {
    std::ofstream meta = open_output(dir / "meta.txt");
    meta << "# build: " << build_identifier() << '\n' << describe(config);
    if (compare) meta << "# compare-agent: " << to_string(compare->agent) << '\n';
  }
  {
    std::ofstream log = open_output(dir / "solver.log");
    write_solver_log(log, result.records);
  }
  if (config.record_provenance) {
    for (const RunRecord& r : ok) {
      std::ofstream p = open_output(dir / ("provenance_rep" +
                                           std::to_string(r.repetition) + ".csv"));
      write_provenance(p, r);
    }
  }
  return result;
}

}  // namespace paug
