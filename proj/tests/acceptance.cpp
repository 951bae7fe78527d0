// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Usage: acceptance [path-to-paug-cli] [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "oracles.hpp"
#include "paug/harness.hpp"

using namespace paug;
using Eigen::MatrixXd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel_diff(const MatrixXd& a, const MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) /
                                std::max(1.0, std::abs(b.data()[i])));
  }
  return worst;
}

// 1. update_u / update_v against the elementwise oracle.
Outcome imc_oracle() {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> dim(1, 8), rank(1, 4), rows(3, 12);
  std::normal_distribution<> n(0, 1);
  std::uniform_real_distribution<> u(0, 1);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int m = dim(gen), nn = dim(gen), r = std::min({rank(gen), m, nn});
    const int M = rows(gen), N = rows(gen);
    const MatrixXd x = oracle::random(M, m, gen, n), y = oracle::random(N, nn, gen, n);
    const MatrixXd mask = oracle::random(M, N, gen, u).unaryExpr(
        [](double v) { return v < 0.5 ? 1.0 : 0.0; });
    const MatrixXd q = oracle::random(M, N, gen, n).cwiseProduct(mask);
    const FactorPair f{oracle::random(m, r, gen, u), oracle::random(nn, r, gen, u)};
    const FactorPair anchor{oracle::random(m, r, gen, n), oracle::random(nn, r, gen, n)};
    const double lu = 2 * u(gen), lv = 2 * u(gen);
    const MaskedMatrix mq{q, mask};
    const SideInfo side{x, y};
    for (ResidualMode mode : {ResidualMode::kZeroFill, ResidualMode::kMasked}) {
      const bool masked = mode == ResidualMode::kMasked;
      worst = std::max(worst, rel_diff(update_u(mq, side, f, anchor, lu, 1e-8, mode),
                                       oracle::update_u(q, mask, x, y, f.u, f.v, anchor.u,
                                                        lu, 1e-8, masked)));
      worst = std::max(worst, rel_diff(update_v(mq, side, f, anchor, lv, 1e-8, mode),
                                       oracle::update_v(q, mask, x, y, f.u, f.v, anchor.v,
                                                        lv, 1e-8, masked)));
    }
  }
  return {worst <= 1e-12, fmt("max relative deviation %.3g over 100 instances", worst)};
}

// 2. Fully observed planted rank-1 model, zero anchors.
Outcome exact_recovery() {
  int ok = 0;
  double worst_err = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const planted::Instance in = planted::exact_rank_one(seed);
    ImcConfig cfg;
    cfg.lambda_u = cfg.lambda_v = 0;
    Rng rng(seed);
    const auto r = solve(MaskedMatrix::fully_observed(in.q), {in.x, in.y},
                         std::nullopt, cfg, rng);
    const double err = (r.augmented.q_hat - in.q).norm() / in.q.norm();
    worst_err = std::max(worst_err, err);
    ok += r.augmented.final_cost <= 1e-6 * r.augmented.initial_cost && err <= 1e-3;
  }
  return {ok >= 9, fmt("%g/10 seeds recovered, worst relative error %.3g", ok, worst_err)};
}

// 3. Planted rank-2 model, 40% observed.
Outcome partial_recovery() {
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const planted::Instance in = planted::partial_rank_two(seed);
    ImcConfig cfg;
    cfg.rank = 2;
    Rng rng(seed);
    const auto r = solve(MaskedMatrix::observe(in.q, in.mask), {in.x, in.y},
                         std::nullopt, cfg, rng);
    const MatrixXd un = (1.0 - in.mask.array()).matrix();
    const double err = (r.augmented.q_hat - in.q).cwiseProduct(un).norm() /
                       in.q.cwiseProduct(un).norm();
    worst = std::max(worst, err);
    ok += err <= 0.05;
  }
  return {ok >= 9, fmt("%g/10 seeds within 0.05 on unobserved entries, worst %.3g", ok, worst)};
}

EnvState state_of(EnvId env, std::initializer_list<double> v) {
  EnvState s;
  s.dim = observation_dim(env);
  std::size_t i = 0;
  for (double x : v) s.values[i++] = x;
  return s;
}

// 4. Dynamics against the reference physics.
Outcome dynamics() {
  Rng rng(77);
  double worst = 0.0;
  int flag_mismatch = 0;
  const auto mc = EnvConfig::mountain_car();
  for (int k = 0; k < 1000; ++k) {
    const double p = rng.uniform(-1.2, 0.6), v = rng.uniform(-0.07, 0.07);
    const auto a = static_cast<int>(rng.index(3));
    const Transition t = step(state_of(EnvId::kMountainCar, {p, v}), a, mc);
    const auto ref = oracle::mountain_car(p, v, a);
    worst = std::max({worst, std::abs(t.next_state[0] - ref.position),
                      std::abs(t.next_state[1] - ref.velocity)});
    flag_mismatch += t.done != ref.at_goal;
  }
  const auto cp = EnvConfig::cart_pole();
  for (int k = 0; k < 1000; ++k) {
    const std::array<double, 4> s{rng.uniform(-2.4, 2.4), rng.uniform(-3, 3),
                                  rng.uniform(-0.21, 0.21), rng.uniform(-3, 3)};
    const auto a = static_cast<int>(rng.index(2));
    const Transition t = step(state_of(EnvId::kCartPole, {s[0], s[1], s[2], s[3]}), a, cp);
    const auto ref = oracle::cart_pole(s, a);
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(t.next_state[i] - ref[i]));
    flag_mismatch += t.done != oracle::cart_pole_failed(ref);
  }
  return {worst <= 1e-12 && flag_mismatch == 0,
          fmt("max abs deviation %.3g, %g termination mismatches over 2x1000 steps",
              worst, flag_mismatch)};
}

// 5. Q-learning update against direct evaluation of the rule.
Outcome q_learning() {
  Rng rng(5);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double alpha = rng.uniform(0.01, 1.0), gamma = rng.uniform(0.0, 0.999);
    QTable t(6, 3, QParams{alpha, gamma});
    for (int w = 0; w < 8; ++w) {
      t.update({rng.index(6), rng.index(3), rng.uniform(-5, 5), 0, true});
    }
    const IndexedTransition tr{rng.index(6), rng.index(3), rng.uniform(-2, 2),
                               rng.index(6), rng.uniform() < 0.2};
    double best = t.value(tr.next_state, 0);
    for (std::size_t a = 1; a < 3; ++a) best = std::max(best, t.value(tr.next_state, a));
    const double want = oracle::q_learning(t.value(tr.state, tr.action), tr.reward,
                                           best, alpha, gamma, tr.done);
    t.update(tr);
    worst = std::max(worst, std::abs(t.value(tr.state, tr.action) - want));
  }
  return {worst <= 1e-12, fmt("max abs deviation %.3g over 10^4 cases", worst)};
}

// 6. Backprop against central differences on a width-4 network.
Outcome dqn_gradient() {
  Rng rng(6);
  Mlp online(4, 4, 2, rng), target(4, 4, 2, rng);
  std::vector<Experience> batch;
  for (int k = 0; k < 16; ++k) {
    Experience e;
    e.dim = 4;
    for (std::size_t d = 0; d < 4; ++d) {
      e.observation[d] = rng.uniform(-1, 1);
      e.next_observation[d] = rng.uniform(-1, 1);
    }
    e.action = rng.index(2);
    e.reward = rng.uniform(-1, 1);
    e.done = k % 4 == 0;
    batch.push_back(e);
  }
  MlpGradient g;
  td_loss(online, target, batch, 0.99, &g);
  std::vector<double> analytic;
  for (const auto* m : {&g.w1, &g.w2}) analytic.insert(analytic.end(), m->data(), m->data() + m->size());
  for (const auto* v : {&g.b1, &g.b2}) analytic.insert(analytic.end(), v->data(), v->data() + v->size());
  const auto params = online.parameters();
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = *params[i];
    *params[i] = keep + h;
    const double up = td_loss(online, target, batch, 0.99);
    *params[i] = keep - h;
    const double down = td_loss(online, target, batch, 0.99);
    *params[i] = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic[i]) /
                                std::max({std::abs(fd), std::abs(analytic[i]), 1e-8}));
  }
  return {worst <= 1e-4 && params.size() == analytic.size(),
          fmt("max relative error %.3g over %g weights", worst, params.size())};
}

ExperimentConfig benchmark(EnvId env, AgentName agent, int episodes) {
  ExperimentConfig c = ExperimentConfig::defaults(env, agent);
  c.repetitions = 10;
  c.episodes = episodes;
  c.base_seed = 0;
  c.imc.record_trace = false;
  return c;
}

int flag_seeds(const std::vector<RunRecord>& recs, int within) {
  int seeds = 0;
  for (const RunRecord& r : recs) {
    bool hit = false;
    for (int e = 0; e < within && e < static_cast<int>(r.goal_reached.size()); ++e) {
      hit = hit || r.goal_reached[static_cast<std::size_t>(e)];
    }
    seeds += hit;
  }
  return seeds;
}

bool any_error(const std::vector<RunRecord>& recs) {
  for (const RunRecord& r : recs) {
    if (r.error) {
      std::cerr << "  repetition " << r.repetition << ": " << *r.error << '\n';
      return true;
    }
  }
  return false;
}

// 7. MountainCar: flag reached early with augmentation, rarely without.
Outcome mountain_car_early() {
  const auto paug = run_experiment(benchmark(EnvId::kMountainCar, AgentName::kPaugQ, 100));
  const auto eps = run_experiment(benchmark(EnvId::kMountainCar, AgentName::kEps, 100));
  const int p = flag_seeds(paug, 50), e = flag_seeds(eps, 50);
  return {!any_error(paug) && !any_error(eps) && p >= 8 && e <= 3,
          fmt("flag within 50 episodes: paug-q %g/10 seeds, eps %g/10 seeds", p, e)};
}

double early_mean(const std::vector<RunRecord>& recs, int episodes) {
  double total = 0.0;
  for (const RunRecord& r : recs)
    for (int e = 0; e < episodes; ++e) total += r.episode_rewards.at(static_cast<std::size_t>(e));
  return total / (static_cast<double>(recs.size()) * episodes);
}

// 8. CartPole: early mean reward at least 20% above epsilon-greedy.
Outcome cart_pole_early() {
  const auto paug = run_experiment(benchmark(EnvId::kCartPole, AgentName::kPaugQ, 50));
  const auto eps = run_experiment(benchmark(EnvId::kCartPole, AgentName::kEps, 50));
  if (any_error(paug) || any_error(eps)) return {false, "repetition failed"};
  const double p = early_mean(paug, 50), e = early_mean(eps, 50);
  return {p >= 1.2 * e, fmt("mean over 50 episodes: paug-q %.3f, eps %.3f, ratio %.3f", p, e, p / e)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Two CLI invocations write identical curves.csv.
Outcome cli_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "CLI path not given"};
  const fs::path base = fs::temp_directory_path() / "paug_acceptance_cli";
  fs::remove_all(base);
  std::string files[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path out = base / ("run" + std::to_string(k));
    const std::string cmd = "\"" + cli + "\" run --env mountaincar --agent paug-q "
                            "--episodes 30 --reps 4 --seed 11 --out \"" + out.string() +
                            "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI invocation failed"};
    files[k] = slurp(out / "curves.csv");
  }
  fs::remove_all(base);
  const bool same = !files[0].empty() && files[0] == files[1];
  return {same, fmt("curves.csv of %g bytes, %s", static_cast<double>(files[0].size())) +
                    (same ? "bit-identical" : "DIFFERENT")};
}

// 10. Invariant suite.
Outcome invariants() {
  std::vector<std::string> failed;

  {  // Sign preservation and zero absorption on non-negative instances.
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<> u(0.1, 1.0), c(0, 1);
    bool ok = true;
    for (int k = 0; k < 50 && ok; ++k) {
      const MatrixXd x = oracle::random(15, 3, gen, u), y = oracle::random(6, 2, gen, u);
      const MatrixXd mask = oracle::random(15, 6, gen, c).unaryExpr(
          [](double v) { return v < 0.5 ? 1.0 : 0.0; });
      const MaskedMatrix q = MaskedMatrix::observe(oracle::random(15, 6, gen, u), mask);
      FactorPair f{oracle::random(3, 2, gen, u), oracle::random(2, 2, gen, u)};
      f.u(2, 1) = 0.0;
      f.v(1, 0) = 0.0;
      const FactorPair anchor = FactorPair::zeros(3, 2, 2);
      for (int it = 0; it < 25; ++it) {
        f.u = update_u(q, {x, y}, f, anchor, 1, 1e-8, ResidualMode::kMasked);
        f.v = update_v(q, {x, y}, f, anchor, 1, 1e-8, ResidualMode::kMasked);
        ok = ok && f.u(2, 1) == 0.0 && f.v(1, 0) == 0.0 && (f.u.array() >= 0).all() &&
             (f.v.array() >= 0).all() && (f.u.array() != 0).count() == 5 &&
             (f.v.array() != 0).count() == 3;
      }
    }
    if (!ok) failed.push_back("sign preservation / zero absorption");
  }

  {  // Projection distance of identical orthonormal factors.
    std::mt19937_64 gen(11);
    bool ok = true;
    for (int r = 1; r <= 4; ++r) {
      const MatrixXd a = oracle::orthonormal(8, r, gen);
      ok = ok && std::abs(projection_distance(a, a)) <= 1e-12;
    }
    if (!ok) failed.push_back("projection distance of identical factors");
  }

  {  // Augmented action choice under positive scaling of Q-hat, and a full
     // run whose provenance must follow the schedule exactly.
    ExperimentConfig cfg = ExperimentConfig::defaults(EnvId::kMountainCar, AgentName::kPaugQ);
    const SideInfo side = make_side_info(cfg.env, cfg.grid);
    Rng rng(21);
    auto owned = make_agent(cfg.agent_kind(), cfg.env, cfg.grid, side, rng);
    auto& agent = dynamic_cast<PolicyAugmentedAgent&>(*owned);
    Environment env(EnvConfig::mountain_car(21));
    long t = 0;
    bool scale_ok = true;
    std::size_t checked = 0;
    // 150 capped episodes run past tau_e into the learner phase.
    for (int ep = 0; ep < 150; ++ep) {
      env.reset();
      double total = 0.0;
      for (;;) {
        const auto obs = env.state().observation();
        const std::size_t s = state_index(obs, cfg.grid);
        const std::size_t a = agent.select_action({t, s, obs}, rng);
        if (agent.provenance().back().source == ActionSource::kAugmented) {
          for (double c : {1e-3, 0.25, 7.0, 1e4}) {
            scale_ok = scale_ok && argmax_row(*agent.augmented() * c, s) == a;
          }
          ++checked;
        }
        const Transition tr = env.step(a);
        agent.observe({t, &tr, {s, a, tr.reward, state_index(tr.next_state.observation(), cfg.grid), tr.done}},
                      rng);
        total += tr.reward;
        ++t;
        if (tr.done) break;
      }
      agent.end_episode(total);
    }
    if (!scale_ok || checked == 0) failed.push_back("argmax invariance under scaling");
    const long bad = checks::provenance_mismatches(agent.provenance(), agent.solves(),
                                                   agent.reset_steps(), cfg.schedule);
    if (bad != 0 || t <= cfg.schedule.tau_e ||
        agent.provenance().size() != static_cast<std::size_t>(t)) {
      failed.push_back("schedule provenance (" + std::to_string(bad) + " mismatches)");
    }
  }

  {  // Observed set never shrinks between resets.
    Rng rng(12);
    QTable table(252, 3);
    std::size_t last = 0;
    bool ok = true;
    for (int k = 0; k < 20000; ++k) {
      table.update({rng.index(252), rng.index(3), rng.uniform(-1, 1), rng.index(252),
                    rng.uniform() < 0.05});
      ok = ok && table.observed_count() >= last;
      last = table.observed_count();
    }
    if (!ok) failed.push_back("observed-set monotonicity");
  }

  std::string detail = "5 invariant groups";
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "IMC oracle equivalence", 5, imc_oracle},
      {2, "exact recovery", 10, exact_recovery},
      {3, "partial-observation recovery", 30, partial_recovery},
      {4, "dynamics oracle", 0, dynamics},
      {5, "Q-learning oracle", 0, q_learning},
      {6, "DQN gradient check", 0, dqn_gradient},
      {7, "MountainCar early-episode superiority", 300, mountain_car_early},
      {8, "CartPole directional check", 300, cart_pole_early},
      {9, "CLI determinism", 0, [&cli] { return cli_determinism(cli); }},
      {10, "invariant suite", 0, invariants},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = fmt("%.2fs", secs);
    if (c.limit_seconds > 0) {
      timing += fmt(" (limit %gs)", c.limit_seconds);
      if (secs >= c.limit_seconds) pass = false;
    }
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name
              << " | " << o.detail << " | " << timing << std::endl;
    failures += pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
