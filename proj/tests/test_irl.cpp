#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "mfgirl/core.hpp"
#include "mfgirl/envs.hpp"
#include "mfgirl/irl.hpp"
#include "mfgirl/solver.hpp"

using namespace mfg;

namespace {

DemoSet demos_from_steps(std::vector<std::vector<std::vector<std::pair<int, int>>>> plays) {
  DemoSet demos;
  demos.horizon = static_cast<int>(plays[0][0].size());
  demos.n_agents = static_cast<int>(plays[0].size());
  for (auto& play : plays) {
    GamePlay gp;
    for (auto& steps : play) {
      Trajectory tau;
      tau.steps = std::move(steps);
      gp.agents.push_back(std::move(tau));
    }
    demos.plays.push_back(std::move(gp));
  }
  return demos;
}

/// Linear-core model whose reward is constant and whose potential is
/// constant: every weight zero, output biases set directly.
RewardModel constant_model(int ns, int na, double gamma, double r_bias, double g_bias) {
  std::mt19937_64 rng(0);
  RewardModel m = make_reward_model(ns, na, gamma, {}, 0.0, rng);
  m.omega.back() = r_bias;  // single linear layer: last parameter is the bias
  m.phi.back() = g_bias;
  return m;
}

MeanFieldFlow uniform_flow(int T, int ns) {
  return MeanFieldFlow(T, MeanField::uniform(ns));
}

/// Deterministic gamma = 1 game used by the enumeration-based oracles.
struct DetGame {
  MfgSpec spec;
  std::vector<int> next;  // s * 2 + a
};

DetGame random_det_game(std::mt19937_64& rng, int T) {
  DetGame g;
  g.next.resize(4);
  for (int& sp : g.next) sp = static_cast<int>(rng() % 2);
  g.spec.state_labels = {"0", "1"};
  g.spec.action_labels = {"0", "1"};
  auto next = g.next;
  g.spec.transition = [next](int s, int a, const MeanField&) {
    std::vector<double> row(2, 0.0);
    row[next[s * 2 + a]] = 1.0;
    return row;
  };
  g.spec.mu0 = MeanField::uniform(2);
  g.spec.gamma = 1.0;
  g.spec.horizon = T;
  return g;
}

/// All horizon-T trajectories of a deterministic 2-state 2-action game that
/// are reachable (start anywhere, actions free, states forced).
std::vector<Trajectory> enumerate_det_trajectories(const DetGame& g, int T) {
  std::vector<Trajectory> out;
  for (int s0 = 0; s0 < 2; ++s0)
    for (int mask = 0; mask < (1 << T); ++mask) {
      Trajectory tau;
      int s = s0;
      for (int t = 0; t < T; ++t) {
        int a = (mask >> t) & 1;
        tau.steps.emplace_back(s, a);
        s = g.next[s * 2 + a];
      }
      out.push_back(std::move(tau));
    }
  return out;
}

}  // namespace

TEST_CASE("estimate_expert_flow: hand-counted examples") {
  // Four agents at t=0 in states {0, 1, 1, 1}.
  DemoSet demos = demos_from_steps({{{{0, 0}}, {{1, 0}}, {{1, 1}}, {{1, 0}}}});
  auto flow = estimate_expert_flow(demos, 2);
  REQUIRE(flow.size() == 1);
  CHECK(flow[0][0] == doctest::Approx(0.25));
  CHECK(flow[0][1] == doctest::Approx(0.75));

  // All agents in the same state at every step -> point masses.
  DemoSet same = demos_from_steps({{{{2, 0}, {1, 1}}, {{2, 1}, {1, 0}}}});
  auto point = estimate_expert_flow(same, 3);
  CHECK(point[0][2] == doctest::Approx(1.0));
  CHECK(point[1][1] == doctest::Approx(1.0));

  DemoSet empty;
  empty.horizon = 1;
  CHECK_THROWS_AS(estimate_expert_flow(empty, 2), ConfigError);
}

TEST_CASE("estimate_expert_flow: averages across plays and stays stochastic") {
  EnvConfig cfg;
  cfg.name = EnvName::LeftRight;
  cfg.horizon = 3;
  MfgSpec spec = build_env(cfg);
  DemoSet demos;
  demos.horizon = 3;
  demos.n_agents = 500;
  for (int j = 0; j < 4; ++j)
    demos.plays.push_back(sample_game_play(spec, Policy::uniform(3, 3, 2), 500, 50 + j));
  auto flow = estimate_expert_flow(demos, 3);
  for (const auto& mu : flow) {
    double sum = 0.0;
    for (std::size_t s = 0; s < mu.size(); ++s) sum += mu[s];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // 2000 uniform coin flips: the empirical split is within 0.1 of one half.
  CHECK(std::abs(flow[1][1] - 0.5) < 0.1);
  CHECK(std::abs(flow[2][1] - 0.5) < 0.1);
}

TEST_CASE("estimate_expert_policy: counts and the uniform fallback") {
  // State 0: three agents pick action 1, one picks 0. State 1 never visited.
  DemoSet demos = demos_from_steps({{{{0, 1}}, {{0, 1}}, {{0, 1}}, {{0, 0}}}});
  Policy pi = estimate_expert_policy(demos, 2, 2);
  CHECK(pi[0](0, 1) == doctest::Approx(0.75));
  CHECK(pi[0](0, 0) == doctest::Approx(0.25));
  CHECK(pi[0](1, 0) == doctest::Approx(0.5));
  CHECK(pi[0](1, 1) == doctest::Approx(0.5));
}

TEST_CASE("demo_reward_sum: all-zero parameters give zero") {
  std::mt19937_64 rng(3);
  RewardModel m = make_reward_model(2, 2, 0.9, {8}, 0.0, rng);
  Trajectory tau;
  tau.steps = {{0, 0}, {1, 1}, {0, 1}};
  CHECK(demo_reward_sum(tau, m, uniform_flow(3, 2)) == doctest::Approx(0.0));
}

TEST_CASE("demo_reward_sum: constant reward sums the discount series") {
  const double gamma = 0.9;
  RewardModel m = constant_model(2, 2, gamma, 1.0, 0.0);
  Trajectory tau;
  tau.steps = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  double want = 1.0 + gamma + gamma * gamma + gamma * gamma * gamma;
  CHECK(demo_reward_sum(tau, m, uniform_flow(4, 2)) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("demo_reward_sum: a constant potential shifts the sum by exactly -c") {
  // Shaping telescopes: with a constant potential c the correction terms
  // cancel pairwise and only -c at the start survives.
  RewardModel m = constant_model(2, 2, 0.9, 1.0, 0.0);
  RewardModel shifted = constant_model(2, 2, 0.9, 1.0, 2.5);
  Trajectory tau;
  tau.steps = {{0, 0}, {1, 1}, {0, 1}};
  auto flow = uniform_flow(3, 2);
  CHECK(demo_reward_sum(tau, shifted, flow) ==
        doctest::Approx(demo_reward_sum(tau, m, flow) - 2.5).epsilon(1e-12));
}

TEST_CASE("demo_reward_sum: shaped minus unshaped is -g(s0, mu0) for any model") {
  std::mt19937_64 rng(5);
  RewardModel m = make_reward_model(3, 2, 0.99, {16}, 0.5, rng);
  RewardModel plain = m;
  plain.shaped = false;
  auto flow = uniform_flow(4, 3);
  std::vector<Trajectory> taus;
  for (int rep = 0; rep < 10; ++rep) {
    Trajectory tau;
    for (int t = 0; t < 4; ++t)
      tau.steps.emplace_back(static_cast<int>(rng() % 3), static_cast<int>(rng() % 2));
    taus.push_back(tau);
  }
  for (const auto& tau : taus) {
    double gap = demo_reward_sum(tau, m, flow) - demo_reward_sum(tau, plain, flow);
    CHECK(gap == doctest::Approx(-m.potential(tau.steps[0].first, flow[0]))
                     .epsilon(1e-10));
  }
}

TEST_CASE("estimate_partition: single certain proposal returns its reward sum") {
  RewardModel m = constant_model(2, 2, 1.0, 0.7, 0.0);
  SampledTrajectory sample;
  sample.tau.steps = {{0, 0}, {1, 1}};
  sample.log_q = 0.0;  // a sampler that emits this trajectory with prob 1
  auto flow = uniform_flow(2, 2);
  MfgSpec dummy;
  CHECK(estimate_partition({sample}, m, flow, dummy) ==
        doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("estimate_partition: zero reward and uniform proposals give T log|A|") {
  std::mt19937_64 rng(7);
  EnvConfig cfg;
  cfg.name = EnvName::Virus;
  cfg.horizon = 4;
  MfgSpec spec = build_env(cfg);
  RewardModel m = make_reward_model(2, 2, spec.gamma, {8}, 0.0, rng);
  auto flow = induce_flow(Policy::uniform(4, 2, 2), spec);
  auto samples = sample_proposals(Policy::uniform(4, 2, 2), flow, spec, 64, rng);
  CHECK(estimate_partition(samples, m, flow, spec) ==
        doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("estimate_partition: zero-probability proposal is rejected") {
  RewardModel m = constant_model(2, 2, 1.0, 0.0, 0.0);
  SampledTrajectory sample;
  sample.tau.steps = {{0, 0}};
  sample.log_q = neg_inf();
  MfgSpec dummy;
  CHECK_THROWS_AS(estimate_partition({sample}, m, uniform_flow(1, 2), dummy),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_partition({}, m, uniform_flow(1, 2), dummy), ConfigError);
}

TEST_CASE("estimate_partition: exact samplers make the estimate exact") {
  // Deterministic gamma = 1 game: the tabular adaptive sampler draws each
  // trajectory with probability proportional to exp(reward sum), so every
  // importance term equals log Z and the estimate has zero variance.
  std::mt19937_64 rng(11);
  DetGame g = random_det_game(rng, 3);
  // Point-mass start: with a stochastic start the per-sample terms still
  // depend on s0 through the soft value V_0(s0).
  g.spec.mu0 = MeanField::point_mass(2, 1);
  std::mt19937_64 model_rng(1);
  RewardModel m = make_reward_model(2, 2, 1.0, {8}, 0.4, model_rng);
  m.shaped = false;
  auto flow = induce_flow(Policy::uniform(3, 2, 2), g.spec);

  auto tabler = tabler_from_model(m, g.spec);
  auto table = tabler(flow);
  SamplerTrainConfig cfg;
  Policy samplers = train_adaptive_samplers(table, flow, g.spec, cfg, rng);

  // Enumerated truth: Z = sum over reachable trajectories of mu0(s0) exp(R).
  double z = 0.0;
  for (const auto& tau : enumerate_det_trajectories(g, 3))
    z += g.spec.mu0[tau.steps[0].first] * std::exp(demo_reward_sum(tau, m, flow));

  for (int batch = 0; batch < 3; ++batch) {
    auto samples = sample_proposals(samplers, flow, g.spec, 4, rng);
    CHECK(estimate_partition(samples, m, flow, g.spec) ==
          doctest::Approx(std::log(z)).epsilon(1e-9));
  }
}

TEST_CASE("mfirl_objective_and_grads: finite differences on both networks") {
  std::mt19937_64 rng(13);
  EnvConfig env;
  env.name = EnvName::LeftRight;
  env.horizon = 3;
  MfgSpec spec = build_env(env);
  RewardModel m = make_reward_model(3, 2, spec.gamma, {6}, 0.3, rng);
  auto flow = induce_flow(Policy::uniform(3, 3, 2), spec);

  std::vector<Trajectory> demo_batch;
  for (int j = 0; j < 5; ++j) {
    GamePlay play = sample_game_play(spec, Policy::uniform(3, 3, 2), 1, 100 + j);
    demo_batch.push_back(play.agents[0]);
  }
  auto samples = sample_proposals(Policy::uniform(3, 3, 2), flow, spec, 16, rng);

  auto objective = [&](const RewardModel& model) {
    double mean_demo = 0.0;
    for (const auto& tau : demo_batch) mean_demo += demo_reward_sum(tau, model, flow);
    mean_demo /= static_cast<double>(demo_batch.size());
    return mean_demo - estimate_partition(samples, model, flow, spec);
  };

  double log_z = estimate_partition(samples, m, flow, spec);
  ObjectiveGrads grads = mfirl_objective_and_grads(demo_batch, m, flow, log_z, samples);
  CHECK(grads.value == doctest::Approx(objective(m)).epsilon(1e-12));

  const double h = 1e-6;
  auto fd_check = [&](std::vector<double> RewardModel::*field,
                      const std::vector<double>& grad) {
    const auto& params = m.*field;
    std::size_t stride = std::max<std::size_t>(1, params.size() / 25);
    for (std::size_t i = 0; i < params.size(); i += stride) {
      RewardModel hi = m, lo = m;
      (hi.*field)[i] += h;
      (lo.*field)[i] -= h;
      double fd = (objective(hi) - objective(lo)) / (2.0 * h);
      double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      CHECK(std::abs(fd - grad[i]) / denom < 1e-3);
    }
  };
  fd_check(&RewardModel::omega, grads.grad_omega);
  fd_check(&RewardModel::phi, grads.grad_phi);
}

TEST_CASE("mfirl_objective_and_grads: exact max-ent gradient for a linear reward") {
  // Enumerating every trajectory with log_q = -log(base measure) turns the
  // softmax weights into the exact model distribution, so for a linear
  // (single-layer, unshaped) reward the gradient must equal the feature
  // expectation difference between demos and the model.
  std::mt19937_64 rng(17);
  DetGame g = random_det_game(rng, 2);
  std::mt19937_64 model_rng(2);
  RewardModel m = make_reward_model(2, 2, 1.0, {}, 0.3, model_rng);
  m.shaped = false;
  auto flow = induce_flow(Policy::uniform(2, 2, 2), g.spec);

  std::vector<SampledTrajectory> all;
  for (const auto& tau : enumerate_det_trajectories(g, 2)) {
    SampledTrajectory s;
    s.tau = tau;
    s.log_q = -std::log(g.spec.mu0[tau.steps[0].first]);  // minus log base measure
    all.push_back(std::move(s));
  }

  std::vector<Trajectory> demo_batch = {all[0].tau, all[3].tau, all[3].tau};
  ObjectiveGrads grads =
      mfirl_objective_and_grads(demo_batch, m, flow, 0.0, all);

  // Independent oracle: model distribution over trajectories and discounted
  // feature sums, with phi(tau) = sum_t gamma^t [features, 1].
  auto feature_sum = [&](const Trajectory& tau) {
    std::vector<double> f(m.omega.size(), 0.0);
    for (int t = 0; t < 2; ++t) {
      auto x = encode_features(tau.steps[t].first, tau.steps[t].second, flow[t], 2, 2);
      for (std::size_t i = 0; i < x.size(); ++i) f[i] += x[i];
      f.back() += 1.0;  // bias input
    }
    return f;
  };
  std::vector<double> probs(all.size());
  double z = 0.0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    probs[k] = g.spec.mu0[all[k].tau.steps[0].first] *
               std::exp(demo_reward_sum(all[k].tau, m, flow));
    z += probs[k];
  }
  std::vector<double> want(m.omega.size(), 0.0);
  for (const auto& tau : demo_batch) {
    auto f = feature_sum(tau);
    for (std::size_t i = 0; i < f.size(); ++i) want[i] += f[i] / demo_batch.size();
  }
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto f = feature_sum(all[k].tau);
    for (std::size_t i = 0; i < f.size(); ++i) want[i] -= probs[k] / z * f[i];
  }
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(grads.grad_omega[i] == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("mfirl_train: deterministic, logs, and improves its objective") {
  EnvConfig env;
  env.name = EnvName::Virus;  // expert clearly non-uniform, so the
  env.horizon = 8;            // objective has headroom above the init
  MfgSpec spec = build_env(env);
  Equilibrium expert = solve_ermfne(*spec.reward, spec);
  REQUIRE(expert.converged);
  DemoSet demos;
  demos.horizon = 8;
  demos.n_agents = 100;
  for (int j = 0; j < 3; ++j)
    demos.plays.push_back(sample_game_play(spec, expert.policy, 100, 300 + j));

  MfgSpec blind = spec;
  blind.reward.reset();
  IrlConfig cfg;
  cfg.epochs = 60;
  cfg.n_samples = 64;
  cfg.lr = 5e-3;
  cfg.hidden = {16};
  cfg.seed = 4;
  cfg.log_path = "mfirl_test_log.csv";
  TrainResult a = mfirl_train(blind, demos, cfg);
  TrainResult b = mfirl_train(blind, demos, cfg);
  CHECK(a.model.omega == b.model.omega);
  CHECK(a.model.phi == b.model.phi);
  REQUIRE(static_cast<int>(a.likelihood.size()) == cfg.epochs);

  // Simplified likelihood should trend upward (noisy per-epoch, so compare
  // leading and trailing averages).
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += a.likelihood[i] / 10.0;
    tail += a.likelihood[cfg.epochs - 1 - i] / 10.0;
  }
  CHECK(tail > head);

  std::ifstream log(cfg.log_path);
  REQUIRE(log.good());
  std::string header;
  std::getline(log, header);
  CHECK(header == "epoch,objective,grad_norm_core,grad_norm_potential");
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  CHECK(lines == cfg.epochs);
  std::remove(cfg.log_path.c_str());
}

TEST_CASE("mfirl_train: rejects mismatched demos") {
  EnvConfig env;
  env.name = EnvName::Virus;
  env.horizon = 5;
  MfgSpec spec = build_env(env);
  spec.reward.reset();
  DemoSet demos;
  demos.horizon = 4;  // != spec.horizon
  demos.n_agents = 1;
  GamePlay play;
  Trajectory tau;
  for (int t = 0; t < 4; ++t) tau.steps.emplace_back(0, 0);
  play.agents.push_back(tau);
  demos.plays.push_back(play);
  CHECK_THROWS_AS(mfirl_train(spec, demos, {}), ConfigError);
}

TEST_CASE("estimate_population_demos: hand case with an unvisited state") {
  // Two agents, two steps; state 2 is never visited at t=0.
  DemoSet demos = demos_from_steps({{{{0, 1}, {1, 0}}, {{0, 1}, {2, 1}}}});
  auto pop = estimate_population_demos(demos, 3, 2);
  REQUIRE(pop.size() == 1);
  REQUIRE(pop[0].size() == 2);
  CHECK(pop[0][0].mu[0] == doctest::Approx(1.0));
  CHECK(pop[0][0].pi(0, 1) == doctest::Approx(1.0));
  CHECK(pop[0][0].pi(2, 0) == doctest::Approx(0.5));  // uniform fallback
  CHECK(pop[0][1].mu[1] == doctest::Approx(0.5));
  CHECK(pop[0][1].mu[2] == doctest::Approx(0.5));
  CHECK(pop[0][1].pi(1, 0) == doctest::Approx(1.0));
  CHECK(pop[0][1].pi(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("population_reward: crowd-aversion example and edge cases") {
  EnvConfig env;
  env.name = EnvName::LeftRight;
  env.horizon = 2;
  MfgSpec spec = build_env(env);
  MeanField mu(std::vector<double>{0.0, 0.5, 0.5});
  // r(L) = -mu(L), r(R) = -mu(R) regardless of the action.
  CHECK(population_reward(mu, PerStepPolicy::uniform(3, 2), *spec.reward) ==
        doctest::Approx(-0.5));
  MeanField point = MeanField::point_mass(3, 1);
  CHECK(population_reward(point, PerStepPolicy::uniform(3, 2), *spec.reward) ==
        doctest::Approx(-1.0));
  RewardFn zero = [](int, int, const MeanField&) { return 0.0; };
  CHECK(population_reward(mu, PerStepPolicy::uniform(3, 2), zero) ==
        doctest::Approx(0.0));
}

TEST_CASE("mfgmdp_irl_train: deterministic, unshaped, right shapes") {
  EnvConfig env;
  env.name = EnvName::LeftRight;
  env.horizon = 5;
  MfgSpec spec = build_env(env);
  Equilibrium expert = solve_ermfne(*spec.reward, spec);
  REQUIRE(expert.converged);
  DemoSet demos;
  demos.horizon = 5;
  demos.n_agents = 50;
  demos.plays.push_back(sample_game_play(spec, expert.policy, 50, 9));

  MfgSpec blind = spec;
  blind.reward.reset();
  IrlConfig cfg;
  cfg.epochs = 10;
  cfg.n_samples = 16;
  cfg.hidden = {8};
  cfg.seed = 6;
  TrainResult a = mfgmdp_irl_train(blind, demos, cfg);
  TrainResult b = mfgmdp_irl_train(blind, demos, cfg);
  CHECK(a.model.omega == b.model.omega);
  CHECK_FALSE(a.model.shaped);
  CHECK(static_cast<int>(a.likelihood.size()) == cfg.epochs);
  for (double v : a.likelihood) CHECK(std::isfinite(v));
}
