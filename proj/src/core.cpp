#include "mfgirl/core.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

void check_dims(const MeanField& mu, const PerStepPolicy& pi_t) {
  if (mu.size() != pi_t.n_states)
    throw std::invalid_argument("mkv_step: mean field / policy dimension mismatch");
}

double row_entropy(const PerStepPolicy& pi_t, std::size_t s) {
  double h = 0.0;
  for (std::size_t a = 0; a < pi_t.n_actions; ++a) {
    double q = pi_t(s, a);
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

}  // namespace

MeanField mkv_step(const MeanField& mu, const PerStepPolicy& pi_t,
                   const TransitionModel& p) {
  check_dims(mu, pi_t);
  const std::size_t ns = mu.size();
  MeanField next(std::vector<double>(ns, 0.0));
  for (std::size_t s = 0; s < ns; ++s) {
    if (mu[s] == 0.0) continue;
    for (std::size_t a = 0; a < pi_t.n_actions; ++a) {
      double w = mu[s] * pi_t(s, a);
      if (w == 0.0) continue;
      std::vector<double> row = p(static_cast<int>(s), static_cast<int>(a), mu);
      if (row.size() != ns)
        throw std::invalid_argument("mkv_step: transition row has wrong length");
      for (std::size_t sp = 0; sp < ns; ++sp) next[sp] += w * row[sp];
    }
  }
  next.renormalize();
  return next;
}

MeanFieldFlow induce_flow(const Policy& pi, const MfgSpec& spec) {
  if (static_cast<int>(pi.horizon()) != spec.horizon)
    throw std::invalid_argument("induce_flow: policy horizon != spec horizon");
  MeanFieldFlow flow;
  flow.reserve(spec.horizon);
  flow.push_back(spec.mu0);
  for (int t = 0; t + 1 < spec.horizon; ++t)
    flow.push_back(mkv_step(flow.back(), pi[t], spec.transition));
  return flow;
}

std::vector<MeanField> agent_marginals(const Policy& pi, const MeanFieldFlow& flow,
                                       const MfgSpec& spec) {
  if (pi.horizon() != flow.size() || static_cast<int>(pi.horizon()) != spec.horizon)
    throw std::invalid_argument("agent_marginals: horizon mismatch");
  std::vector<MeanField> rho;
  rho.reserve(spec.horizon);
  rho.push_back(spec.mu0);
  // Same propagation as the MKV step except transitions are evaluated at the
  // pinned flow, which may be inconsistent with the policy.
  const std::size_t ns = spec.mu0.size();
  for (int t = 0; t + 1 < spec.horizon; ++t) {
    MeanField next(std::vector<double>(ns, 0.0));
    for (std::size_t s = 0; s < ns; ++s) {
      if (rho[t][s] == 0.0) continue;
      for (std::size_t a = 0; a < pi[t].n_actions; ++a) {
        double w = rho[t][s] * pi[t](s, a);
        if (w == 0.0) continue;
        std::vector<double> row =
            spec.transition(static_cast<int>(s), static_cast<int>(a), flow[t]);
        for (std::size_t sp = 0; sp < ns; ++sp) next[sp] += w * row[sp];
      }
    }
    next.renormalize();
    rho.push_back(std::move(next));
  }
  return rho;
}

double expected_return(const MeanFieldFlow& flow, const Policy& pi, const MfgSpec& spec) {
  if (!spec.reward) throw ConfigError("expected_return: spec has no reward");
  const auto& r = *spec.reward;
  auto rho = agent_marginals(pi, flow, spec);
  double total = 0.0;
  double disc = 1.0;
  for (int t = 0; t < spec.horizon; ++t) {
    double step = 0.0;
    for (int s = 0; s < spec.n_states(); ++s) {
      if (rho[t][s] == 0.0) continue;
      for (int a = 0; a < spec.n_actions(); ++a) {
        double q = pi[t](s, a);
        if (q > 0.0) step += rho[t][s] * q * r(s, a, flow[t]);
      }
    }
    total += disc * step;
    disc *= spec.gamma;
  }
  return total;
}

double entropy_regularized_return(const MeanFieldFlow& flow, const Policy& pi,
                                  const MfgSpec& spec, double beta) {
  if (!(beta > 0.0))
    throw std::invalid_argument("entropy_regularized_return: beta must be > 0");
  auto rho = agent_marginals(pi, flow, spec);
  double bonus = 0.0;
  double disc = 1.0;
  for (int t = 0; t < spec.horizon; ++t) {
    double step = 0.0;
    for (int s = 0; s < spec.n_states(); ++s)
      if (rho[t][s] > 0.0) step += rho[t][s] * row_entropy(pi[t], s);
    bonus += disc * beta * step;
    disc *= spec.gamma;
  }
  return expected_return(flow, pi, spec) + bonus;
}

double trajectory_log_prob(const Trajectory& tau, const Policy& pi,
                           const MeanFieldFlow& flow, const MfgSpec& spec) {
  if (static_cast<int>(tau.horizon()) != spec.horizon)
    throw std::invalid_argument("trajectory_log_prob: horizon mismatch");
  const auto [s0, a0] = tau.steps[0];
  if (spec.mu0[s0] == 0.0) return neg_inf();
  double lp = std::log(spec.mu0[s0]);
  for (int t = 0; t < spec.horizon; ++t) {
    const auto [s, a] = tau.steps[t];
    double q = pi[t](s, a);
    if (q == 0.0) return neg_inf();
    lp += std::log(q);
    if (t + 1 < spec.horizon) {
      const auto [sp, ap] = tau.steps[t + 1];
      (void)ap;
      double ptrans = spec.transition(s, a, flow[t])[sp];
      if (ptrans == 0.0) return neg_inf();
      lp += std::log(ptrans);
    }
  }
  return lp;
}

double energy_log_weight(const Trajectory& tau, const MeanFieldFlow& flow,
                         const RewardFn& reward, const MfgSpec& spec) {
  if (static_cast<int>(tau.horizon()) != spec.horizon)
    throw std::invalid_argument("energy_log_weight: horizon mismatch");
  const auto [s0, a0] = tau.steps[0];
  (void)a0;
  if (spec.mu0[s0] == 0.0) return neg_inf();
  double lw = std::log(spec.mu0[s0]);
  double disc = 1.0;
  for (int t = 0; t < spec.horizon; ++t) {
    const auto [s, a] = tau.steps[t];
    lw += disc * reward(s, a, flow[t]);
    disc *= spec.gamma;
    if (t + 1 < spec.horizon) {
      double ptrans = spec.transition(s, a, flow[t])[tau.steps[t + 1].first];
      if (ptrans == 0.0) return neg_inf();
      lw += std::log(ptrans);
    }
  }
  return lw;
}

int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  if (last_positive < 0) throw NumericError("sample_categorical: all-zero distribution");
  return last_positive;
}

GamePlay sample_game_play(const MfgSpec& spec, const Policy& pi, int n_agents,
                          std::uint64_t rng_seed) {
  if (n_agents < 1) throw std::invalid_argument("sample_game_play: n_agents must be >= 1");
  std::mt19937_64 rng(rng_seed);
  const int ns = spec.n_states();
  const int T = spec.horizon;

  GamePlay play;
  play.agents.resize(n_agents);
  for (auto& tau : play.agents) tau.steps.resize(T);

  std::vector<int> states(n_agents);
  std::vector<double> mu0v(spec.mu0.p);
  for (int i = 0; i < n_agents; ++i) states[i] = sample_categorical(mu0v, rng);

  for (int t = 0; t < T; ++t) {
    // Empirical mean field of the N agents at this step.
    MeanField mu_hat(std::vector<double>(ns, 0.0));
    for (int i = 0; i < n_agents; ++i) mu_hat[states[i]] += 1.0 / n_agents;
    play.empirical_flow.push_back(mu_hat);

    std::vector<int> actions(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      std::vector<double> row(spec.n_actions());
      for (int a = 0; a < spec.n_actions(); ++a) row[a] = pi[t](states[i], a);
      actions[i] = sample_categorical(row, rng);
      play.agents[i].steps[t] = {states[i], actions[i]};
    }
    if (t + 1 < T) {
      for (int i = 0; i < n_agents; ++i) {
        auto row = spec.transition(states[i], actions[i], mu_hat);
        states[i] = sample_categorical(row, rng);
      }
    }
  }
  return play;
}

}  // namespace mfg
