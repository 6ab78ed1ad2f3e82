#include "mfgirl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mfgirl/core.hpp"
#include "mfgirl/nn.hpp"

namespace mfg {

namespace {

void check_flow(const MeanFieldFlow& flow, const MfgSpec& spec, const char* where) {
  if (static_cast<int>(flow.size()) != spec.horizon)
    throw std::invalid_argument(std::string(where) + ": flow length != horizon");
}

double log_sum_exp(const std::vector<double>& x) {
  double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

/// Mean squared difference over all (t >= 1, s).
double flow_mse(const MeanFieldFlow& a, const MeanFieldFlow& b) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 1; t < a.size(); ++t)
    for (std::size_t s = 0; s < a[t].size(); ++s) {
      double d = a[t][s] - b[t][s];
      acc += d * d;
      ++n;
    }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace

RewardTabler tabler_from_reward_fn(RewardFn r, const MfgSpec& spec) {
  const int ns = spec.n_states(), na = spec.n_actions();
  return [r = std::move(r), ns, na](const MeanFieldFlow& flow) {
    StepRewardTable table(flow.size() * ns * na);
    std::size_t i = 0;
    for (const auto& mu : flow)
      for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) table[i++] = r(s, a, mu);
    return table;
  };
}

std::pair<SoftQTable, Policy> soft_backward_induction(const MeanFieldFlow& flow,
                                                      const StepRewardTable& rewards,
                                                      const MfgSpec& spec, double beta) {
  check_flow(flow, spec, "soft_backward_induction");
  if (!(beta > 0.0))
    throw std::invalid_argument("soft_backward_induction: beta must be > 0");
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;
  if (rewards.size() != static_cast<std::size_t>(T) * ns * na)
    throw std::invalid_argument("soft_backward_induction: reward table size mismatch");

  SoftQTable tab;
  tab.q.assign(T, std::vector<double>(static_cast<std::size_t>(ns) * na, 0.0));
  tab.v.assign(T, std::vector<double>(ns, 0.0));
  Policy pi(std::vector<PerStepPolicy>(T, PerStepPolicy(ns, na)));

  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < ns; ++s) {
      std::vector<double> q(na);
      for (int a = 0; a < na; ++a) {
        double val = rewards[step_reward_index(spec, t, s, a)];
        if (!std::isfinite(val))
          throw NumericError("soft_backward_induction: non-finite reward");
        if (t + 1 < T) {
          auto row = spec.transition(s, a, flow[t]);
          double cont = 0.0;
          for (int sp = 0; sp < ns; ++sp)
            if (row[sp] > 0.0) cont += row[sp] * tab.v[t + 1][sp];
          val += spec.gamma * cont;
        }
        q[a] = val;
        tab.q[t][static_cast<std::size_t>(s) * na + a] = val;
      }
      std::vector<double> scaled(na);
      for (int a = 0; a < na; ++a) scaled[a] = q[a] / beta;
      const double lse = log_sum_exp(scaled);
      tab.v[t][s] = beta * lse;
      for (int a = 0; a < na; ++a) pi[t](s, a) = std::exp(scaled[a] - lse);
    }
  }
  return {std::move(tab), std::move(pi)};
}

std::pair<SoftQTable, Policy> soft_backward_induction(const MeanFieldFlow& flow,
                                                      const RewardFn& reward,
                                                      const MfgSpec& spec, double beta) {
  return soft_backward_induction(flow, tabler_from_reward_fn(reward, spec)(flow), spec,
                                 beta);
}

MeanFieldFlow ermfne_operator(const MeanFieldFlow& flow, const RewardTabler& tabler,
                              const MfgSpec& spec, double beta) {
  auto [tab, pi] = soft_backward_induction(flow, tabler(flow), spec, beta);
  (void)tab;
  return induce_flow(pi, spec);
}

Equilibrium solve_ermfne(const RewardTabler& tabler, const MfgSpec& spec,
                         const SolverConfig& cfg) {
  spec.validate();
  Equilibrium eq;
  eq.flow = induce_flow(Policy::uniform(spec.horizon, spec.n_states(), spec.n_actions()),
                        spec);
  eq.residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iterations; ++it) {
    MeanFieldFlow candidate = ermfne_operator(eq.flow, tabler, spec, cfg.beta);
    if (cfg.damping > 0.0) {
      for (std::size_t t = 0; t < candidate.size(); ++t)
        for (std::size_t s = 0; s < candidate[t].size(); ++s)
          candidate[t][s] =
              (1.0 - cfg.damping) * candidate[t][s] + cfg.damping * eq.flow[t][s];
    }
    eq.residual = flow_mse(candidate, eq.flow);
    eq.flow = std::move(candidate);
    eq.iterations = it + 1;
    if (eq.residual <= cfg.tolerance) {
      eq.converged = true;
      break;
    }
  }
  auto [tab, pi] = soft_backward_induction(eq.flow, tabler(eq.flow), spec, cfg.beta);
  (void)tab;
  eq.policy = std::move(pi);
  if (eq.converged) eq.flow = induce_flow(eq.policy, spec);
  return eq;
}

Equilibrium solve_ermfne(const RewardFn& reward, const MfgSpec& spec,
                         const SolverConfig& cfg) {
  return solve_ermfne(tabler_from_reward_fn(reward, spec), spec, cfg);
}

Policy hard_best_response(const MeanFieldFlow& flow, const StepRewardTable& rewards,
                          const MfgSpec& spec) {
  check_flow(flow, spec, "hard_best_response");
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;
  if (rewards.size() != static_cast<std::size_t>(T) * ns * na)
    throw std::invalid_argument("hard_best_response: reward table size mismatch");
  constexpr double kTieTol = 1e-12;

  std::vector<double> v_next(ns, 0.0), v(ns, 0.0);
  Policy pi(std::vector<PerStepPolicy>(T, PerStepPolicy(ns, na)));
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < ns; ++s) {
      std::vector<double> q(na);
      for (int a = 0; a < na; ++a) {
        double val = rewards[step_reward_index(spec, t, s, a)];
        if (t + 1 < T) {
          auto row = spec.transition(s, a, flow[t]);
          for (int sp = 0; sp < ns; ++sp)
            if (row[sp] > 0.0) val += spec.gamma * row[sp] * v_next[sp];
        }
        q[a] = val;
      }
      const double best = *std::max_element(q.begin(), q.end());
      int ties = 0;
      for (int a = 0; a < na; ++a)
        if (q[a] >= best - kTieTol) ++ties;
      for (int a = 0; a < na; ++a)
        pi[t](s, a) = (q[a] >= best - kTieTol) ? 1.0 / ties : 0.0;
      v[s] = best;
    }
    v_next = v;
  }
  return pi;
}

Policy hard_best_response(const MeanFieldFlow& flow, const RewardFn& reward,
                          const MfgSpec& spec) {
  return hard_best_response(flow, tabler_from_reward_fn(reward, spec)(flow), spec);
}

namespace {

struct Experience {
  int s, a, sp;
};

/// Replay-buffer soft Q-learning for one time index (approximator mode).
/// q_net maps one-hot state -> action logits; alpha_net maps one-hot state ->
/// soft Q values. v_next(s') evaluates the already-trained next-step values.
void train_one_step_sampler(int t, const StepRewardTable& rewards,
                            const MeanFieldFlow& empirical_flow, const MfgSpec& spec,
                            const SamplerTrainConfig& cfg, std::mt19937_64& rng,
                            const std::function<double(int)>& v_next,
                            const MlpSpec& net_spec, std::vector<double>& alpha,
                            std::vector<double>& theta) {
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;
  std::deque<Experience> replay;
  MlpWorkspace ws;
  AdamState opt_alpha(alpha.size(), cfg.lr), opt_theta(theta.size(), cfg.lr);
  std::vector<double> grad_alpha(alpha.size()), grad_theta(theta.size());
  std::vector<double> onehot(ns, 0.0);

  auto state_dist = empirical_flow[t].p;

  for (int step = 0; step < cfg.grad_steps; ++step) {
    // Collect experience: draw states from the empirical field at t, actions
    // from the current sampler, next states from the known dynamics.
    for (int k = 0; k < 4; ++k) {
      int s = sample_categorical(state_dist, rng);
      std::fill(onehot.begin(), onehot.end(), 0.0);
      onehot[s] = 1.0;
      auto logits = mlp_forward(net_spec, theta, onehot);
      double lse = log_sum_exp(logits);
      std::vector<double> probs(na);
      for (int a = 0; a < na; ++a) probs[a] = std::exp(logits[a] - lse);
      int a = sample_categorical(probs, rng);
      int sp = t + 1 < T ? sample_categorical(spec.transition(s, a, empirical_flow[t]), rng)
                         : 0;
      replay.push_back({s, a, sp});
      if (static_cast<int>(replay.size()) > cfg.replay_capacity) replay.pop_front();
    }

    const int batch = std::min<int>(cfg.minibatch, static_cast<int>(replay.size()));
    std::vector<Experience> minibatch(batch);
    for (int x = 0; x < batch; ++x)
      minibatch[x] = replay[static_cast<std::size_t>(uniform01(rng) * replay.size())];

    // Bellman regression target for the soft Q network.
    std::fill(grad_alpha.begin(), grad_alpha.end(), 0.0);
    std::vector<double> cot(na, 0.0);
    for (const auto& e : minibatch) {
      std::fill(onehot.begin(), onehot.end(), 0.0);
      onehot[e.s] = 1.0;
      auto qv = mlp_forward(net_spec, alpha, onehot, ws);
      double target = rewards[step_reward_index(spec, t, e.s, e.a)];
      if (t + 1 < T) target += spec.gamma * v_next(e.sp);
      std::fill(cot.begin(), cot.end(), 0.0);
      cot[e.a] = (qv[e.a] - target) / batch;
      mlp_accumulate_grad(net_spec, alpha, ws, cot, grad_alpha);
    }
    adam_step(opt_alpha, alpha, grad_alpha);

    // KL step for the sampler toward the Boltzmann distribution of alpha.
    std::fill(grad_theta.begin(), grad_theta.end(), 0.0);
    for (const auto& e : minibatch) {
      std::fill(onehot.begin(), onehot.end(), 0.0);
      onehot[e.s] = 1.0;
      auto qv = mlp_forward(net_spec, alpha, onehot);
      double vq = log_sum_exp(qv);
      auto logits = mlp_forward(net_spec, theta, onehot, ws);
      double lse = log_sum_exp(logits);
      std::vector<double> probs(na);
      for (int a = 0; a < na; ++a) probs[a] = std::exp(logits[a] - lse);
      // Score-function gradient of E_q[log q - (Q - V)]; the Y action
      // samples share one forward pass, so their cotangents are summed
      // before the single reverse pass.
      std::fill(cot.begin(), cot.end(), 0.0);
      for (int y = 0; y < cfg.y_actions; ++y) {
        int a = sample_categorical(probs, rng);
        double adv = (logits[a] - lse) - (qv[a] - vq);
        for (int b = 0; b < na; ++b) cot[b] -= probs[b] * adv;
        cot[a] += adv;
      }
      for (double& c : cot) c /= static_cast<double>(cfg.y_actions) * batch;
      mlp_accumulate_grad(net_spec, theta, ws, cot, grad_theta);
    }
    adam_step(opt_theta, theta, grad_theta);
  }
}

}  // namespace

Policy train_adaptive_samplers(const StepRewardTable& rewards,
                               const MeanFieldFlow& empirical_flow, const MfgSpec& spec,
                               const SamplerTrainConfig& cfg, std::mt19937_64& rng) {
  check_flow(empirical_flow, spec, "train_adaptive_samplers");
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;
  const bool tabular = !cfg.force_approximator && ns * na <= cfg.tabular_threshold;
  if (tabular) {
    auto [tab, pi] = soft_backward_induction(empirical_flow, rewards, spec, 1.0);
    (void)tab;
    return pi;
  }

  MlpSpec net_spec{ns, cfg.hidden, na};
  Policy pi(std::vector<PerStepPolicy>(T, PerStepPolicy(ns, na)));
  std::vector<double> onehot(ns, 0.0);

  // The final-step sampler is the analytic softmax of the immediate reward.
  std::vector<std::vector<double>> v_tail(T, std::vector<double>(ns, 0.0));
  for (int s = 0; s < ns; ++s) {
    std::vector<double> q(na);
    for (int a = 0; a < na; ++a) q[a] = rewards[step_reward_index(spec, T - 1, s, a)];
    double lse = log_sum_exp(q);
    v_tail[T - 1][s] = lse;
    for (int a = 0; a < na; ++a) pi[T - 1](s, a) = std::exp(q[a] - lse);
  }

  std::vector<std::vector<double>> alphas(T);
  for (int t = T - 2; t >= 0; --t) {
    std::vector<double> alpha = init_params_glorot(net_spec, rng);
    std::vector<double> theta = init_params_glorot(net_spec, rng);
    const auto& alpha_next = alphas[t + 1];
    auto v_next = [&, t](int sp) {
      if (t + 1 == T - 1) return v_tail[T - 1][sp];
      std::vector<double> x(ns, 0.0);
      x[sp] = 1.0;
      return log_sum_exp(mlp_forward(net_spec, alpha_next, x));
    };
    train_one_step_sampler(t, rewards, empirical_flow, spec, cfg, rng, v_next, net_spec,
                           alpha, theta);
    for (int s = 0; s < ns; ++s) {
      std::fill(onehot.begin(), onehot.end(), 0.0);
      onehot[s] = 1.0;
      auto logits = mlp_forward(net_spec, theta, onehot);
      double lse = log_sum_exp(logits);
      for (int a = 0; a < na; ++a) pi[t](s, a) = std::exp(logits[a] - lse);
    }
    alphas[t] = std::move(alpha);
  }
  return pi;
}

}  // namespace mfg
