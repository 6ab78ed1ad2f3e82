#include "mfgirl/irl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mfgirl/core.hpp"
#include "mfgirl/envs.hpp"

namespace mfg {

namespace {

double log_sum_exp(const std::vector<double>& x) {
  double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

double l2_norm(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

std::size_t cell_index(int t, int s, int a, int ns, int na) {
  return (static_cast<std::size_t>(t) * ns + s) * na + a;
}

}  // namespace

double RewardModel::reward(int s, int a, const MeanField& mu) const {
  auto x = encode_features(s, a, mu, n_states, n_actions);
  return mlp_forward(core_spec, omega, x)[0];
}

double RewardModel::potential(int s, const MeanField& mu) const {
  if (!shaped) return 0.0;
  auto x = encode_state_features(s, mu, n_states);
  return mlp_forward(potential_spec, phi, x)[0];
}

RewardModel make_reward_model(int n_states, int n_actions, double gamma,
                              const std::vector<int>& hidden, double init_scale,
                              std::mt19937_64& rng, bool shaped) {
  if (n_states < 1 || n_actions < 1)
    throw ConfigError("make_reward_model: empty state or action space");
  RewardModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.shaped = shaped;
  m.core_spec = MlpSpec{2 * n_states + n_actions, hidden, 1};
  m.potential_spec = MlpSpec{2 * n_states, hidden, 1};
  m.omega = init_params_uniform(m.core_spec, init_scale, rng);
  m.phi = shaped ? init_params_uniform(m.potential_spec, init_scale, rng)
                 : std::vector<double>(param_count(m.potential_spec), 0.0);
  return m;
}

RewardFn reward_fn_of(const RewardModel& model) {
  return [model](int s, int a, const MeanField& mu) { return model.reward(s, a, mu); };
}

RewardTabler tabler_from_model(const RewardModel& model, const MfgSpec& spec) {
  if (model.n_states != spec.n_states() || model.n_actions != spec.n_actions())
    throw ConfigError("tabler_from_model: model/game dimension mismatch");
  return [model, transition = spec.transition](const MeanFieldFlow& flow) {
    const int T = static_cast<int>(flow.size());
    const int ns = model.n_states, na = model.n_actions;
    StepRewardTable table(static_cast<std::size_t>(T) * ns * na);
    std::vector<std::vector<double>> g(T, std::vector<double>(ns, 0.0));
    if (model.shaped)
      for (int t = 0; t < T; ++t)
        for (int s = 0; s < ns; ++s) g[t][s] = model.potential(s, flow[t]);
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
          double val = model.reward(s, a, flow[t]);
          if (model.shaped) {
            val -= g[t][s];
            if (t + 1 < T) {
              auto row = transition(s, a, flow[t]);
              double exp_g = 0.0;
              for (int sp = 0; sp < ns; ++sp)
                if (row[sp] > 0.0) exp_g += row[sp] * g[t + 1][sp];
              val += model.gamma * exp_g;
            }
          }
          table[cell_index(t, s, a, ns, na)] = val;
        }
    return table;
  };
}

MeanFieldFlow estimate_expert_flow(const DemoSet& demos, int n_states) {
  demos.validate();
  if (demos.n_plays() == 0) throw ConfigError("estimate_expert_flow: empty demo set");
  const int T = demos.horizon;
  MeanFieldFlow flow(T, MeanField(std::vector<double>(n_states, 0.0)));
  double total = 0.0;
  for (const auto& play : demos.plays)
    for (const auto& tau : play.agents) {
      for (int t = 0; t < T; ++t) flow[t][tau.steps[t].first] += 1.0;
      total += 1.0;
    }
  for (auto& mu : flow)
    for (int s = 0; s < n_states; ++s) mu[s] /= total;
  return flow;
}

Policy estimate_expert_policy(const DemoSet& demos, int n_states, int n_actions) {
  demos.validate();
  const int T = demos.horizon;
  Policy pi(std::vector<PerStepPolicy>(T, PerStepPolicy(n_states, n_actions)));
  std::vector<std::vector<double>> counts(T,
                                          std::vector<double>(n_states * n_actions, 0.0));
  for (const auto& play : demos.plays)
    for (const auto& tau : play.agents)
      for (int t = 0; t < T; ++t)
        counts[t][tau.steps[t].first * n_actions + tau.steps[t].second] += 1.0;
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < n_states; ++s) {
      double row_sum = 0.0;
      for (int a = 0; a < n_actions; ++a) row_sum += counts[t][s * n_actions + a];
      for (int a = 0; a < n_actions; ++a)
        pi[t](s, a) = row_sum > 0.0 ? counts[t][s * n_actions + a] / row_sum
                                    : 1.0 / n_actions;
    }
  return pi;
}

double demo_reward_sum(const Trajectory& tau, const RewardModel& model,
                       const MeanFieldFlow& flow) {
  const int T = static_cast<int>(flow.size());
  if (static_cast<int>(tau.horizon()) != T)
    throw std::invalid_argument("demo_reward_sum: horizon mismatch");
  double total = 0.0;
  double disc = 1.0;
  for (int t = 0; t < T; ++t) {
    const auto [s, a] = tau.steps[t];
    total += disc * (model.reward(s, a, flow[t]) - model.potential(s, flow[t]));
    if (t + 1 < T)
      total += disc * model.gamma * model.potential(tau.steps[t + 1].first, flow[t + 1]);
    disc *= model.gamma;
  }
  return total;
}

std::vector<SampledTrajectory> sample_proposals(const Policy& samplers,
                                                const MeanFieldFlow& flow,
                                                const MfgSpec& spec, int count,
                                                std::mt19937_64& rng) {
  if (static_cast<int>(samplers.horizon()) != spec.horizon ||
      static_cast<int>(flow.size()) != spec.horizon)
    throw std::invalid_argument("sample_proposals: horizon mismatch");
  const int T = spec.horizon, na = spec.n_actions();
  std::vector<SampledTrajectory> out(count);
  for (auto& sample : out) {
    sample.tau.steps.resize(T);
    int s = sample_categorical(spec.mu0.p, rng);
    for (int t = 0; t < T; ++t) {
      std::vector<double> row(na);
      for (int a = 0; a < na; ++a) row[a] = samplers[t](s, a);
      int a = sample_categorical(row, rng);
      sample.tau.steps[t] = {s, a};
      sample.log_q += std::log(samplers[t](s, a));
      if (t + 1 < T) s = sample_categorical(spec.transition(s, a, flow[t]), rng);
    }
  }
  return out;
}

double estimate_partition(const std::vector<SampledTrajectory>& samples,
                          const RewardModel& model, const MeanFieldFlow& flow,
                          const MfgSpec& spec) {
  (void)spec;
  if (samples.empty()) throw ConfigError("estimate_partition: no samples");
  std::vector<double> log_terms(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!std::isfinite(samples[k].log_q))
      throw std::invalid_argument("estimate_partition: zero-probability proposal");
    log_terms[k] = demo_reward_sum(samples[k].tau, model, flow) - samples[k].log_q;
  }
  return log_sum_exp(log_terms) - std::log(static_cast<double>(samples.size()));
}

namespace {

/// Trajectory reward sum evaluated through pre-built r/g tables at a fixed
/// flow (the hot path during training).
double reward_sum_from_tables(const Trajectory& tau, const std::vector<double>& r_table,
                              const std::vector<std::vector<double>>& g_table,
                              double gamma, int ns, int na, bool shaped) {
  const int T = static_cast<int>(tau.horizon());
  double total = 0.0, disc = 1.0;
  for (int t = 0; t < T; ++t) {
    const auto [s, a] = tau.steps[t];
    total += disc * r_table[cell_index(t, s, a, ns, na)];
    if (shaped) {
      total -= disc * g_table[t][s];
      if (t + 1 < T) total += disc * gamma * g_table[t + 1][tau.steps[t + 1].first];
    }
    disc *= gamma;
  }
  return total;
}

}  // namespace

ObjectiveGrads mfirl_objective_and_grads(const std::vector<Trajectory>& demo_batch,
                                         const RewardModel& model,
                                         const MeanFieldFlow& flow, double log_z,
                                         const std::vector<SampledTrajectory>& samples) {
  if (demo_batch.empty() || samples.empty())
    throw std::invalid_argument("mfirl_objective_and_grads: empty batch");
  const int T = static_cast<int>(flow.size());
  const int ns = model.n_states, na = model.n_actions;

  ObjectiveGrads out;
  out.grad_omega.assign(model.omega.size(), 0.0);
  out.grad_phi.assign(model.phi.size(), 0.0);

  double mean_demo = 0.0;
  for (const auto& tau : demo_batch) mean_demo += demo_reward_sum(tau, model, flow);
  mean_demo /= static_cast<double>(demo_batch.size());
  out.value = mean_demo - log_z;

  std::vector<double> log_terms(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k)
    log_terms[k] = demo_reward_sum(samples[k].tau, model, flow) - samples[k].log_q;
  const double lse = log_sum_exp(log_terms);

  MlpWorkspace ws;
  auto accumulate = [&](const Trajectory& tau, double scale) {
    double disc = 1.0;
    for (int t = 0; t < T; ++t) {
      const auto [s, a] = tau.steps[t];
      auto xr = encode_features(s, a, flow[t], ns, na);
      mlp_forward(model.core_spec, model.omega, xr, ws);
      const std::vector<double> cot_r = {scale * disc};
      mlp_accumulate_grad(model.core_spec, model.omega, ws, cot_r, out.grad_omega);
      if (model.shaped) {
        auto xg = encode_state_features(s, flow[t], ns);
        mlp_forward(model.potential_spec, model.phi, xg, ws);
        const std::vector<double> cot_g = {-scale * disc};
        mlp_accumulate_grad(model.potential_spec, model.phi, ws, cot_g, out.grad_phi);
        if (t + 1 < T) {
          auto xg2 = encode_state_features(tau.steps[t + 1].first, flow[t + 1], ns);
          mlp_forward(model.potential_spec, model.phi, xg2, ws);
          const std::vector<double> cot_g2 = {scale * disc * model.gamma};
          mlp_accumulate_grad(model.potential_spec, model.phi, ws, cot_g2, out.grad_phi);
        }
      }
      disc *= model.gamma;
    }
  };
  for (const auto& tau : demo_batch)
    accumulate(tau, 1.0 / static_cast<double>(demo_batch.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    double w = std::exp(log_terms[k] - lse);
    if (w > 0.0) accumulate(samples[k].tau, -w);
  }
  return out;
}

TrainResult mfirl_train(const MfgSpec& spec, const DemoSet& demos, const IrlConfig& cfg) {
  spec.validate();
  demos.validate();
  if (demos.horizon != spec.horizon)
    throw ConfigError("mfirl_train: demo horizon != game horizon");
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;

  std::mt19937_64 rng(cfg.seed);
  RewardModel model = make_reward_model(ns, na, spec.gamma, cfg.hidden, cfg.init_scale,
                                        rng, /*shaped=*/true);

  const MeanFieldFlow mu_hat = estimate_expert_flow(demos, ns);

  // The empirical flow is fixed, so every network input the training loop
  // ever needs is indexed by (t, s, a) or (t, s). Precompute features and
  // transition rows once.
  std::vector<std::vector<double>> feats_r(static_cast<std::size_t>(T) * ns * na);
  std::vector<std::vector<double>> feats_g(static_cast<std::size_t>(T) * ns);
  std::vector<std::vector<double>> trans(static_cast<std::size_t>(T) * ns * na);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < ns; ++s) {
      feats_g[static_cast<std::size_t>(t) * ns + s] =
          encode_state_features(s, mu_hat[t], ns);
      for (int a = 0; a < na; ++a) {
        feats_r[cell_index(t, s, a, ns, na)] = encode_features(s, a, mu_hat[t], ns, na);
        trans[cell_index(t, s, a, ns, na)] = spec.transition(s, a, mu_hat[t]);
      }
    }

  std::vector<const Trajectory*> pool;
  for (const auto& play : demos.plays)
    for (const auto& tau : play.agents) pool.push_back(&tau);

  std::vector<double> disc_pow(T, 1.0);
  for (int t = 1; t < T; ++t) disc_pow[t] = disc_pow[t - 1] * spec.gamma;

  AdamState opt_omega(model.omega.size(), cfg.lr);
  AdamState opt_phi(model.phi.size(), cfg.lr);
  std::vector<double> grad_omega(model.omega.size()), grad_phi(model.phi.size());
  std::vector<double> r_table(static_cast<std::size_t>(T) * ns * na);
  std::vector<std::vector<double>> g_table(T, std::vector<double>(ns, 0.0));
  std::vector<double> coef_r(r_table.size()), coef_g(static_cast<std::size_t>(T) * ns);
  MlpWorkspace ws;
  TrainResult result;

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path);
    if (!log) throw ConfigError("mfirl_train: cannot open log file " + cfg.log_path);
    log << "epoch,objective,grad_norm_core,grad_norm_potential\n";
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // 1. Tabulate the current reward and potential at the empirical flow.
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < ns; ++s) {
        g_table[t][s] =
            mlp_forward(model.potential_spec, model.phi,
                        feats_g[static_cast<std::size_t>(t) * ns + s])[0];
        for (int a = 0; a < na; ++a) {
          std::size_t i = cell_index(t, s, a, ns, na);
          r_table[i] = mlp_forward(model.core_spec, model.omega, feats_r[i])[0];
        }
      }

    // 2. Shaped expected step rewards, used by the adaptive samplers.
    StepRewardTable shaped(r_table.size());
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
          std::size_t i = cell_index(t, s, a, ns, na);
          double val = r_table[i] - g_table[t][s];
          if (t + 1 < T) {
            const auto& row = trans[i];
            double exp_g = 0.0;
            for (int sp = 0; sp < ns; ++sp)
              if (row[sp] > 0.0) exp_g += row[sp] * g_table[t + 1][sp];
            val += spec.gamma * exp_g;
          }
          shaped[i] = val;
        }

    // 3. Refresh the samplers and draw proposals for the partition estimate.
    Policy samplers = train_adaptive_samplers(shaped, mu_hat, spec, cfg.sampler, rng);
    auto proposals = sample_proposals(samplers, mu_hat, spec, cfg.n_samples, rng);

    std::vector<double> log_terms(proposals.size());
    for (std::size_t k = 0; k < proposals.size(); ++k)
      log_terms[k] = reward_sum_from_tables(proposals[k].tau, r_table, g_table,
                                            spec.gamma, ns, na, true) -
                     proposals[k].log_q;
    const double lse = log_sum_exp(log_terms);
    const double log_z = lse - std::log(static_cast<double>(proposals.size()));
    std::vector<double> weights(proposals.size());
    for (std::size_t k = 0; k < proposals.size(); ++k)
      weights[k] = std::exp(log_terms[k] - lse);

    // 4. Demonstration minibatch.
    const int batch = std::min<int>(cfg.minibatch, static_cast<int>(pool.size()));
    std::vector<const Trajectory*> minibatch(batch);
    for (int x = 0; x < batch; ++x)
      minibatch[x] = pool[static_cast<std::size_t>(uniform01(rng) * pool.size())];

    double mean_demo = 0.0;
    for (const auto* tau : minibatch)
      mean_demo +=
          reward_sum_from_tables(*tau, r_table, g_table, spec.gamma, ns, na, true);
    mean_demo /= batch;
    result.likelihood.push_back(mean_demo - log_z);

    // 5. Aggregate gradient coefficients per network input cell. The demo
    //    side adds, the partition side subtracts with importance weights.
    std::fill(coef_r.begin(), coef_r.end(), 0.0);
    std::fill(coef_g.begin(), coef_g.end(), 0.0);
    auto accumulate = [&](const Trajectory& tau, double scale) {
      for (int t = 0; t < T; ++t) {
        const auto [s, a] = tau.steps[t];
        coef_r[cell_index(t, s, a, ns, na)] += scale * disc_pow[t];
        coef_g[static_cast<std::size_t>(t) * ns + s] -= scale * disc_pow[t];
        if (t + 1 < T)
          coef_g[static_cast<std::size_t>(t + 1) * ns + tau.steps[t + 1].first] +=
              scale * disc_pow[t] * spec.gamma;
      }
    };
    for (const auto* tau : minibatch) accumulate(*tau, 1.0 / batch);
    for (std::size_t k = 0; k < proposals.size(); ++k)
      if (weights[k] > 0.0) accumulate(proposals[k].tau, -weights[k]);

    // 6. Back-propagate each distinct cell once with its aggregated weight.
    std::fill(grad_omega.begin(), grad_omega.end(), 0.0);
    std::fill(grad_phi.begin(), grad_phi.end(), 0.0);
    for (std::size_t i = 0; i < coef_r.size(); ++i) {
      if (coef_r[i] == 0.0) continue;
      mlp_forward(model.core_spec, model.omega, feats_r[i], ws);
      const std::vector<double> cot = {coef_r[i]};
      mlp_accumulate_grad(model.core_spec, model.omega, ws, cot, grad_omega);
    }
    for (std::size_t i = 0; i < coef_g.size(); ++i) {
      if (coef_g[i] == 0.0) continue;
      mlp_forward(model.potential_spec, model.phi, feats_g[i], ws);
      const std::vector<double> cot = {coef_g[i]};
      mlp_accumulate_grad(model.potential_spec, model.phi, ws, cot, grad_phi);
    }

    // 7. Ascent step (Adam minimizes, so negate).
    for (auto& g : grad_omega) g = -g;
    for (auto& g : grad_phi) g = -g;
    adam_step(opt_omega, model.omega, grad_omega);
    adam_step(opt_phi, model.phi, grad_phi);

    if (log)
      log << epoch << ',' << result.likelihood.back() << ',' << l2_norm(grad_omega)
          << ',' << l2_norm(grad_phi) << '\n';
  }

  result.model = std::move(model);
  return result;
}

std::vector<PopulationTrajectory> estimate_population_demos(const DemoSet& demos,
                                                            int n_states,
                                                            int n_actions) {
  demos.validate();
  std::vector<PopulationTrajectory> out;
  out.reserve(demos.plays.size());
  for (const auto& play : demos.plays) {
    PopulationTrajectory traj(demos.horizon);
    for (int t = 0; t < demos.horizon; ++t) {
      MeanField mu(std::vector<double>(n_states, 0.0));
      PerStepPolicy pi(n_states, n_actions);
      std::vector<double> counts(static_cast<std::size_t>(n_states) * n_actions, 0.0);
      for (const auto& tau : play.agents) {
        const auto [s, a] = tau.steps[t];
        mu[s] += 1.0 / static_cast<double>(play.agents.size());
        counts[static_cast<std::size_t>(s) * n_actions + a] += 1.0;
      }
      for (int s = 0; s < n_states; ++s) {
        double row_sum = 0.0;
        for (int a = 0; a < n_actions; ++a)
          row_sum += counts[static_cast<std::size_t>(s) * n_actions + a];
        for (int a = 0; a < n_actions; ++a)
          pi(s, a) = row_sum > 0.0
                         ? counts[static_cast<std::size_t>(s) * n_actions + a] / row_sum
                         : 1.0 / n_actions;
      }
      traj[t] = {std::move(mu), std::move(pi)};
    }
    out.push_back(std::move(traj));
  }
  return out;
}

double population_reward(const MeanField& mu, const PerStepPolicy& pi,
                         const RewardFn& reward) {
  double total = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s) {
    if (mu[s] == 0.0) continue;
    for (std::size_t a = 0; a < pi.n_actions; ++a) {
      double q = pi(s, a);
      if (q > 0.0)
        total += mu[s] * q * reward(static_cast<int>(s), static_cast<int>(a), mu);
    }
  }
  return total;
}

namespace {

/// A sampled population trajectory: a deterministic action per (t, s) plus
/// the induced mean fields and the sampler log-density.
struct PopulationSample {
  std::vector<int> actions;  // T * |S|
  MeanFieldFlow flow;
  double log_q = 0.0;
};

PopulationSample roll_population(const std::vector<double>& logits, const MfgSpec& spec,
                                 std::mt19937_64& rng) {
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;
  PopulationSample sample;
  sample.actions.assign(static_cast<std::size_t>(T) * ns, 0);
  sample.flow.reserve(T);
  sample.flow.push_back(spec.mu0);
  for (int t = 0; t < T; ++t) {
    PerStepPolicy pi(ns, na);
    for (int s = 0; s < ns; ++s) {
      std::vector<double> row(na);
      for (int a = 0; a < na; ++a)
        row[a] = logits[cell_index(t, s, a, ns, na)];
      double lse = log_sum_exp(row);
      std::vector<double> probs(na);
      for (int a = 0; a < na; ++a) probs[a] = std::exp(row[a] - lse);
      int a = sample_categorical(probs, rng);
      sample.actions[static_cast<std::size_t>(t) * ns + s] = a;
      sample.log_q += row[a] - lse;
      pi(s, a) = 1.0;
    }
    if (t + 1 < T)
      sample.flow.push_back(mkv_step(sample.flow.back(), pi, spec.transition));
  }
  return sample;
}

}  // namespace

TrainResult mfgmdp_irl_train(const MfgSpec& spec, const DemoSet& demos,
                             const IrlConfig& cfg) {
  spec.validate();
  demos.validate();
  if (demos.horizon != spec.horizon)
    throw ConfigError("mfgmdp_irl_train: demo horizon != game horizon");
  const int ns = spec.n_states(), na = spec.n_actions(), T = spec.horizon;

  std::mt19937_64 rng(cfg.seed);
  RewardModel model = make_reward_model(ns, na, spec.gamma, cfg.hidden, cfg.init_scale,
                                        rng, /*shaped=*/false);
  auto pop_demos = estimate_population_demos(demos, ns, na);

  std::vector<double> disc_pow(T, 1.0);
  for (int t = 1; t < T; ++t) disc_pow[t] = disc_pow[t - 1] * spec.gamma;

  auto r_omega = [&model](int s, int a, const MeanField& mu) {
    return model.reward(s, a, mu);
  };

  auto population_return = [&](const PopulationSample& sample) {
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
      double rbar = 0.0;
      for (int s = 0; s < ns; ++s)
        if (sample.flow[t][s] > 0.0)
          rbar += sample.flow[t][s] *
                  r_omega(s, sample.actions[static_cast<std::size_t>(t) * ns + s],
                          sample.flow[t]);
      total += disc_pow[t] * rbar;
    }
    return total;
  };

  // Tabular sampler over deterministic per-state action choices, trained by
  // entropy-regularized score-function ascent on the population return.
  std::vector<double> logits(static_cast<std::size_t>(T) * ns * na, 0.0);
  AdamState opt_logits(logits.size(), 0.05);
  AdamState opt_omega(model.omega.size(), cfg.lr);
  std::vector<double> grad_omega(model.omega.size());
  MlpWorkspace ws;
  TrainResult result;
  constexpr int kSamplerBatch = 8;
  constexpr double kEntropyWeight = 0.1;

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path);
    if (!log) throw ConfigError("mfgmdp_irl_train: cannot open log file " + cfg.log_path);
    log << "epoch,objective,grad_norm_core,grad_norm_potential\n";
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // 1. Improve the sampler against the current reward.
    {
      std::vector<PopulationSample> batch(kSamplerBatch);
      std::vector<double> scores(kSamplerBatch);
      for (int k = 0; k < kSamplerBatch; ++k) {
        batch[k] = roll_population(logits, spec, rng);
        scores[k] = population_return(batch[k]) - kEntropyWeight * batch[k].log_q;
      }
      double baseline = 0.0;
      for (double v : scores) baseline += v;
      baseline /= kSamplerBatch;
      std::vector<double> grad_logits(logits.size(), 0.0);
      for (int k = 0; k < kSamplerBatch; ++k) {
        const double adv = (scores[k] - baseline) / kSamplerBatch;
        if (adv == 0.0) continue;
        for (int t = 0; t < T; ++t)
          for (int s = 0; s < ns; ++s) {
            std::vector<double> row(na);
            for (int a = 0; a < na; ++a) row[a] = logits[cell_index(t, s, a, ns, na)];
            double lse = log_sum_exp(row);
            int chosen = batch[k].actions[static_cast<std::size_t>(t) * ns + s];
            for (int a = 0; a < na; ++a) {
              double score = (a == chosen ? 1.0 : 0.0) - std::exp(row[a] - lse);
              grad_logits[cell_index(t, s, a, ns, na)] -= adv * score;  // ascent
            }
          }
      }
      adam_step(opt_logits, logits, grad_logits);
    }

    // 2. Partition estimate over sampled population trajectories.
    std::vector<PopulationSample> proposals(cfg.n_samples);
    std::vector<double> log_terms(cfg.n_samples);
    for (int k = 0; k < cfg.n_samples; ++k) {
      proposals[k] = roll_population(logits, spec, rng);
      log_terms[k] = population_return(proposals[k]) - proposals[k].log_q;
    }
    const double lse = log_sum_exp(log_terms);
    const double log_z = lse - std::log(static_cast<double>(cfg.n_samples));

    // 3. Objective value from the full set of population demonstrations.
    double mean_demo = 0.0;
    for (const auto& traj : pop_demos) {
      double total = 0.0;
      for (int t = 0; t < T; ++t)
        total += disc_pow[t] * population_reward(traj[t].mu, traj[t].pi, r_omega);
      mean_demo += total;
    }
    mean_demo /= static_cast<double>(pop_demos.size());
    result.likelihood.push_back(mean_demo - log_z);

    // 4. Gradient: demo side minus importance-weighted sampler side.
    std::fill(grad_omega.begin(), grad_omega.end(), 0.0);
    auto add_cell = [&](int s, int a, const MeanField& mu, double coef) {
      auto x = encode_features(s, a, mu, ns, na);
      mlp_forward(model.core_spec, model.omega, x, ws);
      const std::vector<double> cot = {coef};
      mlp_accumulate_grad(model.core_spec, model.omega, ws, cot, grad_omega);
    };
    for (const auto& traj : pop_demos)
      for (int t = 0; t < T; ++t)
        for (int s = 0; s < ns; ++s) {
          if (traj[t].mu[s] == 0.0) continue;
          for (int a = 0; a < na; ++a) {
            double q = traj[t].pi(s, a);
            if (q > 0.0)
              add_cell(s, a, traj[t].mu,
                       disc_pow[t] * traj[t].mu[s] * q /
                           static_cast<double>(pop_demos.size()));
          }
        }
    for (int k = 0; k < cfg.n_samples; ++k) {
      const double w = std::exp(log_terms[k] - lse);
      if (w < 1e-12) continue;
      for (int t = 0; t < T; ++t)
        for (int s = 0; s < ns; ++s) {
          double mass = proposals[k].flow[t][s];
          if (mass == 0.0) continue;
          add_cell(s, proposals[k].actions[static_cast<std::size_t>(t) * ns + s],
                   proposals[k].flow[t], -w * disc_pow[t] * mass);
        }
    }

    for (auto& g : grad_omega) g = -g;  // ascent
    adam_step(opt_omega, model.omega, grad_omega);

    if (log)
      log << epoch << ',' << result.likelihood.back() << ',' << l2_norm(grad_omega)
          << ",0\n";
  }

  result.model = std::move(model);
  return result;
}

}  // namespace mfg
