#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "mfgirl/types.hpp"

namespace mfg {

/// Expected immediate reward per (t, s, a), flattened (t * |S| + s) * |A| + a.
/// "Expected" because shaped rewards integrate the next-state potential term;
/// plain rewards are just r(s, a, mu_t).
using StepRewardTable = std::vector<double>;

/// Builds a StepRewardTable for a given flow. Solvers call this once per
/// fixed-point iteration.
using RewardTabler = std::function<StepRewardTable(const MeanFieldFlow&)>;

RewardTabler tabler_from_reward_fn(RewardFn r, const MfgSpec& spec);

inline std::size_t step_reward_index(const MfgSpec& spec, int t, int s, int a) {
  return (static_cast<std::size_t>(t) * spec.n_states() + s) * spec.n_actions() + a;
}

/// Soft Q and soft state values per step; V_t(s) = beta * log sum_a exp(Q_t(s,a)/beta).
struct SoftQTable {
  std::vector<std::vector<double>> q;  // T entries of |S|*|A|
  std::vector<std::vector<double>> v;  // T entries of |S|
};

struct SolverConfig {
  double beta = 1.0;
  double tolerance = 1e-10;  // mean-squared-error criterion over (t >= 1, s)
  int max_iterations = 500;
  double damping = 0.0;  // 0 = plain fixed-point iteration
};

struct Equilibrium {
  MeanFieldFlow flow;
  Policy policy;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Finite-horizon soft backward induction at temperature beta against a fixed
/// flow. Policies are softmax of Q/beta, computed with the max-shifted
/// log-sum-exp.
std::pair<SoftQTable, Policy> soft_backward_induction(const MeanFieldFlow& flow,
                                                      const StepRewardTable& rewards,
                                                      const MfgSpec& spec, double beta);

std::pair<SoftQTable, Policy> soft_backward_induction(const MeanFieldFlow& flow,
                                                      const RewardFn& reward,
                                                      const MfgSpec& spec, double beta);

/// One application of the equilibrium operator: flow -> induced flow of the
/// soft best response.
MeanFieldFlow ermfne_operator(const MeanFieldFlow& flow, const RewardTabler& tabler,
                              const MfgSpec& spec, double beta);

/// Fixed-point iteration from the uniform-policy flow. Non-convergence is
/// reported in the flag, never thrown.
Equilibrium solve_ermfne(const RewardTabler& tabler, const MfgSpec& spec,
                         const SolverConfig& cfg = {});

Equilibrium solve_ermfne(const RewardFn& reward, const MfgSpec& spec,
                         const SolverConfig& cfg = {});

/// Hard-max backward induction against a fixed flow; ties broken by uniform
/// mixing over argmax actions.
Policy hard_best_response(const MeanFieldFlow& flow, const StepRewardTable& rewards,
                          const MfgSpec& spec);

Policy hard_best_response(const MeanFieldFlow& flow, const RewardFn& reward,
                          const MfgSpec& spec);

/// Configuration for adaptive-sampler training. Tabular mode (exact backward
/// induction) is used whenever |S|*|A| <= tabular_threshold unless forced off.
struct SamplerTrainConfig {
  int tabular_threshold = 4096;
  int replay_capacity = 10000;
  int minibatch = 64;
  int y_actions = 16;
  int grad_steps = 200;
  double lr = 1e-3;
  std::vector<int> hidden = {64, 64};
  bool force_approximator = false;
};

/// Trains the per-step importance-sampling proposals against the reward table
/// evaluated at the fixed empirical flow, and returns them as a tabular
/// snapshot. Tabular mode equals soft backward induction exactly; the
/// approximator mode runs replay-buffer soft Q-learning per time index,
/// backward from T-2 (the T-1 sampler is the analytic softmax of the reward).
Policy train_adaptive_samplers(const StepRewardTable& rewards,
                               const MeanFieldFlow& empirical_flow, const MfgSpec& spec,
                               const SamplerTrainConfig& cfg, std::mt19937_64& rng);

}  // namespace mfg
