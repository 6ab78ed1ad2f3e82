#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mfgirl/nn.hpp"
#include "mfgirl/solver.hpp"
#include "mfgirl/types.hpp"

namespace mfg {

/// Learned reward: a core network r_omega over (one-hot state, one-hot
/// action, mean field) plus an optional shaping potential g_phi over (one-hot
/// state, mean field). The effective training reward is
///   r(s,a,mu_t) + gamma * E[g(s', mu_{t+1})] - g(s, mu_t),
/// with the potential treated as zero beyond the horizon, so the final step
/// carries only the -g(s, mu_{T-1}) correction. That convention keeps the
/// shaped and unshaped soft best responses exactly equal.
struct RewardModel {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.99;
  MlpSpec core_spec;
  MlpSpec potential_spec;
  std::vector<double> omega;
  std::vector<double> phi;
  bool shaped = true;  // false: potential ignored (population-level baseline)

  double reward(int s, int a, const MeanField& mu) const;
  double potential(int s, const MeanField& mu) const;
};

/// Fresh model with uniform parameter init in [-init_scale, init_scale].
RewardModel make_reward_model(int n_states, int n_actions, double gamma,
                              const std::vector<int>& hidden, double init_scale,
                              std::mt19937_64& rng, bool shaped = true);

/// Plain (unshaped) reward function view of the model.
RewardFn reward_fn_of(const RewardModel& model);

/// Tabler for the shaped step reward; batches network evaluations per flow.
RewardTabler tabler_from_model(const RewardModel& model, const MfgSpec& spec);

/// Empirical mean-field flow: average over plays of the per-play empirical
/// state distributions.
MeanFieldFlow estimate_expert_flow(const DemoSet& demos, int n_states);

/// Empirical per-step expert policy weighted by state visitation; rows with
/// no visits fall back to uniform.
Policy estimate_expert_policy(const DemoSet& demos, int n_states, int n_actions);

/// Discounted shaped reward along one trajectory with fields pinned to
/// `flow`.
double demo_reward_sum(const Trajectory& tau, const RewardModel& model,
                       const MeanFieldFlow& flow);

/// One proposal trajectory with its log-density under the samplers.
struct SampledTrajectory {
  Trajectory tau;
  double log_q = 0.0;
};

/// Draws `count` trajectories from the per-step samplers with transitions
/// evaluated at the pinned flow.
std::vector<SampledTrajectory> sample_proposals(const Policy& samplers,
                                                const MeanFieldFlow& flow,
                                                const MfgSpec& spec, int count,
                                                std::mt19937_64& rng);

/// Importance-sampled log partition estimate, computed with a max-shifted
/// log-sum-exp. Throws std::invalid_argument on a zero-probability proposal.
double estimate_partition(const std::vector<SampledTrajectory>& samples,
                          const RewardModel& model, const MeanFieldFlow& flow,
                          const MfgSpec& spec);

struct ObjectiveGrads {
  double value = 0.0;
  std::vector<double> grad_omega;
  std::vector<double> grad_phi;
};

/// Simplified-likelihood value and ascent gradients: the demo-side mean of
/// discounted reward gradients minus the self-normalized importance-weighted
/// sampler-side term. `log_z` enters the value only; the gradient weights are
/// the softmax of (reward sum - log_q) over the sampler batch, so passing
/// samples that enumerate all trajectories with log_q equal to the base
/// measure yields the exact maximum-entropy gradient.
ObjectiveGrads mfirl_objective_and_grads(const std::vector<Trajectory>& demo_batch,
                                         const RewardModel& model,
                                         const MeanFieldFlow& flow, double log_z,
                                         const std::vector<SampledTrajectory>& samples);

struct IrlConfig {
  int epochs = 200;
  int minibatch = 32;
  int n_samples = 256;        // proposal trajectories per epoch
  double lr = 1e-4;
  double init_scale = 0.1;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;
  SamplerTrainConfig sampler;
  std::string log_path;       // optional CSV training log
};

struct TrainResult {
  RewardModel model;
  std::vector<double> likelihood;  // per-epoch objective value
};

/// Maximum-likelihood reward recovery against individual-level demonstrations
/// (adaptive importance-sampled partition, shaped reward).
TrainResult mfirl_train(const MfgSpec& spec, const DemoSet& demos, const IrlConfig& cfg);

/// One step of a population-level demonstration: the empirical field and the
/// empirical per-step policy recovered from a single game play.
struct PopulationStep {
  MeanField mu;
  PerStepPolicy pi;
};
using PopulationTrajectory = std::vector<PopulationStep>;

/// One population trajectory per game play; unvisited policy rows uniform.
std::vector<PopulationTrajectory> estimate_population_demos(const DemoSet& demos,
                                                            int n_states, int n_actions);

/// Population reward r-bar(mu, pi) = sum_s mu(s) sum_a pi(a|s) r(s, a, mu).
double population_reward(const MeanField& mu, const PerStepPolicy& pi,
                         const RewardFn& reward);

/// Population-level baseline: maximum-entropy IRL on the induced single-agent
/// game over mean fields, with logit samplers over deterministic per-state
/// action choices. No shaping.
TrainResult mfgmdp_irl_train(const MfgSpec& spec, const DemoSet& demos,
                             const IrlConfig& cfg);

}  // namespace mfg
