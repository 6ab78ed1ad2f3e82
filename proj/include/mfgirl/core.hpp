#pragma once

#include <cstdint>
#include <random>

#include "mfgirl/types.hpp"

namespace mfg {

/// One step of the population-level McKean-Vlasov update:
/// mu'(s') = sum_s mu(s) sum_a pi(a|s) p(s'|s,a,mu).
MeanField mkv_step(const MeanField& mu, const PerStepPolicy& pi_t,
                   const TransitionModel& p);

/// Flow induced by a policy: element 0 is mu0, element t+1 follows by MKV.
MeanFieldFlow induce_flow(const Policy& pi, const MfgSpec& spec);

/// State marginals of a representative agent following `pi` while the
/// population is pinned to `flow` (the two need not be consistent).
std::vector<MeanField> agent_marginals(const Policy& pi, const MeanFieldFlow& flow,
                                       const MfgSpec& spec);

/// Exact discounted expected return of a representative agent (no sampling).
double expected_return(const MeanFieldFlow& flow, const Policy& pi, const MfgSpec& spec);

/// expected_return plus the discounted Shannon-entropy bonus (natural log).
double entropy_regularized_return(const MeanFieldFlow& flow, const Policy& pi,
                                  const MfgSpec& spec, double beta);

/// log Pr(tau) under the product-form trajectory model; -inf for
/// zero-probability trajectories.
double trajectory_log_prob(const Trajectory& tau, const Policy& pi,
                           const MeanFieldFlow& flow, const MfgSpec& spec);

/// Unnormalized log-density of the energy-based trajectory model:
/// log mu0(s0) + sum_t gamma^t r(s_t,a_t,mu_t) + sum_{t<T-1} log p(...).
double energy_log_weight(const Trajectory& tau, const MeanFieldFlow& flow,
                         const RewardFn& reward, const MfgSpec& spec);

/// Simulates one game play of `n_agents` agents following `pi`. Transitions
/// couple through the live empirical mean field of the N agents, not the
/// limit flow. Deterministic given the seed.
GamePlay sample_game_play(const MfgSpec& spec, const Policy& pi, int n_agents,
                          std::uint64_t rng_seed);

/// Uniform double in [0, 1) with a fixed, engine-independent construction.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a finite distribution (probabilities need not be
/// exactly normalized; the last positive entry absorbs rounding slack).
int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng);

}  // namespace mfg
