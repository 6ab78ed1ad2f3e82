#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfgirl/envs.hpp"
#include "mfgirl/irl.hpp"
#include "mfgirl/solver.hpp"
#include "mfgirl/types.hpp"

namespace mfg {

/// KL(p || q) with natural log; 0 * log(0/x) = 0 and q = 0 where p > 0 gives
/// the +infinity sentinel. With `smoothed`, both arguments first get 1e-8
/// added to every entry and are renormalized.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                     bool smoothed = false);

/// Sum over t = 1..T-1 of KL(expert_t || learned_t).
double dev_mf(const MeanFieldFlow& expert_flow, const MeanFieldFlow& learned_flow,
              bool smoothed = false);

/// Sum over t = 0..T-1, s of expert_flow_t(s) * KL(expert row || learned row).
double dev_policy(const Policy& expert_policy, const Policy& learned_policy,
                  const MeanFieldFlow& expert_flow, bool smoothed = false);

struct MetricsRow {
  std::string env;
  std::string variant;
  std::string algorithm;
  int m_plays = 0;
  std::uint64_t seed = 0;
  double expected_return = 0.0;
  double dev_mf = 0.0;       // smoothed variant (training-time diagnostic)
  double dev_policy = 0.0;   // smoothed variant
  double dev_mf_raw = 0.0;   // +inf sentinel variant
  double dev_policy_raw = 0.0;
  double runtime_seconds = 0.0;
  std::string status = "ok";  // "ok", "non-converged", or an error summary
};

/// Solves the ERMFNE under the learned reward, scores its expected return
/// under the ground truth, and compares against the ground-truth equilibrium.
/// Non-convergence of either solve flags the row instead of throwing.
MetricsRow evaluate_reward(const RewardModel& model, const MfgSpec& ground_truth,
                           const SolverConfig& solver = {});

struct ExperimentConfig {
  EnvName env = EnvName::LeftRight;
  int horizon = 50;
  double gamma = 0.99;
  int n_agents = 100;
  std::vector<int> m_values = {1, 5, 10};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<std::string> algorithms = {"mfirl", "mfg-mdp"};
  // Plain fixed-point iteration cycles on some benchmarks (notably the
  // matching-pennies-like dynamics); half damping converges on all five.
  SolverConfig solver{.damping = 0.5};
  IrlConfig irl;
  std::string out_dir;
};

/// Full grid: demos from the original-dynamics expert equilibrium, training
/// per (M, seed, algorithm), evaluation under both variants. Expert reference
/// rows are included with algorithm = "expert". Per-row failures are recorded
/// in the status column; the run continues. When out_dir is non-empty, writes
/// metrics.csv, summary.csv (10%/50%/90% quantiles) and manifest.json there.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg);

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Median/10%/90% of expected_return, dev_mf and dev_policy across seeds per
/// (env, variant, algorithm, M) group, in row order of first appearance.
void write_summary_csv(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace mfg
