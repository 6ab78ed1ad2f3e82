#pragma once

#include <string>
#include <vector>

#include "mfgirl/types.hpp"

namespace mfg {

enum class EnvVariant { Original, New };

enum class EnvName { Invest, Malware, Virus, Rps, LeftRight };

/// Configuration for one benchmark game. Defaults follow the standard
/// evaluation setup (T = 50, gamma = 0.99, uniform initial field).
struct EnvConfig {
  EnvName name = EnvName::LeftRight;
  EnvVariant variant = EnvVariant::Original;
  int horizon = 50;
  double gamma = 0.99;

  // Invest
  double invest_d = 0.3;
  double invest_c = 0.2;
  double invest_alpha = 0.2;
  // The quality threshold is 4 under the original dynamics and 5 under new.
  double invest_q_original = 4.0;
  double invest_q_new = 5.0;
  // Malware
  double malware_k = 0.2;
  double malware_alpha = 0.5;
  double malware_chi_lo_new = 0.5;  // original chi ~ U(0,1); new chi ~ U(0.5,1)
  // Virus
  double virus_infect_original = 0.9;
  double virus_infect_new = 0.8;
  double virus_recovery = 0.3;
  double virus_distancing_cost = 0.5;
  // LeftRight
  double lr_slip_new = 0.2;
  // Rps
  double rps_slip_new = 0.2;
};

EnvName parse_env_name(const std::string& key);          // "invest|malware|virus|rps|lr"
EnvVariant parse_env_variant(const std::string& key);    // "original|new"
std::string env_name_key(EnvName name);
std::string env_variant_key(EnvVariant variant);

/// Builds the full game for one benchmark task. Stochastic quality
/// increments floor(chi * (10 - s)) are realized as exact discrete
/// distributions, never by sampling inside the transition model.
MfgSpec build_env(const EnvConfig& config);

/// <mu> = sum_s s * mu(s) for environments whose states are the integers
/// 0..|S|-1. Rejects categorical-state environments.
double mean_state(const MeanField& mu, const MfgSpec& spec);

/// one-hot(state) ++ one-hot(action) ++ mean-field probabilities.
std::vector<double> encode_features(int s, int a, const MeanField& mu, int n_states,
                                    int n_actions);

/// one-hot(state) ++ mean-field probabilities (potential-function input).
std::vector<double> encode_state_features(int s, const MeanField& mu, int n_states);

/// Exact distribution of floor(chi * span / divisor) for chi ~ U(lo, hi).
/// Returns probabilities for increments 0..span-1 (trailing zeros trimmed off
/// is not attempted; the vector always has span entries, or one entry {1.0}
/// when span == 0).
std::vector<double> floor_uniform_increment(int span, int divisor, double lo, double hi);

/// The Appendix-style Left-Right fixture: all agents start at center,
/// gamma = 1, two steps. Used by shaping tests.
MfgSpec build_left_right_center_fixture();

}  // namespace mfg
