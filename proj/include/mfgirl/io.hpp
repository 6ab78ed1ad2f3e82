#pragma once

#include <string>

#include "mfgirl/irl.hpp"
#include "mfgirl/solver.hpp"
#include "mfgirl/types.hpp"

namespace mfg {

/// Demonstration file: the plays plus the metadata needed to rebuild the
/// generating game. JSON layout:
///   {version, env, variant, T, N, M, gamma, plays}
/// where plays is M lists of N trajectories of T [state, action] pairs.
struct DemoFile {
  DemoSet demos;
  std::string env = "lr";
  std::string variant = "original";
  double gamma = 0.99;
};

void save_demos(const DemoFile& file, const std::string& path);
DemoFile load_demos(const std::string& path);

/// Reward model JSON: {version, algorithm, env, n_states, n_actions, gamma,
/// shaped, core: {spec, params}, potential: {spec, params}}.
void save_reward_model(const RewardModel& model, const std::string& path,
                       const std::string& env = "", const std::string& algorithm = "");
RewardModel load_reward_model(const std::string& path, std::string* env = nullptr,
                              std::string* algorithm = nullptr);

/// Equilibrium JSON: {converged, iterations, residual, flow, policy}.
void save_equilibrium(const Equilibrium& eq, const std::string& path);
Equilibrium load_equilibrium(const std::string& path);

}  // namespace mfg
