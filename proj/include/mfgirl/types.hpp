#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

/// Thrown when a run is mis-configured (unknown env, missing reward, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a computation produces non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kProbTol = 1e-9;

inline double neg_inf() { return -std::numeric_limits<double>::infinity(); }

/// Probability vector over states at one time step.
struct MeanField {
  std::vector<double> p;

  MeanField() = default;
  explicit MeanField(std::vector<double> probs) : p(std::move(probs)) {}

  std::size_t size() const { return p.size(); }
  double operator[](std::size_t s) const { return p[s]; }
  double& operator[](std::size_t s) { return p[s]; }

  static MeanField uniform(std::size_t n) {
    return MeanField(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }
  static MeanField point_mass(std::size_t n, std::size_t s) {
    std::vector<double> v(n, 0.0);
    v.at(s) = 1.0;
    return MeanField(std::move(v));
  }

  void validate() const {
    double sum = 0.0;
    for (double x : p) {
      if (!(x >= 0.0)) throw std::invalid_argument("MeanField: negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kProbTol)
      throw std::invalid_argument("MeanField: entries sum to " + std::to_string(sum));
  }

  // Normalization after repeated updates; throws if the drift is more than
  // rounding noise instead of silently clamping.
  void renormalize(double max_drift = 1e-6) {
    double sum = 0.0;
    for (double x : p) sum += x;
    if (std::abs(sum - 1.0) > max_drift)
      throw NumericError("MeanField: mass drifted to " + std::to_string(sum));
    for (double& x : p) x /= sum;
  }
};

/// Length-T sequence of mean fields.
using MeanFieldFlow = std::vector<MeanField>;

/// Row-stochastic |S| x |A| matrix: probs(s, a) = pi_t(a | s).
struct PerStepPolicy {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;  // row-major

  PerStepPolicy() = default;
  PerStepPolicy(std::size_t ns, std::size_t na, double fill = 0.0)
      : n_states(ns), n_actions(na), probs(ns * na, fill) {}

  double operator()(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }
  double& operator()(std::size_t s, std::size_t a) { return probs[s * n_actions + a]; }

  static PerStepPolicy uniform(std::size_t ns, std::size_t na) {
    return PerStepPolicy(ns, na, 1.0 / static_cast<double>(na));
  }

  void validate() const {
    for (std::size_t s = 0; s < n_states; ++s) {
      double sum = 0.0;
      for (std::size_t a = 0; a < n_actions; ++a) {
        double x = (*this)(s, a);
        if (!(x >= 0.0)) throw std::invalid_argument("PerStepPolicy: negative entry");
        sum += x;
      }
      if (std::abs(sum - 1.0) > kProbTol)
        throw std::invalid_argument("PerStepPolicy: row does not sum to 1");
    }
  }
};

/// Time-varying policy: one row-stochastic matrix per step.
struct Policy {
  std::vector<PerStepPolicy> steps;

  Policy() = default;
  explicit Policy(std::vector<PerStepPolicy> s) : steps(std::move(s)) {}

  std::size_t horizon() const { return steps.size(); }
  PerStepPolicy& operator[](std::size_t t) { return steps[t]; }
  const PerStepPolicy& operator[](std::size_t t) const { return steps[t]; }

  static Policy uniform(std::size_t T, std::size_t ns, std::size_t na) {
    return Policy(std::vector<PerStepPolicy>(T, PerStepPolicy::uniform(ns, na)));
  }
};

/// One agent's state-action record over the full horizon.
struct Trajectory {
  std::vector<std::pair<int, int>> steps;  // (state, action)

  std::size_t horizon() const { return steps.size(); }
};

/// One simultaneous rollout of all N agents.
struct GamePlay {
  std::vector<Trajectory> agents;
  MeanFieldFlow empirical_flow;
};

/// M game plays of N agent trajectories each.
struct DemoSet {
  std::vector<GamePlay> plays;
  int horizon = 0;
  int n_agents = 0;

  int n_plays() const { return static_cast<int>(plays.size()); }

  void validate() const {
    for (const auto& play : plays) {
      if (static_cast<int>(play.agents.size()) != n_agents)
        throw std::invalid_argument("DemoSet: play with wrong agent count");
      for (const auto& tau : play.agents)
        if (static_cast<int>(tau.horizon()) != horizon)
          throw std::invalid_argument("DemoSet: trajectory with wrong horizon");
    }
  }
};

/// p(. | s, a, mu): distribution over next states.
using TransitionModel =
    std::function<std::vector<double>(int s, int a, const MeanField& mu)>;

/// r(s, a, mu).
using RewardFn = std::function<double(int s, int a, const MeanField& mu)>;

/// A complete finite mean-field game. The reward is optional: it is absent
/// in the IRL setting where only dynamics are known.
struct MfgSpec {
  std::vector<std::string> state_labels;
  std::vector<std::string> action_labels;
  TransitionModel transition;
  std::optional<RewardFn> reward;
  MeanField mu0;
  double gamma = 0.99;
  int horizon = 1;
  bool numeric_states = false;  // true when states are the integers 0..|S|-1

  int n_states() const { return static_cast<int>(state_labels.size()); }
  int n_actions() const { return static_cast<int>(action_labels.size()); }

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0) && gamma != 1.0)
      throw std::invalid_argument("MfgSpec: gamma out of range");
    if (horizon < 1) throw std::invalid_argument("MfgSpec: horizon must be >= 1");
    if (static_cast<int>(mu0.size()) != n_states())
      throw std::invalid_argument("MfgSpec: mu0 has wrong length");
    mu0.validate();
  }
};

}  // namespace mfg
