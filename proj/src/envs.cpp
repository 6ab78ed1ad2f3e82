#include "mfgirl/envs.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

std::vector<std::string> numeric_labels(int n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

double mean_state_raw(const MeanField& mu) {
  double m = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s) m += static_cast<double>(s) * mu[s];
  return m;
}

MfgSpec build_invest(const EnvConfig& cfg) {
  MfgSpec spec;
  spec.state_labels = numeric_labels(10);
  spec.action_labels = {"hold", "invest"};
  spec.numeric_states = true;
  spec.mu0 = MeanField::uniform(10);
  spec.gamma = cfg.gamma;
  spec.horizon = cfg.horizon;
  const double q =
      cfg.variant == EnvVariant::Original ? cfg.invest_q_original : cfg.invest_q_new;
  spec.transition = [q](int s, int a, const MeanField& mu) {
    std::vector<double> row(10, 0.0);
    if (a == 0) {
      row[s] = 1.0;
      return row;
    }
    const int divisor = mean_state_raw(mu) < q ? 1 : 2;
    auto inc = floor_uniform_increment(10 - s, divisor, 0.0, 1.0);
    for (std::size_t k = 0; k < inc.size(); ++k) row[s + static_cast<int>(k)] += inc[k];
    return row;
  };
  const double d = cfg.invest_d, c = cfg.invest_c, alpha = cfg.invest_alpha;
  spec.reward = [d, c, alpha](int s, int a, const MeanField& mu) {
    return d * s / 10.0 - c * mean_state_raw(mu) - alpha * a;
  };
  return spec;
}

MfgSpec build_malware(const EnvConfig& cfg) {
  MfgSpec spec;
  spec.state_labels = numeric_labels(10);
  spec.action_labels = {"nothing", "intervene"};
  spec.numeric_states = true;
  spec.mu0 = MeanField::uniform(10);
  spec.gamma = cfg.gamma;
  spec.horizon = cfg.horizon;
  const double chi_lo = cfg.variant == EnvVariant::Original ? 0.0 : cfg.malware_chi_lo_new;
  spec.transition = [chi_lo](int s, int a, const MeanField&) {
    std::vector<double> row(10, 0.0);
    if (a == 1) {
      row[0] = 1.0;  // intervening resets to the most healthy level
      return row;
    }
    auto inc = floor_uniform_increment(10 - s, 1, chi_lo, 1.0);
    for (std::size_t k = 0; k < inc.size(); ++k) row[s + static_cast<int>(k)] += inc[k];
    return row;
  };
  const double k = cfg.malware_k, alpha = cfg.malware_alpha;
  spec.reward = [k, alpha](int s, int a, const MeanField& mu) {
    return -(k + mean_state_raw(mu)) * s / 10.0 - alpha * a;
  };
  return spec;
}

// States: 0 = susceptible, 1 = infected. Actions: 0 = go out, 1 = distance.
MfgSpec build_virus(const EnvConfig& cfg) {
  MfgSpec spec;
  spec.state_labels = {"S", "I"};
  spec.action_labels = {"U", "D"};
  spec.mu0 = MeanField::uniform(2);
  spec.gamma = cfg.gamma;
  spec.horizon = cfg.horizon;
  const double c =
      cfg.variant == EnvVariant::Original ? cfg.virus_infect_original : cfg.virus_infect_new;
  const double infect = c * c;
  const double recovery = cfg.virus_recovery;
  spec.transition = [infect, recovery](int s, int a, const MeanField& mu) {
    std::vector<double> row(2, 0.0);
    if (s == 1) {
      row[0] = recovery;
      row[1] = 1.0 - recovery;
    } else if (a == 0) {
      row[1] = infect * mu[1];
      row[0] = 1.0 - row[1];
    } else {
      row[0] = 1.0;
    }
    return row;
  };
  const double dcost = cfg.virus_distancing_cost;
  // The displayed reward penalizes the distancing *action*; the state space
  // has no D element.
  spec.reward = [dcost](int s, int a, const MeanField&) {
    return -(s == 1 ? 1.0 : 0.0) - dcost * (a == 1 ? 1.0 : 0.0);
  };
  return spec;
}

MfgSpec build_rps(const EnvConfig& cfg) {
  MfgSpec spec;
  spec.state_labels = {"R", "P", "S"};
  spec.action_labels = {"R", "P", "S"};
  spec.mu0 = MeanField::uniform(3);
  spec.gamma = cfg.gamma;
  spec.horizon = cfg.horizon;
  const double slip = cfg.variant == EnvVariant::Original ? 0.0 : cfg.rps_slip_new;
  spec.transition = [slip](int, int a, const MeanField&) {
    std::vector<double> row(3, slip / 3.0);
    row[a] += 1.0 - slip;
    return row;
  };
  spec.reward = [](int s, int, const MeanField& mu) {
    switch (s) {
      case 0: return 2.0 * mu[2] - 1.0 * mu[1];
      case 1: return 4.0 * mu[0] - 2.0 * mu[2];
      default: return 6.0 * mu[1] - 3.0 * mu[0];
    }
  };
  return spec;
}

// States: 0 = C, 1 = L, 2 = R. Actions: 0 = move left, 1 = move right.
MfgSpec build_left_right(const EnvConfig& cfg) {
  MfgSpec spec;
  spec.state_labels = {"C", "L", "R"};
  spec.action_labels = {"L", "R"};
  spec.mu0 = MeanField(std::vector<double>{0.0, 0.5, 0.5});
  spec.gamma = cfg.gamma;
  spec.horizon = cfg.horizon;
  const double slip = cfg.variant == EnvVariant::Original ? 0.0 : cfg.lr_slip_new;
  spec.transition = [slip](int, int a, const MeanField&) {
    std::vector<double> row(3, 0.0);
    row[1] = slip / 2.0;
    row[2] = slip / 2.0;
    row[a + 1] += 1.0 - slip;
    return row;
  };
  spec.reward = [](int s, int, const MeanField& mu) {
    if (s == 1) return -mu[1];
    if (s == 2) return -mu[2];
    return 0.0;
  };
  return spec;
}

}  // namespace

std::vector<double> floor_uniform_increment(int span, int divisor, double lo, double hi) {
  if (span <= 0) return {1.0};
  if (!(hi > lo)) throw std::invalid_argument("floor_uniform_increment: empty support");
  std::vector<double> probs(span, 0.0);
  const double width = hi - lo;
  for (int k = 0; k < span; ++k) {
    // chi-preimage of {floor(chi * span / divisor) == k}, intersected with [lo, hi).
    double a = static_cast<double>(divisor) * k / span;
    double b = static_cast<double>(divisor) * (k + 1) / span;
    double overlap = std::min(b, hi) - std::max(a, lo);
    if (overlap > 0.0) probs[k] = overlap / width;
  }
  return probs;
}

EnvName parse_env_name(const std::string& key) {
  if (key == "invest") return EnvName::Invest;
  if (key == "malware") return EnvName::Malware;
  if (key == "virus") return EnvName::Virus;
  if (key == "rps") return EnvName::Rps;
  if (key == "lr") return EnvName::LeftRight;
  throw ConfigError("unknown environment '" + key + "'");
}

EnvVariant parse_env_variant(const std::string& key) {
  if (key == "original") return EnvVariant::Original;
  if (key == "new") return EnvVariant::New;
  throw ConfigError("unknown variant '" + key + "'");
}

std::string env_name_key(EnvName name) {
  switch (name) {
    case EnvName::Invest: return "invest";
    case EnvName::Malware: return "malware";
    case EnvName::Virus: return "virus";
    case EnvName::Rps: return "rps";
    default: return "lr";
  }
}

std::string env_variant_key(EnvVariant variant) {
  return variant == EnvVariant::Original ? "original" : "new";
}

MfgSpec build_env(const EnvConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("build_env: horizon must be >= 1");
  switch (cfg.name) {
    case EnvName::Invest: return build_invest(cfg);
    case EnvName::Malware: return build_malware(cfg);
    case EnvName::Virus: return build_virus(cfg);
    case EnvName::Rps: return build_rps(cfg);
    case EnvName::LeftRight: return build_left_right(cfg);
  }
  throw ConfigError("build_env: unknown environment");
}

double mean_state(const MeanField& mu, const MfgSpec& spec) {
  if (!spec.numeric_states)
    throw std::invalid_argument("mean_state: environment has categorical states");
  if (mu.size() != static_cast<std::size_t>(spec.n_states()))
    throw std::invalid_argument("mean_state: dimension mismatch");
  return mean_state_raw(mu);
}

std::vector<double> encode_features(int s, int a, const MeanField& mu, int n_states,
                                    int n_actions) {
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions ||
      mu.size() != static_cast<std::size_t>(n_states))
    throw std::invalid_argument("encode_features: index out of range");
  std::vector<double> x(n_states + n_actions + n_states, 0.0);
  x[s] = 1.0;
  x[n_states + a] = 1.0;
  for (int i = 0; i < n_states; ++i) x[n_states + n_actions + i] = mu[i];
  return x;
}

std::vector<double> encode_state_features(int s, const MeanField& mu, int n_states) {
  if (s < 0 || s >= n_states || mu.size() != static_cast<std::size_t>(n_states))
    throw std::invalid_argument("encode_state_features: index out of range");
  std::vector<double> x(2 * n_states, 0.0);
  x[s] = 1.0;
  for (int i = 0; i < n_states; ++i) x[n_states + i] = mu[i];
  return x;
}

MfgSpec build_left_right_center_fixture() {
  EnvConfig cfg;
  cfg.name = EnvName::LeftRight;
  cfg.variant = EnvVariant::Original;
  cfg.horizon = 2;
  cfg.gamma = 1.0;
  MfgSpec spec = build_env(cfg);
  spec.mu0 = MeanField(std::vector<double>{1.0, 0.0, 0.0});
  return spec;
}

}  // namespace mfg
