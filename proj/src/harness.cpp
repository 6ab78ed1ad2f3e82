#include "mfgirl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mfgirl/core.hpp"
#include "mfgirl/io.hpp"

namespace mfg {

namespace {

std::vector<double> smooth(const std::vector<double>& p) {
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = p[i] + 1e-8;
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double kl_raw(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double pos = p * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                     bool smoothed) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: length mismatch");
  if (smoothed) return kl_raw(smooth(p), smooth(q));
  return kl_raw(p, q);
}

double dev_mf(const MeanFieldFlow& expert_flow, const MeanFieldFlow& learned_flow,
              bool smoothed) {
  if (expert_flow.size() != learned_flow.size())
    throw std::invalid_argument("dev_mf: horizon mismatch");
  double acc = 0.0;
  for (std::size_t t = 1; t < expert_flow.size(); ++t)
    acc += kl_divergence(expert_flow[t].p, learned_flow[t].p, smoothed);
  return acc;
}

double dev_policy(const Policy& expert_policy, const Policy& learned_policy,
                  const MeanFieldFlow& expert_flow, bool smoothed) {
  if (expert_policy.horizon() != learned_policy.horizon() ||
      expert_policy.horizon() != expert_flow.size())
    throw std::invalid_argument("dev_policy: shape mismatch");
  double acc = 0.0;
  for (std::size_t t = 0; t < expert_policy.horizon(); ++t) {
    const auto& pe = expert_policy[t];
    const auto& pl = learned_policy[t];
    if (pe.n_states != pl.n_states || pe.n_actions != pl.n_actions)
      throw std::invalid_argument("dev_policy: shape mismatch");
    for (std::size_t s = 0; s < pe.n_states; ++s) {
      double w = expert_flow[t][s];
      if (w == 0.0) continue;  // weight-zero states contribute nothing
      std::vector<double> rowe(pe.n_actions), rowl(pe.n_actions);
      for (std::size_t a = 0; a < pe.n_actions; ++a) {
        rowe[a] = pe(s, a);
        rowl[a] = pl(s, a);
      }
      acc += w * kl_divergence(rowe, rowl, smoothed);
    }
  }
  return acc;
}

MetricsRow evaluate_reward(const RewardModel& model, const MfgSpec& ground_truth,
                           const SolverConfig& solver) {
  if (!ground_truth.reward)
    throw ConfigError("evaluate_reward: ground-truth spec has no reward");
  MetricsRow row;
  Equilibrium expert = solve_ermfne(*ground_truth.reward, ground_truth, solver);
  Equilibrium learned =
      solve_ermfne(tabler_from_model(model, ground_truth), ground_truth, solver);
  if (!expert.converged || !learned.converged) row.status = "non-converged";
  // The equilibrium is induced by the learned reward; the score is taken
  // under the ground truth, without the entropy bonus.
  row.expected_return = expected_return(learned.flow, learned.policy, ground_truth);
  row.dev_mf = dev_mf(expert.flow, learned.flow, /*smoothed=*/true);
  row.dev_policy = dev_policy(expert.policy, learned.policy, expert.flow, true);
  row.dev_mf_raw = dev_mf(expert.flow, learned.flow, false);
  row.dev_policy_raw = dev_policy(expert.policy, learned.policy, expert.flow, false);
  return row;
}

std::string metrics_csv_header() {
  return "env,variant,algorithm,M,seed,expected_return,dev_mf,dev_policy,"
         "dev_mf_raw,dev_policy_raw,runtime_seconds,status";
}

std::string metrics_csv_line(const MetricsRow& row) {
  std::ostringstream out;
  out << row.env << ',' << row.variant << ',' << sanitize(row.algorithm) << ','
      << row.m_plays << ',' << row.seed << ',' << fmt(row.expected_return) << ','
      << fmt(row.dev_mf) << ',' << fmt(row.dev_policy) << ',' << fmt(row.dev_mf_raw)
      << ',' << fmt(row.dev_policy_raw) << ',' << fmt(row.runtime_seconds) << ','
      << sanitize(row.status);
  return out.str();
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << metrics_csv_header() << '\n';
  for (const auto& row : rows) out << metrics_csv_line(row) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header())
    throw ConfigError(path + ": unexpected CSV header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw ConfigError(path + ": malformed row");
    MetricsRow row;
    row.env = fields[0];
    row.variant = fields[1];
    row.algorithm = fields[2];
    row.m_plays = std::stoi(fields[3]);
    row.seed = std::stoull(fields[4]);
    row.expected_return = std::stod(fields[5]);
    row.dev_mf = std::stod(fields[6]);
    row.dev_policy = std::stod(fields[7]);
    row.dev_mf_raw = std::stod(fields[8]);
    row.dev_policy_raw = std::stod(fields[9]);
    row.runtime_seconds = std::stod(fields[10]);
    row.status = fields[11];
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "env,variant,algorithm,M,metric,q10,median,q90,n\n";
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsRow*>> groups;
  for (const auto& row : rows) {
    std::string key =
        row.env + ',' + row.variant + ',' + row.algorithm + ',' + std::to_string(row.m_plays);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&row);
  }
  for (const auto& key : order) {
    const auto& members = groups[key];
    auto emit = [&](const char* metric, auto getter) {
      std::vector<double> values;
      for (const auto* row : members)
        if (row->status == "ok") values.push_back(getter(*row));
      if (values.empty()) return;
      out << key << ',' << metric << ',' << fmt(quantile(values, 0.1)) << ','
          << fmt(quantile(values, 0.5)) << ',' << fmt(quantile(values, 0.9)) << ','
          << values.size() << '\n';
    };
    emit("expected_return", [](const MetricsRow& r) { return r.expected_return; });
    emit("dev_mf", [](const MetricsRow& r) { return r.dev_mf; });
    emit("dev_policy", [](const MetricsRow& r) { return r.dev_policy; });
  }
}

namespace {

DemoSet generate_demos(const MfgSpec& spec, const Policy& expert_policy, int n_agents,
                       int m_plays, std::uint64_t seed) {
  DemoSet demos;
  demos.horizon = spec.horizon;
  demos.n_agents = n_agents;
  for (int j = 0; j < m_plays; ++j)
    demos.plays.push_back(
        sample_game_play(spec, expert_policy, n_agents, seed * 1000003ULL + j));
  return demos;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  return nlohmann::ordered_json{
      {"env", env_name_key(cfg.env)},
      {"horizon", cfg.horizon},
      {"gamma", cfg.gamma},
      {"n_agents", cfg.n_agents},
      {"m_values", cfg.m_values},
      {"seeds", cfg.seeds},
      {"algorithms", cfg.algorithms},
      {"solver",
       {{"beta", cfg.solver.beta},
        {"tolerance", cfg.solver.tolerance},
        {"max_iterations", cfg.solver.max_iterations},
        {"damping", cfg.solver.damping}}},
      {"irl",
       {{"epochs", cfg.irl.epochs},
        {"minibatch", cfg.irl.minibatch},
        {"n_samples", cfg.irl.n_samples},
        {"lr", cfg.irl.lr},
        {"init_scale", cfg.irl.init_scale},
        {"hidden", cfg.irl.hidden}}}};
}

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("run_experiment: seed list is empty");
  for (const auto& algo : cfg.algorithms)
    if (algo != "mfirl" && algo != "mfg-mdp")
      throw ConfigError("run_experiment: unknown algorithm '" + algo + "'");

  EnvConfig env_cfg;
  env_cfg.name = cfg.env;
  env_cfg.horizon = cfg.horizon;
  env_cfg.gamma = cfg.gamma;
  const std::string env_key = env_name_key(cfg.env);

  std::vector<MetricsRow> rows;
  std::map<std::string, MfgSpec> specs;
  std::map<std::string, Equilibrium> experts;
  for (EnvVariant variant : {EnvVariant::Original, EnvVariant::New}) {
    env_cfg.variant = variant;
    const std::string key = env_variant_key(variant);
    specs[key] = build_env(env_cfg);
    experts[key] = solve_ermfne(*specs[key].reward, specs[key], cfg.solver);
    MetricsRow row;
    row.env = env_key;
    row.variant = key;
    row.algorithm = "expert";
    row.expected_return =
        expected_return(experts[key].flow, experts[key].policy, specs[key]);
    if (!experts[key].converged) row.status = "non-converged";
    rows.push_back(row);
  }

  const MfgSpec& train_spec = specs["original"];
  const Policy& expert_policy = experts["original"].policy;

  for (int m : cfg.m_values)
    for (std::uint64_t seed : cfg.seeds) {
      DemoSet demos = generate_demos(train_spec, expert_policy, cfg.n_agents, m, seed);
      for (const auto& algo : cfg.algorithms) {
        IrlConfig irl_cfg = cfg.irl;
        irl_cfg.seed = seed;
        auto start = std::chrono::steady_clock::now();
        try {
          TrainResult trained = algo == "mfirl" ? mfirl_train(train_spec, demos, irl_cfg)
                                                : mfgmdp_irl_train(train_spec, demos,
                                                                   irl_cfg);
          double train_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
          for (const auto& [variant_key, gt_spec] : specs) {
            MetricsRow row = evaluate_reward(trained.model, gt_spec, cfg.solver);
            row.env = env_key;
            row.variant = variant_key;
            row.algorithm = algo;
            row.m_plays = m;
            row.seed = seed;
            row.runtime_seconds = train_seconds;
            rows.push_back(std::move(row));
          }
        } catch (const std::exception& e) {
          MetricsRow row;
          row.env = env_key;
          row.algorithm = algo;
          row.m_plays = m;
          row.seed = seed;
          row.status = std::string("error: ") + e.what();
          row.runtime_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
          rows.push_back(std::move(row));
        }
      }
    }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto dir = std::filesystem::path(cfg.out_dir);
    write_metrics_csv(rows, (dir / "metrics.csv").string());
    write_summary_csv(rows, (dir / "summary.csv").string());
    auto config_json = config_to_json(cfg);
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%zx",
                  std::hash<std::string>{}(config_json.dump()));
    nlohmann::ordered_json manifest{{"config", config_json},
                                    {"config_hash", hash_hex},
                                    {"format_version", 1}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  return rows;
}

}  // namespace mfg
