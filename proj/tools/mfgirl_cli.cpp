// Command-line front end: expert demo generation, IRL training, reward
// evaluation, and the canned benchmark reproduction suite.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfgirl/core.hpp"
#include "mfgirl/envs.hpp"
#include "mfgirl/harness.hpp"
#include "mfgirl/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

mfg::MfgSpec make_spec(const std::string& env, const std::string& variant, int horizon,
                       double gamma) {
  mfg::EnvConfig cfg;
  cfg.name = mfg::parse_env_name(env);
  cfg.variant = mfg::parse_env_variant(variant);
  cfg.horizon = horizon;
  cfg.gamma = gamma;
  return mfg::build_env(cfg);
}

mfg::IrlConfig load_irl_config(const std::string& path) {
  mfg::IrlConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw mfg::ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("minibatch")) cfg.minibatch = j["minibatch"].get<int>();
    if (j.contains("n_samples")) cfg.n_samples = j["n_samples"].get<int>();
    if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
    if (j.contains("init_scale")) cfg.init_scale = j["init_scale"].get<double>();
    if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::vector<int>>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("force_approximator"))
      cfg.sampler.force_approximator = j["force_approximator"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw mfg::ConfigError(path + ": " + e.what());
  }
  return cfg;
}

int cmd_gen_experts(const std::string& env, const std::string& variant, int agents,
                    int plays, int horizon, double gamma, std::uint64_t seed,
                    const std::string& out) {
  mfg::MfgSpec spec = make_spec(env, variant, horizon, gamma);
  mfg::SolverConfig solver{.damping = 0.5};
  mfg::Equilibrium expert = mfg::solve_ermfne(*spec.reward, spec, solver);
  if (!expert.converged)
    std::cerr << "warning: expert equilibrium did not converge (residual "
              << expert.residual << ")\n";
  mfg::DemoFile file;
  file.env = env;
  file.variant = variant;
  file.gamma = gamma;
  file.demos.horizon = horizon;
  file.demos.n_agents = agents;
  for (int j = 0; j < plays; ++j)
    file.demos.plays.push_back(
        mfg::sample_game_play(spec, expert.policy, agents, seed * 1000003ULL + j));
  mfg::save_demos(file, out);
  std::cout << "wrote " << plays << " plays of " << agents << " agents to " << out
            << '\n';
  return kExitOk;
}

int cmd_train(const std::string& algo, const std::string& demos_path,
              const std::string& env, const std::string& config_path,
              const std::string& out) {
  if (algo != "mfirl" && algo != "mfg-mdp")
    throw mfg::ConfigError("unknown algorithm '" + algo + "'");
  mfg::DemoFile file = mfg::load_demos(demos_path);
  if (!env.empty() && env != file.env)
    throw mfg::ConfigError("demo file was generated on env '" + file.env +
                           "', not '" + env + "'");
  mfg::MfgSpec spec = make_spec(file.env, file.variant, file.demos.horizon, file.gamma);
  spec.reward.reset();  // the IRL setting: dynamics known, reward unknown

  mfg::IrlConfig cfg = load_irl_config(config_path);
  cfg.log_path = out + ".log.csv";
  mfg::TrainResult result = algo == "mfirl"
                                ? mfg::mfirl_train(spec, file.demos, cfg)
                                : mfg::mfgmdp_irl_train(spec, file.demos, cfg);
  mfg::save_reward_model(result.model, out, file.env, algo);
  std::cout << "trained " << algo << " for " << cfg.epochs << " epochs; final objective "
            << result.likelihood.back() << "; model written to " << out << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& reward_path, const std::string& env,
             const std::string& variant, int horizon, double gamma,
             const std::string& out) {
  mfg::RewardModel model = mfg::load_reward_model(reward_path);
  mfg::MfgSpec spec = make_spec(env, variant, horizon, gamma);
  if (model.n_states != spec.n_states() || model.n_actions != spec.n_actions())
    throw mfg::ConfigError("reward model dimensions do not match env '" + env + "'");
  mfg::MetricsRow row = mfg::evaluate_reward(model, spec, mfg::SolverConfig{.damping = 0.5});
  row.env = env;
  row.variant = variant;
  mfg::write_metrics_csv({row}, out);
  std::cout << mfg::metrics_csv_header() << '\n' << mfg::metrics_csv_line(row) << '\n';
  return kExitOk;
}

int cmd_reproduce(const std::string& suite, const std::string& out_dir, int n_seeds,
                  bool skip_irl) {
  if (suite != "table1") throw mfg::ConfigError("unknown suite '" + suite + "'");
  std::filesystem::create_directories(out_dir);
  std::vector<mfg::MetricsRow> all_rows;
  for (mfg::EnvName env : {mfg::EnvName::Invest, mfg::EnvName::Malware,
                           mfg::EnvName::Virus, mfg::EnvName::Rps,
                           mfg::EnvName::LeftRight}) {
    mfg::ExperimentConfig cfg;
    cfg.env = env;
    cfg.m_values = {10};
    cfg.seeds.clear();
    for (int s = 1; s <= n_seeds; ++s) cfg.seeds.push_back(s);
    cfg.algorithms = skip_irl ? std::vector<std::string>{}
                              : std::vector<std::string>{"mfirl"};
    cfg.out_dir = (std::filesystem::path(out_dir) / mfg::env_name_key(env)).string();
    std::cerr << "running " << mfg::env_name_key(env) << "...\n";
    auto rows = mfg::run_experiment(cfg);
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
  }
  const std::string combined = (std::filesystem::path(out_dir) / "table1.csv").string();
  mfg::write_metrics_csv(all_rows, combined);
  mfg::write_summary_csv(all_rows,
                         (std::filesystem::path(out_dir) / "summary.csv").string());
  std::cout << "wrote " << all_rows.size() << " rows to " << combined << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite mean-field games: equilibrium solving and reward recovery"};
  app.require_subcommand(1);

  std::string env, variant = "original", out, demos_path, algo, config_path,
              reward_path, suite = "table1";
  int agents = 100, plays = 10, horizon = 50, n_seeds = 1;
  double gamma = 0.99;
  std::uint64_t seed = 1;
  bool skip_irl = false;

  auto* gen = app.add_subcommand("gen-experts", "Generate expert demonstrations");
  gen->add_option("--env", env, "Environment: invest|malware|virus|rps|lr")->required();
  gen->add_option("--variant", variant, "Dynamics variant: original|new");
  gen->add_option("--agents", agents, "Agents per game play (N)");
  gen->add_option("--plays", plays, "Number of game plays (M)");
  gen->add_option("--horizon", horizon, "Horizon (T)");
  gen->add_option("--gamma", gamma, "Discount factor");
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out, "Output demo JSON path")->required();

  auto* train = app.add_subcommand("train", "Train a reward model from demos");
  train->add_option("--algo", algo, "Algorithm: mfirl|mfg-mdp")->required();
  train->add_option("--demos", demos_path, "Demo JSON path")->required();
  train->add_option("--env", env, "Environment sanity check (optional)");
  train->add_option("--config", config_path, "Training config JSON (optional)");
  train->add_option("--out", out, "Output reward model JSON path")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a reward model");
  eval->add_option("--reward", reward_path, "Reward model JSON path")->required();
  eval->add_option("--env", env, "Environment")->required();
  eval->add_option("--variant", variant, "Dynamics variant: original|new");
  eval->add_option("--horizon", horizon, "Horizon (T)");
  eval->add_option("--gamma", gamma, "Discount factor");
  eval->add_option("--out", out, "Output metrics CSV path")->required();

  auto* repro = app.add_subcommand("reproduce", "Run a canned benchmark suite");
  repro->add_option("--suite", suite, "Suite name (table1)");
  repro->add_option("--out", out, "Output directory")->required();
  repro->add_option("--seeds", n_seeds, "Number of seeds per cell");
  repro->add_flag("--skip-irl", skip_irl, "Only compute expert reference rows");

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen_experts(env, variant, agents, plays, horizon, gamma, seed, out);
    if (train->parsed()) return cmd_train(algo, demos_path, env, config_path, out);
    if (eval->parsed())
      return cmd_eval(reward_path, env, variant, horizon, gamma, out);
    return cmd_reproduce(suite, out, n_seeds, skip_irl);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const mfg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}
