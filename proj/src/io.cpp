#include "mfgirl/io.hpp"

#include <fstream>

#include <json.hpp>

namespace mfg {

namespace {

using json = nlohmann::ordered_json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

json mlp_spec_to_json(const MlpSpec& spec) {
  return json{{"input", spec.input},
              {"hidden", spec.hidden},
              {"output", spec.output},
              {"leak", spec.leak}};
}

MlpSpec mlp_spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input = j.at("input").get<int>();
  spec.hidden = j.at("hidden").get<std::vector<int>>();
  spec.output = j.at("output").get<int>();
  spec.leak = j.at("leak").get<double>();
  return spec;
}

}  // namespace

void save_demos(const DemoFile& file, const std::string& path) {
  file.demos.validate();
  json plays = json::array();
  for (const auto& play : file.demos.plays) {
    json agents = json::array();
    for (const auto& tau : play.agents) {
      json steps = json::array();
      for (const auto& [s, a] : tau.steps) steps.push_back(json::array({s, a}));
      agents.push_back(std::move(steps));
    }
    plays.push_back(std::move(agents));
  }
  json j{{"version", 1},
         {"env", file.env},
         {"variant", file.variant},
         {"T", file.demos.horizon},
         {"N", file.demos.n_agents},
         {"M", file.demos.n_plays()},
         {"gamma", file.gamma},
         {"plays", std::move(plays)}};
  write_json(j, path);
}

DemoFile load_demos(const std::string& path) {
  json j = read_json(path);
  DemoFile file;
  try {
    if (j.at("version").get<int>() != 1)
      throw ConfigError(path + ": unsupported demo file version");
    file.env = j.at("env").get<std::string>();
    file.variant = j.at("variant").get<std::string>();
    file.gamma = j.at("gamma").get<double>();
    file.demos.horizon = j.at("T").get<int>();
    file.demos.n_agents = j.at("N").get<int>();
    for (const auto& play_j : j.at("plays")) {
      GamePlay play;
      for (const auto& tau_j : play_j) {
        Trajectory tau;
        for (const auto& step : tau_j)
          tau.steps.emplace_back(step.at(0).get<int>(), step.at(1).get<int>());
        play.agents.push_back(std::move(tau));
      }
      file.demos.plays.push_back(std::move(play));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (file.demos.n_plays() != j.at("M").get<int>())
    throw ConfigError(path + ": play count disagrees with M");
  file.demos.validate();
  return file;
}

void save_reward_model(const RewardModel& model, const std::string& path,
                       const std::string& env, const std::string& algorithm) {
  json j{{"version", 1},
         {"algorithm", algorithm},
         {"env", env},
         {"n_states", model.n_states},
         {"n_actions", model.n_actions},
         {"gamma", model.gamma},
         {"shaped", model.shaped},
         {"core", json{{"spec", mlp_spec_to_json(model.core_spec)},
                       {"params", model.omega}}},
         {"potential", json{{"spec", mlp_spec_to_json(model.potential_spec)},
                            {"params", model.phi}}}};
  write_json(j, path);
}

RewardModel load_reward_model(const std::string& path, std::string* env,
                              std::string* algorithm) {
  json j = read_json(path);
  RewardModel model;
  try {
    if (j.at("version").get<int>() != 1)
      throw ConfigError(path + ": unsupported reward model version");
    if (env) *env = j.at("env").get<std::string>();
    if (algorithm) *algorithm = j.at("algorithm").get<std::string>();
    model.n_states = j.at("n_states").get<int>();
    model.n_actions = j.at("n_actions").get<int>();
    model.gamma = j.at("gamma").get<double>();
    model.shaped = j.at("shaped").get<bool>();
    model.core_spec = mlp_spec_from_json(j.at("core").at("spec"));
    model.omega = j.at("core").at("params").get<std::vector<double>>();
    model.potential_spec = mlp_spec_from_json(j.at("potential").at("spec"));
    model.phi = j.at("potential").at("params").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (model.omega.size() != param_count(model.core_spec) ||
      model.phi.size() != param_count(model.potential_spec))
    throw ConfigError(path + ": parameter vector length disagrees with spec");
  return model;
}

void save_equilibrium(const Equilibrium& eq, const std::string& path) {
  json flow = json::array();
  for (const auto& mu : eq.flow) flow.push_back(mu.p);
  json policy = json::array();
  for (const auto& step : eq.policy.steps)
    policy.push_back(json{{"n_states", step.n_states},
                          {"n_actions", step.n_actions},
                          {"probs", step.probs}});
  write_json(json{{"version", 1},
                  {"converged", eq.converged},
                  {"iterations", eq.iterations},
                  {"residual", eq.residual},
                  {"flow", std::move(flow)},
                  {"policy", std::move(policy)}},
             path);
}

Equilibrium load_equilibrium(const std::string& path) {
  json j = read_json(path);
  Equilibrium eq;
  try {
    eq.converged = j.at("converged").get<bool>();
    eq.iterations = j.at("iterations").get<int>();
    eq.residual = j.at("residual").get<double>();
    for (const auto& mu : j.at("flow"))
      eq.flow.push_back(MeanField(mu.get<std::vector<double>>()));
    for (const auto& step : j.at("policy")) {
      PerStepPolicy p(step.at("n_states").get<std::size_t>(),
                      step.at("n_actions").get<std::size_t>());
      p.probs = step.at("probs").get<std::vector<double>>();
      eq.policy.steps.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return eq;
}

}  // namespace mfg
