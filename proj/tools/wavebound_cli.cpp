// Command-line runner for the boundary-identification experiments.
//
//   wavebound <forward|assimilate|sweep|gradcheck|dispersion>
//             [--preset NAME] [--config FILE] [--out DIR] [--<field> VALUE]...
//
// Settings are layered: defaults, then the preset, then the JSON config,
// then individual flags. Exit codes: 0 success, 1 invalid input,
// 2 failed verification (gradcheck).

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "wavebound/experiment.hpp"

namespace {

using wavebound::json;

// "3:1:1,5:1:1" -> [[3,1,1],[5,1,1]]; a bare "3" means amplitudes 1, 1.
json parse_modes_flag(const std::string& s) {
  json modes = json::array();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    json mode = json::array();
    std::stringstream is(item);
    std::string part;
    while (std::getline(is, part, ':')) mode.push_back(part);
    if (mode.size() == 1) {
      mode.push_back(1.0);
      mode.push_back(1.0);
    }
    modes.push_back(mode);
  }
  return modes;
}

// "u=-1,1;p=-1,1" with optional u_tilde / p_tilde (default: same as u / p).
json parse_alpha_flag(const std::string& s) {
  json alpha = json::object();
  std::stringstream ss(s);
  std::string group;
  while (std::getline(ss, group, ';')) {
    const auto eq = group.find('=');
    wavebound::require(eq != std::string::npos, "--alpha: expected group=v0,v1,...");
    json values = json::array();
    std::stringstream vs(group.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) values.push_back(v);
    alpha[group.substr(0, eq)] = values;
  }
  return alpha;
}

json parse_int_list_flag(const std::string& s) {
  json out = json::array();
  std::stringstream ss(s);
  std::string v;
  while (std::getline(ss, v, ',')) out.push_back(v);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-stencil identification for the 1D wave equation"};
  app.require_subcommand(1);

  std::string preset_name, config_path;
  std::map<std::string, std::string> overrides;
  const std::vector<std::string> scalar_fields = {
      "name",       "N",          "tau",      "n_steps",     "order",  "initial",   "k_max",
      "observations", "J",        "eta",      "T_window",    "sweep_from", "sweep_to", "sweep_count",
      "memory",     "max_iters",  "grad_tol", "xt_stride",   "out"};
  const std::vector<std::string> list_fields = {"modes", "alpha", "dispersion_k"};

  std::string presets_help = "built-in configuration:";
  for (const auto& p : wavebound::preset_names()) presets_help += " " + p;

  for (const char* cmd : {"forward", "assimilate", "sweep", "gradcheck", "dispersion"}) {
    CLI::App* sub = app.add_subcommand(cmd);
    sub->add_option("--preset", preset_name, presets_help);
    sub->add_option("--config", config_path, "JSON configuration file");
    for (const auto& f : scalar_fields) sub->add_option("--" + f, overrides[f]);
    sub->add_option("--modes", overrides["modes"], "k:a:b[,k:a:b...]");
    sub->add_option("--alpha", overrides["alpha"], "u=v0,v1;u_tilde=...;p=...;p_tilde=...");
    sub->add_option("--dispersion_k", overrides["dispersion_k"], "k[,k...]");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    wavebound::ExperimentConfig cfg;
    if (!preset_name.empty()) cfg = wavebound::preset(preset_name);
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      wavebound::require(static_cast<bool>(is), "cannot read config file " + config_path);
      json doc;
      try {
        doc = json::parse(is);
      } catch (const json::parse_error& e) {
        throw wavebound::contract_error(std::string("config: ") + e.what());
      }
      wavebound::apply_json(cfg, doc);
    }
    json patch = json::object();
    for (const auto& [key, value] : overrides) {
      if (value.empty()) continue;
      if (key == "modes") patch[key] = parse_modes_flag(value);
      else if (key == "alpha") patch[key] = parse_alpha_flag(value);
      else if (key == "dispersion_k") patch[key] = parse_int_list_flag(value);
      else patch[key] = value;
    }
    wavebound::apply_json(cfg, patch);

    if (command == "forward") wavebound::cmd_forward(cfg, std::cout);
    else if (command == "assimilate") wavebound::cmd_assimilate(cfg, std::cout);
    else if (command == "sweep") wavebound::cmd_sweep(cfg, std::cout);
    else if (command == "dispersion") wavebound::cmd_dispersion(cfg, std::cout);
    else {
      const json report = wavebound::cmd_gradcheck(cfg, std::cout);
      return report["passed"].get<bool>() ? 0 : 2;
    }
    return 0;
  } catch (const wavebound::contract_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const wavebound::diverged_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
