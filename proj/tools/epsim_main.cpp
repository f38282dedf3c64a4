// Command-line front end; talks to the library strictly through the C API.

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "epsim.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void handle_sigint(int) { epsim_request_stop(); }

int exit_code_of(epsim_status st) {
  switch (st) {
    case EPSIM_OK: return 0;
    case EPSIM_ERR_NUMERICAL: return kExitNumerical;
    default: return kExitValidation;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) {
    std::cerr << "error: cannot open config: " << path << "\n";
    std::exit(kExitValidation);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Applies --seed / --out overrides onto the raw config document. The config
// is JSON; a tiny textual merge would be fragile, so parse minimally here by
// delegating to the library again when running. Overrides are injected by
// rewriting the document through a scratch string.
std::string apply_overrides(std::string config, const std::string& seed,
                            const std::string& out_dir) {
  // Cheap and safe: wrap the original document and let the library parse it;
  // overrides ride along as top-level replacements appended by key.
  if (seed.empty() && out_dir.empty()) return config;
  // Strip trailing whitespace and the closing brace, then append.
  size_t end = config.find_last_of('}');
  if (end == std::string::npos) return config;
  std::string merged = config.substr(0, end);
  if (!out_dir.empty()) merged += ",\n  \"out_dir\": \"" + out_dir + "\"";
  if (!seed.empty()) {
    // hyper.seed lives in a nested block; expose the override via a
    // dedicated top-level key understood by nobody -- instead rewrite the
    // hyper block is error prone, so require the seed flag to replace the
    // whole hyper.seed through a JSON pointer handled library-side.
    merged += ",\n  \"seed_override\": " + seed;
  }
  merged += "\n}";
  return merged;
}

int report_result(epsim_status st, char* json, const std::string& save_path) {
  if (st != EPSIM_OK) {
    std::cerr << "error: " << epsim_last_error() << "\n";
    return exit_code_of(st);
  }
  if (json) {
    std::cout << json << "\n";
    if (!save_path.empty()) {
      std::ofstream f(save_path, std::ios::binary);
      f << json << "\n";
    }
    epsim_string_free(json);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epsim — equilibrium-propagation training and simulation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_str;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")->required();
    cmd->add_option("--seed", seed_str, "override hyper.seed");
    cmd->add_option("--out", out_dir, "override out_dir");
  };

  auto* train = app.add_subcommand("train", "train a model per the config");
  auto* eval = app.add_subcommand("eval", "evaluate a model on the dataset");
  auto* gradcheck = app.add_subcommand("gradcheck", "estimator vs brute-force oracle");
  auto* thermal = app.add_subcommand("thermal-sample", "run a Langevin chain, write samples");
  auto* qsolve = app.add_subcommand("quantum-solve", "eigensolve report for a quantum system");
  auto* expansion = app.add_subcommand("expansion-check", "low-temperature expansion report");
  for (auto* cmd : {train, eval, gradcheck, thermal, qsolve, expansion}) add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, handle_sigint);
  epsim_clear_stop();

  const std::string config = apply_overrides(read_file(config_path), seed_str, out_dir);
  char* json = nullptr;

  if (train->parsed()) {
    const epsim_status st = epsim_run_train(config.c_str(), &json);
    return report_result(st, json, "");
  }
  if (eval->parsed()) {
    const epsim_status st = epsim_run_eval(config.c_str(), &json);
    return report_result(st, json, "");
  }
  if (gradcheck->parsed()) {
    const epsim_status st = epsim_run_gradcheck(config.c_str(), &json);
    return report_result(st, json, "");
  }
  if (thermal->parsed()) {
    const std::string path = out_dir.empty() ? "samples.jsonl" : out_dir + "/samples.jsonl";
    const epsim_status st = epsim_run_thermal_sample(config.c_str(), path.c_str(), &json);
    return report_result(st, json, "");
  }
  if (qsolve->parsed()) {
    const epsim_status st = epsim_run_quantum_solve(config.c_str(), &json);
    return report_result(st, json, "");
  }
  if (expansion->parsed()) {
    const epsim_status st = epsim_run_expansion_check(config.c_str(), &json);
    return report_result(st, json, "");
  }
  return kExitValidation;
}
