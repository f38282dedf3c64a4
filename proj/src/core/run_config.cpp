#include "core/run_config.hpp"

#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace epsim {

Regime regime_from_name(const std::string& s) {
  if (s == "deterministic") return Regime::Deterministic;
  if (s == "thermal") return Regime::Thermal;
  if (s == "quantum") return Regime::Quantum;
  throw Error(ErrorCode::InvalidArgument, "unknown regime: " + s);
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Deterministic: return "deterministic";
    case Regime::Thermal: return "thermal";
    case Regime::Quantum: return "quantum";
  }
  return "?";
}

namespace {

Network resolve_network(const nlohmann::json& spec, std::uint64_t master_seed) {
  if (spec.contains("file")) {
    const std::string path = spec.at("file").get<std::string>();
    std::ifstream f(path);
    require(f.good(), ErrorCode::Io, "cannot open network file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return network_from_json_string(ss.str());
  }
  if (spec.contains("inline")) return network_from_json(spec.at("inline"));
  if (spec.contains("random")) {
    const auto& r = spec.at("random");
    const std::uint64_t seed =
        r.value("seed", split_seed(master_seed, 0x6E6574));  // "net" substream
    return random_network(
        r.at("n_nodes").get<int>(), r.at("input_nodes").get<std::vector<int>>(),
        r.at("output_nodes").get<std::vector<int>>(), r.value("w_scale", 0.5), seed,
        activation_from_name(r.value("activation", std::string("tanh"))),
        r.value("lambda", 1.0));
  }
  throw Error(ErrorCode::InvalidArgument,
              "network spec needs one of: file, inline, random");
}

QuantumSystem resolve_quantum(const nlohmann::json& spec) {
  if (spec.contains("file")) {
    const std::string path = spec.at("file").get<std::string>();
    std::ifstream f(path);
    require(f.good(), ErrorCode::Io, "cannot open quantum system file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return quantum_from_json_string(ss.str());
  }
  if (spec.contains("inline")) return quantum_from_json(spec.at("inline"));
  throw Error(ErrorCode::InvalidArgument, "quantum_system spec needs one of: file, inline");
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
  RunConfig cfg;
  cfg.raw = doc;
  try {
    cfg.regime = regime_from_name(doc.value("regime", std::string("deterministic")));
    if (doc.contains("task")) cfg.task = task_from_name(doc.at("task").get<std::string>());

    if (doc.contains("dataset")) {
      const auto& d = doc.at("dataset");
      cfg.dataset_n = d.value("n", 0);
      cfg.dataset_csv = d.value("csv", std::string());
    }

    if (doc.contains("hyper")) {
      const auto& h = doc.at("hyper");
      cfg.hyper.tau = h.value("tau", cfg.hyper.tau);
      cfg.hyper.delta_beta = h.value("delta_beta", cfg.hyper.delta_beta);
      cfg.hyper.temperature = h.value("temperature", cfg.hyper.temperature);
      cfg.hyper.epochs = h.value("epochs", cfg.hyper.epochs);
      cfg.hyper.batch_size = h.value("batch_size", cfg.hyper.batch_size);
      require(h.contains("seed"), ErrorCode::InvalidArgument,
              "hyper.seed is required (no unseeded randomness)");
      cfg.hyper.seed = h.at("seed").get<std::uint64_t>();
    } else {
      throw Error(ErrorCode::InvalidArgument, "config requires a hyper block with a seed");
    }

    if (doc.contains("solver")) {
      const auto& s = doc.at("solver");
      cfg.solver.step_size = s.value("step_size", cfg.solver.step_size);
      cfg.solver.tol = s.value("tol", cfg.solver.tol);
      cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
      cfg.solver.restarts = s.value("restarts", cfg.solver.restarts);
      cfg.solver.restart_seed = s.value("restart_seed", split_seed(cfg.hyper.seed, 0x7273));
    }

    if (doc.contains("sampler")) {
      const auto& s = doc.at("sampler");
      cfg.sampler.dt = s.value("dt", cfg.sampler.dt);
      cfg.sampler.burn_in = s.value("burn_in", cfg.sampler.burn_in);
      cfg.sampler.n_samples = s.value("n_samples", cfg.sampler.n_samples);
      cfg.sampler.thin = s.value("thin", cfg.sampler.thin);
    }
    cfg.sampler.temperature = cfg.hyper.temperature;
    cfg.sampler.seed = cfg.hyper.seed;

    if (doc.contains("estimator")) {
      const auto& e = doc.at("estimator");
      cfg.estimator.type = e.value("type", std::string());
      cfg.estimator.beta_probe = e.value("beta_probe", cfg.estimator.beta_probe);
      cfg.estimator.ess_floor = e.value("ess_floor", cfg.estimator.ess_floor);
    }
    if (cfg.estimator.type.empty()) {
      cfg.estimator.type =
          cfg.regime == Regime::Thermal ? "covariance" : "symmetric";
    }

    if (doc.contains("gradcheck")) {
      const auto& g = doc.at("gradcheck");
      cfg.gradcheck_fd_step = g.value("fd_step", cfg.gradcheck_fd_step);
      cfg.gradcheck_tolerance = g.value("tolerance", cfg.gradcheck_tolerance);
    }

    if (doc.contains("expansion")) {
      const auto& e = doc.at("expansion");
      if (e.contains("temperatures"))
        cfg.expansion_temperatures = e.at("temperatures").get<std::vector<double>>();
      cfg.quadrature_points = e.value("points_per_dim", cfg.quadrature_points);
    }

    cfg.alpha = doc.value("alpha", cfg.alpha);
    if (doc.contains("network")) cfg.network = resolve_network(doc.at("network"), cfg.hyper.seed);
    if (doc.contains("quantum_system")) cfg.qsystem = resolve_quantum(doc.at("quantum_system"));

    if (doc.contains("clamp")) {
      const auto& c = doc.at("clamp");
      ClampContext ctx;
      const auto u = c.value("u", std::vector<double>());
      const auto d = c.value("d", std::vector<double>());
      ctx.u = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
      ctx.d = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
      ctx.alpha = c.value("alpha", 1.0);
      ctx.beta = c.value("beta", 0.0);
      cfg.clamp = ctx;
    }

    cfg.which = doc.value("which", 0);
    cfg.shots = doc.value("shots", 0L);
    cfg.out_dir = doc.value("out_dir", std::string());
    cfg.resume = doc.value("resume", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad run config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::Io, "cannot open config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config_string(ss.str());
}

RunConfig parse_run_config_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config JSON parse error: ") + e.what());
  }
  return parse_run_config(j);
}

std::vector<Example> resolve_dataset(const RunConfig& cfg) {
  if (!cfg.dataset_csv.empty()) return dataset_load_csv(cfg.dataset_csv);
  int n = cfg.dataset_n;
  if (n <= 0) n = cfg.task == Task::Blobs ? 64 : (cfg.task == Task::Xor ? 4 : 8);
  return make_dataset(cfg.task, n, split_seed(cfg.hyper.seed, 0x64617461));  // "data"
}

}  // namespace epsim
