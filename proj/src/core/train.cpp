#include "core/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "core/errors.hpp"
#include "core/expansion.hpp"
#include "core/oracles.hpp"
#include "core/quadrature.hpp"
#include "core/thermal.hpp"

namespace epsim {

namespace {

namespace fs = std::filesystem;

// Index-addressed parallel loop; results land in caller-owned slots so the
// reduction order stays fixed regardless of scheduling.
template <class F>
void parallel_for(int n, F&& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = std::min<int>(n, hw > 0 ? static_cast<int>(hw) : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    int i;
    while ((i = next.fetch_add(1)) < n) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

int sign_readout(double v) { return v >= 0.0 ? 1 : -1; }

bool prediction_correct(const Eigen::VectorXd& output_mean, const Eigen::VectorXd& d) {
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (sign_readout(output_mean[k]) != sign_readout(d[k])) return false;
  return true;
}

struct ExampleResult {
  GradientReport rep;
  double cost = 0.0;
  bool correct = false;
};

// Per-(epoch, example) substream; further splits happen inside estimators.
std::uint64_t example_seed(std::uint64_t master, int epoch, int example) {
  return split_seed(split_seed(master, 0xE0000000ULL + static_cast<std::uint64_t>(epoch)),
                    static_cast<std::uint64_t>(example));
}

std::pair<double, Eigen::VectorXd> thermal_free_readout(const Network& net,
                                                        const ClampContext& ctx0,
                                                        SamplerParams sp) {
  double cost_sum = 0.0;
  Eigen::VectorXd out_sum = Eigen::VectorXd::Zero(net.n_outputs());
  const EnergyModel model(net, ctx0);
  SolverParams warm;
  warm.tol = 1e-8;
  const Eigen::VectorXd z0 = relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx0, warm).z;
  langevin_run(model, sp, z0, [&](const Eigen::VectorXd& z) {
    cost_sum += model.cost(z);
    for (int k = 0; k < net.n_outputs(); ++k) out_sum[k] += z[net.output_nodes[k]];
  });
  const double n = static_cast<double>(sp.n_samples);
  return {cost_sum / n, out_sum / n};
}

ExampleResult classical_example(const RunConfig& cfg, const Network& net,
                                const Example& ex, std::uint64_t seed) {
  require_dim(ex.u.size() == net.n_inputs() && ex.d.size() == net.n_outputs(),
              "dataset example does not match the network's input/output layout");
  ClampContext ctx0;
  ctx0.u = ex.u;
  ctx0.d = ex.d;
  ctx0.alpha = cfg.alpha;
  ctx0.beta = 0.0;

  ExampleResult res;
  if (cfg.regime == Regime::Deterministic) {
    res.rep = cfg.estimator.type == "onesided"
                  ? ep_gradient_onesided(net, ctx0, cfg.hyper.delta_beta, cfg.solver)
                  : ep_gradient_symmetric(net, ctx0, cfg.hyper.delta_beta, cfg.solver);
  } else {
    SamplerParams sp = cfg.sampler;
    sp.temperature = cfg.hyper.temperature;
    sp.seed = seed;
    if (cfg.estimator.type == "clamped") {
      res.rep = grad_clamped_thermal(net, ctx0, cfg.hyper.delta_beta, sp);
    } else if (cfg.estimator.type == "reweighted") {
      res.rep = grad_reweighted(net, ctx0, cfg.estimator.beta_probe, sp,
                                cfg.estimator.ess_floor);
    } else if (cfg.estimator.type == "covariance") {
      res.rep = grad_covariance(net, ctx0, sp);
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown thermal estimator: " + cfg.estimator.type);
    }
    if (std::isnan(res.rep.free_cost)) {
      SamplerParams mp = sp;
      mp.seed = split_seed(seed, 0xF3EE);  // dedicated free readout chain
      auto [c, zout] = thermal_free_readout(net, ctx0, mp);
      res.rep.free_cost = c;
      res.rep.free_output_mean = zout;
    }
  }
  res.cost = res.rep.free_cost;
  res.correct = prediction_correct(res.rep.free_output_mean, ex.d);
  return res;
}

struct QuantumExampleResult {
  QuantumGradientReport rep;
  double cost = 0.0;
  bool correct = false;
};

QuantumSystem apply_example(const QuantumSystem& sys, const Example& ex) {
  require_dim(ex.u.size() == static_cast<Eigen::Index>(sys.input_qubits.size()) &&
                  ex.d.size() == static_cast<Eigen::Index>(sys.output_qubits.size()),
              "dataset example does not match the system's input/output layout");
  QuantumSystem s = sys;
  s.u = ex.u;
  s.d = ex.d;
  s.beta = 0.0;
  return s;
}

QuantumExampleResult quantum_example(const RunConfig& cfg, const QuantumSystem& sys,
                                     const Example& ex) {
  const QuantumSystem s = apply_example(sys, ex);
  const EigenSolution sol = eigensolve(s, cfg.which);
  QuantumExampleResult res;
  res.cost = cost_expectation(s, sol.statevector);
  Eigen::VectorXd zout(static_cast<Eigen::Index>(s.output_qubits.size()));
  for (size_t k = 0; k < s.output_qubits.size(); ++k)
    zout[static_cast<Eigen::Index>(k)] = z_expectation(sol.statevector, s.output_qubits[k]);
  res.correct = prediction_correct(zout, ex.d);
  res.rep = qep_gradient(s, cfg.hyper.delta_beta, cfg.which);
  return res;
}

nlohmann::json metrics_line(const MetricsRecord& m) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  j["mean_train_cost"] = m.mean_train_cost;
  j["accuracy"] = m.accuracy;
  j["grad_norm"] = m.grad_norm;
  j["estimator"] = m.estimator_meta;
  return j;
}

nlohmann::json estimator_meta(const RunConfig& cfg) {
  nlohmann::json j;
  j["type"] = cfg.estimator.type;
  j["regime"] = regime_name(cfg.regime);
  if (cfg.regime != Regime::Thermal || cfg.estimator.type == "clamped")
    j["delta_beta"] = cfg.hyper.delta_beta;
  if (cfg.regime == Regime::Thermal) {
    j["temperature"] = cfg.hyper.temperature;
    j["n_samples"] = cfg.sampler.n_samples;
    if (cfg.estimator.type == "reweighted") j["beta_probe"] = cfg.estimator.beta_probe;
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot open for writing: " + path);
  f << text;
  require(f.good(), ErrorCode::Io, "write failed: " + path);
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::Io, "cannot open: " + path);
  try {
    nlohmann::json j;
    f >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

}  // namespace

nlohmann::json run_train(const RunConfig& cfg, const std::atomic<bool>* stop) {
  require(!cfg.out_dir.empty(), ErrorCode::InvalidArgument, "train requires out_dir");
  require(cfg.hyper.epochs > 0, ErrorCode::InvalidArgument, "epochs must be positive");
  fs::create_directories(cfg.out_dir);

  const std::vector<Example> data = resolve_dataset(cfg);
  const int n_examples = static_cast<int>(data.size());
  const int batch = cfg.hyper.batch_size > 0
                        ? std::min(cfg.hyper.batch_size, n_examples)
                        : n_examples;

  std::uint64_t master = cfg.hyper.seed;
  int epoch_start = 0;

  const bool quantum = cfg.regime == Regime::Quantum;
  Network net;
  QuantumSystem qsys;
  if (quantum) {
    require(cfg.qsystem.has_value(), ErrorCode::InvalidArgument,
            "quantum regime requires a quantum_system");
    qsys = *cfg.qsystem;
  } else {
    require(cfg.network.has_value(), ErrorCode::InvalidArgument,
            "classical regimes require a network");
    net = *cfg.network;
  }

  if (!cfg.resume.empty()) {
    const nlohmann::json ck = load_json_file(cfg.resume);
    require(ck.contains("train_state"), ErrorCode::InvalidArgument,
            "resume file carries no train_state");
    const auto& ts = ck.at("train_state");
    require(ts.at("task").get<std::string>() == task_name(cfg.task),
            ErrorCode::InvalidArgument, "resume checkpoint was written for another task");
    epoch_start = ts.at("epoch_next").get<int>();
    master = ts.at("seed").get<std::uint64_t>();
    if (quantum) qsys = quantum_from_json(ck);
    else net = network_from_json(ck);
  }

  const std::string metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
  const std::string checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.json").string();
  std::ofstream metrics(metrics_path,
                        epoch_start > 0 ? std::ios::app | std::ios::binary : std::ios::binary);
  require(metrics.good(), ErrorCode::Io, "cannot open metrics file: " + metrics_path);
  if (epoch_start == 0)
    dataset_save_csv(data, (fs::path(cfg.out_dir) / "dataset.csv").string());

  const nlohmann::json meta = estimator_meta(cfg);
  std::vector<MetricsRecord> records;
  bool interrupted = false;
  int epoch = epoch_start;

  auto write_checkpoint = [&](int epoch_next) {
    nlohmann::json ck = quantum ? quantum_to_json(qsys) : network_to_json(net);
    ck["train_state"] = {{"epoch_next", epoch_next},
                         {"seed", master},
                         {"task", task_name(cfg.task)},
                         {"regime", regime_name(cfg.regime)}};
    write_text(checkpoint_path, ck.dump(2) + "\n");
  };

  for (; epoch < cfg.hyper.epochs; ++epoch) {
    if (stop && stop->load()) {
      interrupted = true;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.estimator_meta = meta;

    double cost_sum = 0.0;
    int correct = 0;
    if (!quantum) {
      Eigen::VectorXd epoch_grad =
          Eigen::VectorXd::Zero(GradientReport::n_params(net.n_nodes));
      std::vector<ExampleResult> results(static_cast<size_t>(n_examples));
      for (int b0 = 0; b0 < n_examples; b0 += batch) {
        const int b1 = std::min(b0 + batch, n_examples);
        parallel_for(b1 - b0, [&](int k) {
          const int idx = b0 + k;
          results[static_cast<size_t>(idx)] =
              classical_example(cfg, net, data[static_cast<size_t>(idx)],
                                example_seed(master, epoch, idx));
        });
        // fixed-order reduction
        GradientReport mean = GradientReport::zeros(net.n_nodes, "batch_mean");
        for (int idx = b0; idx < b1; ++idx) {
          mean.w += results[static_cast<size_t>(idx)].rep.w;
          mean.lambda += results[static_cast<size_t>(idx)].rep.lambda;
        }
        const double inv = 1.0 / static_cast<double>(b1 - b0);
        mean.w *= inv;
        mean.lambda *= inv;
        net = update_params(net, mean, cfg.hyper.tau);
      }
      for (const auto& r : results) {
        cost_sum += r.cost;
        correct += r.correct ? 1 : 0;
        epoch_grad += r.rep.flat();
      }
      rec.grad_norm = (epoch_grad / n_examples).norm();
    } else {
      std::vector<QuantumExampleResult> results(static_cast<size_t>(n_examples));
      for (int b0 = 0; b0 < n_examples; b0 += batch) {
        const int b1 = std::min(b0 + batch, n_examples);
        parallel_for(b1 - b0, [&](int k) {
          const int idx = b0 + k;
          results[static_cast<size_t>(idx)] =
              quantum_example(cfg, qsys, data[static_cast<size_t>(idx)]);
        });
        QuantumGradientReport mean = results[static_cast<size_t>(b0)].rep;
        for (size_t e = 0; e < mean.entries.size(); ++e) {
          for (int idx = b0 + 1; idx < b1; ++idx)
            mean.entries[e].value += results[static_cast<size_t>(idx)].rep.entries[e].value;
          mean.entries[e].value /= static_cast<double>(b1 - b0);
        }
        qsys = update_quantum_params(qsys, mean, cfg.hyper.tau);
      }
      double gn = 0.0;
      for (const auto& r : results) {
        cost_sum += r.cost;
        correct += r.correct ? 1 : 0;
        for (const auto& e : r.rep.entries) gn += e.value * e.value;
      }
      rec.grad_norm = std::sqrt(gn) / n_examples;
    }

    rec.mean_train_cost = cost_sum / n_examples;
    rec.accuracy = static_cast<double>(correct) / n_examples;
    rec.wall_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - t0)
                                        .count());
    records.push_back(rec);
    metrics << metrics_line(rec).dump() << "\n";
    metrics.flush();

    const int stride = std::max(1, cfg.hyper.epochs / 10);
    if (epoch % stride == 0 || epoch + 1 == cfg.hyper.epochs) {
      std::cerr << "[train] epoch " << epoch << " cost " << rec.mean_train_cost
                << " acc " << rec.accuracy << " (" << rec.wall_ms << " ms)\n";
    }
  }

  write_checkpoint(epoch);

  nlohmann::json summary;
  summary["regime"] = regime_name(cfg.regime);
  summary["task"] = task_name(cfg.task);
  summary["epochs_run"] = epoch - epoch_start;
  summary["epoch_next"] = epoch;
  summary["interrupted"] = interrupted;
  summary["checkpoint"] = checkpoint_path;
  summary["metrics"] = metrics_path;
  if (!records.empty()) {
    summary["final_cost"] = records.back().mean_train_cost;
    summary["final_accuracy"] = records.back().accuracy;
  }
  return summary;
}

nlohmann::json run_eval(const RunConfig& cfg) {
  const std::vector<Example> data = resolve_dataset(cfg);
  const int n_examples = static_cast<int>(data.size());
  nlohmann::json per_example = nlohmann::json::array();
  double cost_sum = 0.0;
  int correct = 0;

  if (cfg.regime == Regime::Quantum) {
    require(cfg.qsystem.has_value(), ErrorCode::InvalidArgument,
            "quantum regime requires a quantum_system");
    for (int k = 0; k < n_examples; ++k) {
      const QuantumSystem s = apply_example(*cfg.qsystem, data[static_cast<size_t>(k)]);
      const EigenSolution sol = eigensolve(s, cfg.which);
      const double c = cost_expectation(s, sol.statevector);
      Eigen::VectorXd zout(static_cast<Eigen::Index>(s.output_qubits.size()));
      for (size_t o = 0; o < s.output_qubits.size(); ++o)
        zout[static_cast<Eigen::Index>(o)] = z_expectation(sol.statevector, s.output_qubits[o]);
      const bool ok = prediction_correct(zout, data[static_cast<size_t>(k)].d);
      cost_sum += c;
      correct += ok ? 1 : 0;
      per_example.push_back({{"cost", c}, {"correct", ok}});
    }
  } else {
    require(cfg.network.has_value(), ErrorCode::InvalidArgument,
            "classical regimes require a network");
    const Network& net = *cfg.network;
    for (int k = 0; k < n_examples; ++k) {
      const Example& ex = data[static_cast<size_t>(k)];
      ClampContext ctx0;
      ctx0.u = ex.u;
      ctx0.d = ex.d;
      ctx0.alpha = cfg.alpha;
      double c;
      Eigen::VectorXd zout;
      if (cfg.regime == Regime::Deterministic) {
        const FixedPoint fp = relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx0, cfg.solver);
        c = cost(fp.z, ex.d, net.output_nodes);
        zout.resize(net.n_outputs());
        for (int o = 0; o < net.n_outputs(); ++o) zout[o] = fp.z[net.output_nodes[o]];
      } else {
        SamplerParams sp = cfg.sampler;
        sp.temperature = cfg.hyper.temperature;
        sp.seed = example_seed(cfg.hyper.seed, 0x0EA1, k);
        auto [cc, zz] = thermal_free_readout(net, ctx0, sp);
        c = cc;
        zout = zz;
      }
      const bool ok = prediction_correct(zout, ex.d);
      cost_sum += c;
      correct += ok ? 1 : 0;
      per_example.push_back({{"cost", c}, {"correct", ok}});
    }
  }

  nlohmann::json out;
  out["regime"] = regime_name(cfg.regime);
  out["task"] = task_name(cfg.task);
  out["n_examples"] = n_examples;
  out["mean_cost"] = cost_sum / n_examples;
  out["accuracy"] = static_cast<double>(correct) / n_examples;
  out["per_example"] = per_example;
  return out;
}

nlohmann::json run_gradcheck(const RunConfig& cfg) {
  const std::vector<Example> data = resolve_dataset(cfg);
  require(!data.empty(), ErrorCode::InvalidArgument, "gradcheck needs a dataset example");
  const Example& ex = data[0];

  nlohmann::json params = nlohmann::json::array();
  double max_rel = 0.0, sum_rel = 0.0;
  int count = 0;
  bool pass = true;
  const double floor = 1e-8;
  auto rel_err = [&](double est, double oracle) {
    const double denom = std::max(std::abs(oracle), floor);
    return std::abs(est - oracle) / denom;
  };

  if (cfg.regime == Regime::Quantum) {
    require(cfg.qsystem.has_value(), ErrorCode::InvalidArgument,
            "quantum regime requires a quantum_system");
    require(cfg.qsystem->n_qubits <= 4, ErrorCode::InvalidArgument,
            "gradcheck enforces <= 4 qubits");
    const QuantumSystem s = apply_example(*cfg.qsystem, ex);
    const QuantumGradientReport est = qep_gradient(s, cfg.hyper.delta_beta, cfg.which);
    const QuantumGradientReport oracle =
        fd_quantum_cost_gradient(s, cfg.which, cfg.gradcheck_fd_step);
    for (size_t k = 0; k < est.entries.size(); ++k) {
      const double r = rel_err(est.entries[k].value, oracle.entries[k].value);
      max_rel = std::max(max_rel, r);
      sum_rel += r;
      ++count;
      pass = pass && r < cfg.gradcheck_tolerance;
      params.push_back({{"name", std::string(1, est.entries[k].kind) + "[" +
                                     std::to_string(est.entries[k].i) + "][" +
                                     std::to_string(est.entries[k].j) + "]"},
                        {"estimate", est.entries[k].value},
                        {"oracle", oracle.entries[k].value},
                        {"rel_error", r}});
    }
  } else {
    require(cfg.network.has_value(), ErrorCode::InvalidArgument,
            "classical regimes require a network");
    const Network& net = *cfg.network;
    ClampContext ctx0;
    ctx0.u = ex.u;
    ctx0.d = ex.d;
    ctx0.alpha = cfg.alpha;

    if (cfg.regime == Regime::Deterministic) {
      require(net.n_nodes <= 8, ErrorCode::InvalidArgument, "gradcheck enforces <= 8 nodes");
      const GradientReport est =
          cfg.estimator.type == "onesided"
              ? ep_gradient_onesided(net, ctx0, cfg.hyper.delta_beta, cfg.solver)
              : ep_gradient_symmetric(net, ctx0, cfg.hyper.delta_beta, cfg.solver);
      const Eigen::VectorXd oracle =
          fd_cost_gradient(net, ctx0, cfg.solver, cfg.gradcheck_fd_step);
      const Eigen::VectorXd flat = est.flat();
      for (int k = 0; k < flat.size(); ++k) {
        const double r = rel_err(flat[k], oracle[k]);
        max_rel = std::max(max_rel, r);
        sum_rel += r;
        ++count;
        pass = pass && r < cfg.gradcheck_tolerance;
        params.push_back({{"name", GradientReport::param_name(net.n_nodes, k)},
                          {"estimate", flat[k]},
                          {"oracle", oracle[k]},
                          {"rel_error", r}});
      }
    } else {
      require(net.n_nodes <= 3, ErrorCode::InvalidArgument,
              "thermal gradcheck uses the quadrature oracle (<= 3 nodes)");
      SamplerParams sp = cfg.sampler;
      sp.temperature = cfg.hyper.temperature;
      sp.seed = example_seed(cfg.hyper.seed, 0x6AC, 0);
      GradientReport est;
      if (cfg.estimator.type == "clamped")
        est = grad_clamped_thermal(net, ctx0, cfg.hyper.delta_beta, sp);
      else if (cfg.estimator.type == "reweighted")
        est = grad_reweighted(net, ctx0, cfg.estimator.beta_probe, sp, cfg.estimator.ess_floor);
      else
        est = grad_covariance(net, ctx0, sp);
      const Eigen::VectorXd oracle = quadrature_cost_gradient(
          net, ctx0, cfg.hyper.temperature, cfg.quadrature_points);
      const Eigen::VectorXd flat = est.flat();
      const Eigen::VectorXd se = est.flat_se();
      for (int k = 0; k < flat.size(); ++k) {
        // statistical acceptance: within 4 combined standard errors
        const double band = 4.0 * se[k] + 1e-9;
        const bool ok = std::abs(flat[k] - oracle[k]) <= band;
        const double r = rel_err(flat[k], oracle[k]);
        max_rel = std::max(max_rel, r);
        sum_rel += r;
        ++count;
        pass = pass && ok;
        params.push_back({{"name", GradientReport::param_name(net.n_nodes, k)},
                          {"estimate", flat[k]},
                          {"oracle", oracle[k]},
                          {"std_error", se[k]},
                          {"rel_error", r},
                          {"within_4se", ok}});
      }
    }
  }

  nlohmann::json out;
  out["regime"] = regime_name(cfg.regime);
  out["fd_step"] = cfg.gradcheck_fd_step;
  out["tolerance"] = cfg.gradcheck_tolerance;
  out["max_rel_error"] = max_rel;
  out["mean_rel_error"] = count > 0 ? sum_rel / count : 0.0;
  out["pass"] = pass;
  out["params"] = params;
  return out;
}

nlohmann::json run_thermal_sample(const RunConfig& cfg, const std::string& out_path) {
  require(cfg.network.has_value(), ErrorCode::InvalidArgument,
          "thermal-sample requires a network");
  require(cfg.clamp.has_value(), ErrorCode::InvalidArgument,
          "thermal-sample requires a clamp block (u, d, alpha, beta)");
  const Network& net = *cfg.network;
  SamplerParams sp = cfg.sampler;
  sp.temperature = cfg.hyper.temperature;
  sp.seed = cfg.hyper.seed;

  SolverParams warm;
  warm.tol = 1e-8;
  const Eigen::VectorXd z0 =
      relax(net, Eigen::VectorXd::Zero(net.n_nodes), *cfg.clamp, warm).z;
  const SampleSet set = langevin_chain(net, *cfg.clamp, sp, z0);

  nlohmann::json header;
  header["meta"] = {{"n_nodes", net.n_nodes},
                    {"dt", sp.dt},
                    {"temperature", sp.temperature},
                    {"burn_in", sp.burn_in},
                    {"n_samples", sp.n_samples},
                    {"thin", sp.thin},
                    {"seed", sp.seed},
                    {"alpha", cfg.clamp->alpha},
                    {"beta", cfg.clamp->beta},
                    {"u", std::vector<double>(cfg.clamp->u.data(),
                                              cfg.clamp->u.data() + cfg.clamp->u.size())},
                    {"d", std::vector<double>(cfg.clamp->d.data(),
                                              cfg.clamp->d.data() + cfg.clamp->d.size())}};

  std::ofstream f(out_path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot open for writing: " + out_path);
  f << header.dump() << "\n";
  for (const auto& z : set.samples) {
    nlohmann::json line = nlohmann::json::array();
    for (Eigen::Index i = 0; i < z.size(); ++i) line.push_back(z[i]);
    f << line.dump() << "\n";
  }
  require(f.good(), ErrorCode::Io, "write failed: " + out_path);
  header["path"] = out_path;
  return header;
}

nlohmann::json run_quantum_solve(const RunConfig& cfg) {
  require(cfg.qsystem.has_value(), ErrorCode::InvalidArgument,
          "quantum-solve requires a quantum_system");
  const QuantumSystem& sys = *cfg.qsystem;
  const EigenSolution sol = eigensolve(sys, cfg.which);

  nlohmann::json out;
  out["which"] = sol.index;
  out["eigenvalue"] = sol.eigenvalue;
  out["gap_below"] = std::isfinite(sol.gap_below) ? nlohmann::json(sol.gap_below)
                                                  : nlohmann::json(nullptr);
  out["gap_above"] = std::isfinite(sol.gap_above) ? nlohmann::json(sol.gap_above)
                                                  : nlohmann::json(nullptr);
  out["residual"] = sol.residual;
  out["cost_expectation"] = cost_expectation(sys, sol.statevector);
  nlohmann::json zs = nlohmann::json::array();
  for (size_t k = 0; k < sys.output_qubits.size(); ++k) {
    zs.push_back({{"qubit", sys.output_qubits[k]},
                  {"z", z_expectation(sol.statevector, sys.output_qubits[k])},
                  {"target", sys.d[static_cast<Eigen::Index>(k)]}});
  }
  out["outputs"] = zs;

  if (cfg.shots > 0) {
    auto dump_shots = [&](MeasurementBasis basis, std::uint64_t stream) {
      const auto est = shot_estimate(sol, basis, cfg.shots,
                                     split_seed(cfg.hyper.seed, stream));
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& e : est)
        arr.push_back({{"i", e.i}, {"j", e.j}, {"mean", e.mean}, {"std_error", e.std_error}});
      return arr;
    };
    out["shots"] = {{"n_shots", cfg.shots},
                    {"xx", dump_shots(MeasurementBasis::X, 0x5841)},
                    {"zz", dump_shots(MeasurementBasis::Z, 0x5A41)}};
  }
  return out;
}

nlohmann::json run_expansion_check(const RunConfig& cfg) {
  // Falls back to a small two-node demo net when the config carries none.
  Network net;
  ClampContext clamp;
  if (cfg.network.has_value()) {
    net = *cfg.network;
    const std::vector<Example> data = resolve_dataset(cfg);
    clamp.u = data[0].u;
    clamp.d = data[0].d;
    clamp.alpha = cfg.alpha;
  } else {
    net.n_nodes = 2;
    net.input_nodes = {0};
    net.output_nodes = {1};
    net.weights = Eigen::MatrixXd::Zero(2, 2);
    net.weights(0, 1) = net.weights(1, 0) = 0.4;
    net.lambda = Eigen::VectorXd::Ones(2);
    net.activation = Activation::Tanh;
    clamp.u = Eigen::VectorXd::Constant(1, 0.5);
    clamp.d = Eigen::VectorXd::Constant(1, 0.3);
    clamp.alpha = 1.0;
  }
  require(net.n_nodes <= 3, ErrorCode::InvalidArgument,
          "expansion-check needs a quadrature-sized network (<= 3 nodes)");

  SolverParams solver = cfg.solver;
  solver.tol = std::min(solver.tol, 1e-12);
  const FixedPoint fp = relax(net, Eigen::VectorXd::Zero(net.n_nodes), clamp, solver);
  require(fp.converged, ErrorCode::Numerical, "relaxation did not converge");

  nlohmann::json out;
  out["network_nodes"] = net.n_nodes;

  // Free-energy expansion against quadrature over the temperature ladder.
  nlohmann::json fe = nlohmann::json::array();
  std::vector<double> log_t, log_err;
  for (double t : cfg.expansion_temperatures) {
    const ExpansionContext ctx = ExpansionContext::build(net, clamp, fp.z, t, 3);
    const double expansion = free_energy_expansion(ctx, net, clamp);
    const QuadratureGrid grid = default_grid(net, clamp, t, cfg.quadrature_points);
    QuadratureDiag diag;
    const double quad = free_energy_quadrature(net, clamp, t, grid, &diag);
    const double err = std::abs(expansion - quad);
    fe.push_back({{"temperature", t},
                  {"expansion", expansion},
                  {"quadrature", quad},
                  {"abs_error", err},
                  {"boundary_warning", diag.boundary_warning}});
    if (err > 0.0) {
      log_t.push_back(std::log(t));
      log_err.push_back(std::log(err));
    }
  }
  out["free_energy"] = fe;
  if (log_t.size() >= 2) {
    // least-squares slope of log|err| vs log T
    double mx = 0, my = 0;
    for (size_t k = 0; k < log_t.size(); ++k) {
      mx += log_t[k];
      my += log_err[k];
    }
    mx /= log_t.size();
    my /= log_t.size();
    double num = 0, den = 0;
    for (size_t k = 0; k < log_t.size(); ++k) {
      num += (log_t[k] - mx) * (log_err[k] - my);
      den += (log_t[k] - mx) * (log_t[k] - mx);
    }
    out["free_energy_scaling_slope"] = den > 0 ? num / den : 0.0;
  }

  const double t_ref = cfg.expansion_temperatures.empty()
                           ? 0.05
                           : cfg.expansion_temperatures.back();
  const ExpansionContext ctx = ExpansionContext::build(net, clamp, fp.z, t_ref, 4);

  // Fixed-point derivative against re-relaxation.
  const double h = 1e-5;
  auto relax_at = [&](const Network& n2, const ClampContext& c2) {
    return relax(n2, fp.z, c2, solver).z;
  };
  {
    int pi = 0, pj = 1;  // first pair
    Network np = net, nm = net;
    np.weights(pi, pj) = np.weights(pj, pi) = net.weights(pi, pj) + h;
    nm.weights(pi, pj) = nm.weights(pj, pi) = net.weights(pi, pj) - h;
    const Eigen::VectorXd fd = (relax_at(np, clamp) - relax_at(nm, clamp)) / (2.0 * h);
    out["dzbar_dW_max_error"] = (dzbar_dW(ctx, pi, pj) - fd).lpNorm<Eigen::Infinity>();

    const Eigen::VectorXd fdb = (relax_at(net, clamp.with_beta(h)) -
                                 relax_at(net, clamp.with_beta(-h))) /
                                (2.0 * h);
    out["dzbar_dbeta_max_error"] =
        (dzbar_dbeta(ctx, net, clamp) - fdb).lpNorm<Eigen::Infinity>();
  }

  // Internal consistency of the two O(T) coefficient forms.
  double lambda1_residual = 0.0;
  for (int i = 0; i < net.n_nodes; ++i)
    for (int j = i + 1; j < net.n_nodes; ++j) {
      const DFdWExpansion d = dF_dW_orderT(ctx, net, clamp, i, j);
      lambda1_residual = std::max(lambda1_residual, std::abs(d.order_t - d.lambda1));
    }
  out["lambda1_consistency_residual"] = lambda1_residual;

  // T = 0 cost gradient against the symmetric nudge estimator.
  {
    const GradientReport est = ep_gradient_symmetric(net, clamp, 1e-4, solver);
    double max_rel = 0.0;
    for (int i = 0; i < net.n_nodes; ++i)
      for (int j = i + 1; j < net.n_nodes; ++j) {
        const double lead = d2F_dWdbeta_leading(ctx, net, clamp, i, j);
        const double denom = std::max(std::abs(lead), 1e-8);
        max_rel = std::max(max_rel, std::abs(lead - est.w(i, j)) / denom);
      }
    out["leading_vs_nudge_max_rel_error"] = max_rel;
  }

  // The four derivative formulas against finite differences across beta.
  {
    auto ctx_at_beta = [&](double beta) {
      const ClampContext c2 = clamp.with_beta(beta);
      const Eigen::VectorXd z2 = relax_at(net, c2);
      return ExpansionContext::build(net, c2, z2, t_ref, 4);
    };
    const ExpansionContext cp = ctx_at_beta(+h);
    const ExpansionContext cm = ctx_at_beta(-h);
    const int pi = 0, pj = 1;

    out["dHinv_dbeta_max_error"] =
        (dHinv_dbeta(ctx, net, clamp) - (cp.hess_inv - cm.hess_inv) / (2.0 * h))
            .lpNorm<Eigen::Infinity>();
    out["dHdW_dbeta_max_error"] =
        (dHdW_dbeta(ctx, net, clamp, pi, pj) -
         (hessian_dW(net, cp.z_bar, pi, pj) - hessian_dW(net, cm.z_bar, pi, pj)) / (2.0 * h))
            .lpNorm<Eigen::Infinity>();
    const Tensor3 v3dot = dV3_dbeta(ctx, net, clamp);
    double v3_err = 0.0;
    for (int a = 0; a < net.n_nodes; ++a)
      for (int b = 0; b < net.n_nodes; ++b)
        for (int c = 0; c < net.n_nodes; ++c) {
          const double fd = (cp.v3.value(a, b, c) - cm.v3.value(a, b, c)) / (2.0 * h);
          v3_err = std::max(v3_err, std::abs(v3dot.value(a, b, c) - fd));
        }
    out["dV3_dbeta_max_error"] = v3_err;
    out["d2zbar_dWdbeta_max_error"] =
        (d2zbar_dWdbeta(ctx, net, clamp, pi, pj) -
         (dzbar_dW(cp, pi, pj) - dzbar_dW(cm, pi, pj)) / (2.0 * h))
            .lpNorm<Eigen::Infinity>();
  }

  // Total d2F/dW dbeta against the quadrature oracle across temperatures.
  nlohmann::json d2f = nlohmann::json::array();
  const double hb = 1e-3;
  for (double t : cfg.expansion_temperatures) {
    const ExpansionContext ct = ExpansionContext::build(net, clamp, fp.z, t, 4);
    const int pi = 0, pj = 1;
    const double pred = d2F_dWdbeta_leading(ct, net, clamp, pi, pj) +
                        t * d2F_dWdbeta_orderT(ct, net, clamp, pi, pj);
    const double qfd = (quadrature_dF_dW(net, clamp.with_beta(+hb), t, pi, pj,
                                         cfg.quadrature_points) -
                        quadrature_dF_dW(net, clamp.with_beta(-hb), t, pi, pj,
                                         cfg.quadrature_points)) /
                       (2.0 * hb);
    d2f.push_back({{"temperature", t},
                   {"expansion", pred},
                   {"quadrature", qfd},
                   {"abs_error", std::abs(pred - qfd)}});
  }
  out["d2F_dWdbeta"] = d2f;
  return out;
}

}  // namespace epsim
