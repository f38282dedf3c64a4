#include "epsim.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "core/errors.hpp"
#include "core/gradient_report.hpp"
#include "core/network.hpp"
#include "core/quantum.hpp"
#include "core/relax.hpp"
#include "core/run_config.hpp"
#include "core/thermal.hpp"
#include "core/train.hpp"

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stop{false};

epsim_status code_of(const epsim::Error& e) {
  switch (e.code()) {
    case epsim::ErrorCode::InvalidArgument: return EPSIM_ERR_INVALID_ARGUMENT;
    case epsim::ErrorCode::DimensionMismatch: return EPSIM_ERR_DIMENSION_MISMATCH;
    case epsim::ErrorCode::Numerical: return EPSIM_ERR_NUMERICAL;
    case epsim::ErrorCode::Unsupported: return EPSIM_ERR_UNSUPPORTED;
    case epsim::ErrorCode::Io: return EPSIM_ERR_IO;
  }
  return EPSIM_ERR_INVALID_ARGUMENT;
}

// Runs fn, translating exceptions into status codes + the thread-local
// message. Every exported function body goes through here.
template <class F>
epsim_status guarded(F&& fn) {
  try {
    fn();
    return EPSIM_OK;
  } catch (const epsim::Error& e) {
    g_last_error = e.what();
    return code_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EPSIM_ERR_NUMERICAL;
  } catch (...) {
    g_last_error = "unknown error";
    return EPSIM_ERR_NUMERICAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_arg(bool cond, const char* what) {
  epsim::require(cond, epsim::ErrorCode::InvalidArgument, what);
}

epsim::ClampContext to_ctx(const epsim::Network& net, const epsim_clamp* c) {
  require_arg(c != nullptr, "clamp must not be null");
  epsim::ClampContext ctx;
  ctx.u = Eigen::Map<const Eigen::VectorXd>(c->u, static_cast<Eigen::Index>(c->n_u));
  ctx.d = Eigen::Map<const Eigen::VectorXd>(c->d, static_cast<Eigen::Index>(c->n_d));
  ctx.alpha = c->alpha;
  ctx.beta = c->beta;
  epsim::require_dim(static_cast<int>(c->n_u) == net.n_inputs(), "clamp u size mismatch");
  epsim::require_dim(static_cast<int>(c->n_d) == net.n_outputs(), "clamp d size mismatch");
  return ctx;
}

}  // namespace

struct epsim_network {
  epsim::Network net;
};

struct epsim_quantum {
  epsim::QuantumSystem sys;
};

extern "C" {

const char* epsim_version(void) { return "0.1.0"; }

const char* epsim_last_error(void) { return g_last_error.c_str(); }

void epsim_string_free(char* s) { std::free(s); }

void epsim_request_stop(void) { g_stop.store(true); }

void epsim_clear_stop(void) { g_stop.store(false); }

/* ------------------------------------------------------------------ */

epsim_status epsim_network_parse(const char* json, epsim_network** out) {
  return guarded([&] {
    require_arg(json && out, "null argument");
    *out = new epsim_network{epsim::network_from_json_string(json)};
  });
}

epsim_status epsim_network_load(const char* path, epsim_network** out) {
  return guarded([&] {
    require_arg(path && out, "null argument");
    std::ifstream f(path);
    epsim::require(f.good(), epsim::ErrorCode::Io, std::string("cannot open: ") + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    *out = new epsim_network{epsim::network_from_json_string(ss.str())};
  });
}

epsim_status epsim_network_to_json(const epsim_network* net, char** out_json) {
  return guarded([&] {
    require_arg(net && out_json, "null argument");
    *out_json = dup_string(epsim::network_to_json_string(net->net));
  });
}

epsim_status epsim_network_save(const epsim_network* net, const char* path) {
  return guarded([&] {
    require_arg(net && path, "null argument");
    std::ofstream f(path, std::ios::binary);
    epsim::require(f.good(), epsim::ErrorCode::Io, std::string("cannot open: ") + path);
    f << epsim::network_to_json_string(net->net) << "\n";
    epsim::require(f.good(), epsim::ErrorCode::Io, std::string("write failed: ") + path);
  });
}

void epsim_network_free(epsim_network* net) { delete net; }

epsim_status epsim_network_n_nodes(const epsim_network* net, size_t* out) {
  return guarded([&] {
    require_arg(net && out, "null argument");
    *out = static_cast<size_t>(net->net.n_nodes);
  });
}

epsim_status epsim_energy(const epsim_network* net, const double* z, size_t n,
                          const epsim_clamp* clamp, double* out) {
  return guarded([&] {
    require_arg(net && z && out, "null argument");
    const Eigen::Map<const Eigen::VectorXd> zv(z, static_cast<Eigen::Index>(n));
    *out = epsim::energy(net->net, zv, to_ctx(net->net, clamp));
  });
}

epsim_status epsim_grad_z(const epsim_network* net, const double* z, size_t n,
                          const epsim_clamp* clamp, double* out) {
  return guarded([&] {
    require_arg(net && z && out, "null argument");
    const Eigen::Map<const Eigen::VectorXd> zv(z, static_cast<Eigen::Index>(n));
    const Eigen::VectorXd g = epsim::grad_z(net->net, zv, to_ctx(net->net, clamp));
    Eigen::Map<Eigen::VectorXd>(out, g.size()) = g;
  });
}

epsim_status epsim_cost(const epsim_network* net, const double* z, size_t n,
                        const double* d, size_t n_d, double* out) {
  return guarded([&] {
    require_arg(net && z && d && out, "null argument");
    const Eigen::Map<const Eigen::VectorXd> zv(z, static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> dv(d, static_cast<Eigen::Index>(n_d));
    epsim::require_dim(static_cast<Eigen::Index>(n) == net->net.n_nodes,
                       "state vector size must equal n_nodes");
    *out = epsim::cost(zv, dv, net->net.output_nodes);
  });
}

epsim_status epsim_relax(const epsim_network* net, const double* z0, size_t n,
                         const epsim_clamp* clamp, double step_size, double tol,
                         long max_iters, double* z_out, double* residual_out,
                         long* iters_out, int* converged_out) {
  return guarded([&] {
    require_arg(net && z0 && z_out, "null argument");
    epsim::SolverParams params;
    params.step_size = step_size;
    params.tol = tol;
    params.max_iters = max_iters;
    const Eigen::Map<const Eigen::VectorXd> zv(z0, static_cast<Eigen::Index>(n));
    const epsim::FixedPoint fp =
        epsim::relax(net->net, zv, to_ctx(net->net, clamp), params);
    Eigen::Map<Eigen::VectorXd>(z_out, fp.z.size()) = fp.z;
    if (residual_out) *residual_out = fp.residual;
    if (iters_out) *iters_out = fp.iters;
    if (converged_out) *converged_out = fp.converged ? 1 : 0;
  });
}

epsim_status epsim_ep_gradient(const epsim_network* net, const epsim_clamp* clamp,
                               double delta_beta, double step_size, double tol,
                               long max_iters, int symmetric, char** out_json) {
  return guarded([&] {
    require_arg(net && out_json, "null argument");
    epsim::SolverParams params;
    params.step_size = step_size;
    params.tol = tol;
    params.max_iters = max_iters;
    const epsim::ClampContext ctx = to_ctx(net->net, clamp);
    const epsim::GradientReport rep =
        symmetric ? epsim::ep_gradient_symmetric(net->net, ctx, delta_beta, params)
                  : epsim::ep_gradient_onesided(net->net, ctx, delta_beta, params);
    *out_json = dup_string(rep.to_json().dump());
  });
}

epsim_status epsim_thermal_gradient(const epsim_network* net, const epsim_clamp* clamp,
                                    const char* method, const char* sampler_json,
                                    char** out_json) {
  return guarded([&] {
    require_arg(net && method && sampler_json && out_json, "null argument");
    const nlohmann::json j = nlohmann::json::parse(sampler_json);
    epsim::SamplerParams sp;
    sp.dt = j.value("dt", sp.dt);
    sp.temperature = j.value("temperature", sp.temperature);
    sp.burn_in = j.value("burn_in", sp.burn_in);
    sp.n_samples = j.value("n_samples", sp.n_samples);
    sp.thin = j.value("thin", sp.thin);
    sp.seed = j.value("seed", static_cast<std::uint64_t>(0));
    const epsim::ClampContext ctx = to_ctx(net->net, clamp);

    epsim::GradientReport rep;
    const std::string m = method;
    if (m == "clamped") {
      rep = epsim::grad_clamped_thermal(net->net, ctx, j.value("delta_beta", 0.05), sp);
    } else if (m == "covariance") {
      rep = epsim::grad_covariance(net->net, ctx, sp);
    } else if (m == "reweighted") {
      rep = epsim::grad_reweighted(net->net, ctx, j.value("beta_probe", 0.05), sp,
                                   j.value("ess_floor", 0.10));
    } else {
      epsim::require(false, epsim::ErrorCode::InvalidArgument,
                     "unknown thermal method: " + m);
    }
    *out_json = dup_string(rep.to_json().dump());
  });
}

/* ------------------------------------------------------------------ */

epsim_status epsim_quantum_parse(const char* json, epsim_quantum** out) {
  return guarded([&] {
    require_arg(json && out, "null argument");
    *out = new epsim_quantum{epsim::quantum_from_json_string(json)};
  });
}

epsim_status epsim_quantum_load(const char* path, epsim_quantum** out) {
  return guarded([&] {
    require_arg(path && out, "null argument");
    std::ifstream f(path);
    epsim::require(f.good(), epsim::ErrorCode::Io, std::string("cannot open: ") + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    *out = new epsim_quantum{epsim::quantum_from_json_string(ss.str())};
  });
}

epsim_status epsim_quantum_to_json(const epsim_quantum* sys, char** out_json) {
  return guarded([&] {
    require_arg(sys && out_json, "null argument");
    *out_json = dup_string(epsim::quantum_to_json_string(sys->sys));
  });
}

void epsim_quantum_free(epsim_quantum* sys) { delete sys; }

epsim_status epsim_quantum_solve(const epsim_quantum* sys, int which, char** out_json) {
  return guarded([&] {
    require_arg(sys && out_json, "null argument");
    const epsim::EigenSolution sol = epsim::eigensolve(sys->sys, which);
    nlohmann::json out;
    out["which"] = sol.index;
    out["eigenvalue"] = sol.eigenvalue;
    out["residual"] = sol.residual;
    out["cost_expectation"] = epsim::cost_expectation(sys->sys, sol.statevector);
    nlohmann::json zs = nlohmann::json::array();
    for (size_t k = 0; k < sys->sys.output_qubits.size(); ++k)
      zs.push_back({{"qubit", sys->sys.output_qubits[k]},
                    {"z", epsim::z_expectation(sol.statevector, sys->sys.output_qubits[k])}});
    out["outputs"] = zs;
    *out_json = dup_string(out.dump());
  });
}

epsim_status epsim_qep_gradient(const epsim_quantum* sys, double delta_beta, int which,
                                char** out_json) {
  return guarded([&] {
    require_arg(sys && out_json, "null argument");
    *out_json =
        dup_string(epsim::qep_gradient(sys->sys, delta_beta, which).to_json().dump());
  });
}

/* ------------------------------------------------------------------ */

epsim_status epsim_run_train(const char* config_json, char** out_summary_json) {
  return guarded([&] {
    require_arg(config_json && out_summary_json, "null argument");
    const epsim::RunConfig cfg = epsim::parse_run_config_string(config_json);
    *out_summary_json = dup_string(epsim::run_train(cfg, &g_stop).dump());
  });
}

epsim_status epsim_run_eval(const char* config_json, char** out_json) {
  return guarded([&] {
    require_arg(config_json && out_json, "null argument");
    *out_json =
        dup_string(epsim::run_eval(epsim::parse_run_config_string(config_json)).dump());
  });
}

epsim_status epsim_run_gradcheck(const char* config_json, char** out_json) {
  return guarded([&] {
    require_arg(config_json && out_json, "null argument");
    *out_json =
        dup_string(epsim::run_gradcheck(epsim::parse_run_config_string(config_json)).dump());
  });
}

epsim_status epsim_run_thermal_sample(const char* config_json, const char* out_path,
                                      char** out_json) {
  return guarded([&] {
    require_arg(config_json && out_path && out_json, "null argument");
    *out_json = dup_string(
        epsim::run_thermal_sample(epsim::parse_run_config_string(config_json), out_path)
            .dump());
  });
}

epsim_status epsim_run_quantum_solve(const char* config_json, char** out_json) {
  return guarded([&] {
    require_arg(config_json && out_json, "null argument");
    *out_json = dup_string(
        epsim::run_quantum_solve(epsim::parse_run_config_string(config_json)).dump());
  });
}

epsim_status epsim_run_expansion_check(const char* config_json, char** out_json) {
  return guarded([&] {
    require_arg(config_json && out_json, "null argument");
    *out_json = dup_string(
        epsim::run_expansion_check(epsim::parse_run_config_string(config_json)).dump());
  });
}

} /* extern "C" */
