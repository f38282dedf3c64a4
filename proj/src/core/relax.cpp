#include "core/relax.hpp"

#include <cmath>
#include <random>

#include "core/errors.hpp"

namespace epsim {

namespace {

FixedPoint relax_single(const EnergyModel& model, const Eigen::VectorXd& z0,
                        const SolverParams& params) {
  require(params.step_size > 0.0 && params.tol > 0.0 && params.max_iters > 0,
          ErrorCode::InvalidArgument, "solver parameters must be positive");

  Eigen::VectorXd z = z0;
  Eigen::VectorXd g(z.size());
  FixedPoint fp;
  for (long it = 0; it < params.max_iters; ++it) {
    model.grad(z, g);
    const double res = g.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(res)) {
      throw Error(ErrorCode::Numerical,
                  "relaxation diverged (non-finite gradient) at iteration " +
                      std::to_string(it) + "; reduce step_size");
    }
    if (res <= params.tol) {
      fp.z = std::move(z);
      fp.residual = res;
      fp.iters = it;
      fp.converged = true;
      return fp;
    }
    z -= params.step_size * g;
  }
  model.grad(z, g);
  fp.z = std::move(z);
  fp.residual = g.lpNorm<Eigen::Infinity>();
  fp.iters = params.max_iters;
  fp.converged = std::isfinite(fp.residual) && fp.residual <= params.tol;
  return fp;
}

FixedPoint require_converged(FixedPoint fp, const char* phase) {
  if (!fp.converged) {
    throw Error(ErrorCode::Numerical,
                std::string("relaxation did not converge in the ") + phase +
                    " phase (residual " + std::to_string(fp.residual) +
                    "); enlarge max_iters or reduce step_size");
  }
  return fp;
}

}  // namespace

FixedPoint relax(const Network& net, const Eigen::VectorXd& z0,
                 const ClampContext& ctx, const SolverParams& params) {
  require_dim(z0.size() == net.n_nodes, "z0 size must equal n_nodes");
  const EnergyModel model(net, ctx);
  FixedPoint best = relax_single(model, z0, params);
  if (params.restarts <= 0) return best;

  // Multi-start check: relax from additional random states and keep the
  // lowest-energy converged result, recording the spread between answers.
  double best_energy = model.energy(best.z);
  std::mt19937_64 rng(params.restart_seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double spread = 0.0;
  for (int r = 0; r < params.restarts; ++r) {
    Eigen::VectorXd zr(net.n_nodes);
    for (int i = 0; i < net.n_nodes; ++i) zr[i] = u(rng);
    FixedPoint alt = relax_single(model, zr, params);
    if (!alt.converged) continue;
    spread = std::max(spread, (alt.z - best.z).lpNorm<Eigen::Infinity>());
    const double e = model.energy(alt.z);
    if (e < best_energy) {
      best_energy = e;
      const double s = std::max(spread, best.restart_spread);
      best = std::move(alt);
      best.restart_spread = s;
    }
  }
  best.restart_spread = std::max(best.restart_spread, spread);
  return best;
}

double free_energy_T0(const Network& net, const ClampContext& ctx,
                      const SolverParams& params) {
  const FixedPoint fp =
      require_converged(relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx, params), "free-energy");
  return energy(net, fp.z, ctx);
}

double cost_T0(const Network& net, const ClampContext& ctx, const SolverParams& params) {
  const FixedPoint fp =
      require_converged(relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx, params), "cost");
  return cost(fp.z, ctx.d, net.output_nodes);
}

namespace {

GradientReport nudged_difference(const Network& net, const ClampContext& ctx0,
                                 double delta_beta, const SolverParams& params,
                                 bool symmetric) {
  require(delta_beta > 0.0, ErrorCode::InvalidArgument, "delta_beta must be positive");
  require(ctx0.beta == 0.0, ErrorCode::InvalidArgument,
          "gradient estimation expects a beta = 0 base context");

  const FixedPoint free_fp =
      require_converged(relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx0, params), "free");

  auto nudged = [&](double beta, const char* sign) {
    const ClampContext ctx = ctx0.with_beta(beta);
    FixedPoint fp = relax(net, free_fp.z, ctx, params);
    if (!fp.converged) {
      throw Error(ErrorCode::Numerical,
                  std::string("nudged relaxation (") + sign + ") did not converge");
    }
    return grad_theta(net, fp.z, ctx);
  };

  const GradientReport plus = nudged(+delta_beta, "+");
  const GradientReport minus =
      symmetric ? nudged(-delta_beta, "-") : grad_theta(net, free_fp.z, ctx0);
  const double denom = symmetric ? 2.0 * delta_beta : delta_beta;

  GradientReport rep = GradientReport::zeros(net.n_nodes,
                                             symmetric ? "ep_symmetric" : "ep_onesided");
  rep.delta_beta = delta_beta;
  rep.w = (plus.w - minus.w) / denom;
  rep.lambda = (plus.lambda - minus.lambda) / denom;
  rep.free_cost = cost(free_fp.z, ctx0.d, net.output_nodes);
  rep.free_output_mean.resize(net.n_outputs());
  for (int k = 0; k < net.n_outputs(); ++k)
    rep.free_output_mean[k] = free_fp.z[net.output_nodes[k]];
  return rep;
}

}  // namespace

GradientReport ep_gradient_symmetric(const Network& net, const ClampContext& ctx0,
                                     double delta_beta, const SolverParams& params) {
  return nudged_difference(net, ctx0, delta_beta, params, true);
}

GradientReport ep_gradient_onesided(const Network& net, const ClampContext& ctx0,
                                    double delta_beta, const SolverParams& params) {
  return nudged_difference(net, ctx0, delta_beta, params, false);
}

Network update_params(const Network& net, const GradientReport& grads, double tau) {
  require(tau >= 0.0, ErrorCode::InvalidArgument, "learning rate must be non-negative");
  require_dim(grads.n_nodes() == net.n_nodes, "gradient report does not match network size");
  Network out = net;
  for (int i = 0; i < net.n_nodes; ++i) {
    for (int j = i + 1; j < net.n_nodes; ++j) {
      const double w = net.weights(i, j) - tau * grads.w(i, j);
      out.weights(i, j) = w;
      out.weights(j, i) = w;
    }
    out.lambda[i] = net.lambda[i] - tau * grads.lambda[i];
  }
  return out;
}

}  // namespace epsim
