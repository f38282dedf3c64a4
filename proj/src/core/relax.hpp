#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "core/gradient_report.hpp"
#include "core/network.hpp"

namespace epsim {

struct SolverParams {
  double step_size = 0.05;
  double tol = 1e-10;     // convergence threshold on max-norm of the gradient
  long max_iters = 500000;
  int restarts = 0;       // extra random starts; > 0 enables the multi-start check
  std::uint64_t restart_seed = 0;
};

struct FixedPoint {
  Eigen::VectorXd z;
  double residual = 0.0;
  long iters = 0;
  bool converged = false;
  // Max distance between fixed points found from different restarts; stays 0
  // for single-start runs. Callers may warn when this exceeds their tolerance.
  double restart_spread = 0.0;
};

// Explicit-Euler gradient flow until the residual drops below tol. Returns
// converged=false on iteration exhaustion; throws on NaN (divergence), naming
// the iteration index.
FixedPoint relax(const Network& net, const Eigen::VectorXd& z0,
                 const ClampContext& ctx, const SolverParams& params);

// Energy / cost evaluated at the fixed point reached from the zero state.
double free_energy_T0(const Network& net, const ClampContext& ctx,
                      const SolverParams& params);
double cost_T0(const Network& net, const ClampContext& ctx,
               const SolverParams& params);

// Symmetric two-point nudge estimator: relaxes the free phase (beta = 0),
// warm-starts both nudged phases from it, and differences the conjugate
// parameter observables across beta = +/- delta_beta.
GradientReport ep_gradient_symmetric(const Network& net, const ClampContext& ctx0,
                                     double delta_beta, const SolverParams& params);

// One-sided variant, kept for bias comparisons against the symmetric scheme.
GradientReport ep_gradient_onesided(const Network& net, const ClampContext& ctx0,
                                    double delta_beta, const SolverParams& params);

// theta <- theta - tau * grad; each unordered coupling pair updated once so
// symmetry and the zero diagonal are preserved by construction.
Network update_params(const Network& net, const GradientReport& grads, double tau);

}  // namespace epsim
