#pragma once

#include <Eigen/Dense>

#include "core/network.hpp"
#include "core/quantum.hpp"
#include "core/relax.hpp"

namespace epsim {

// Brute-force reference gradients: one re-equilibration per parameter and
// sign, central differences. Slow by design; the point of the nudge
// estimators is to avoid exactly this loop.

// d(beta = 0 cost)/dtheta in flat parameter order (pairs i<j, then lambdas).
Eigen::VectorXd fd_cost_gradient(const Network& net, const ClampContext& ctx0,
                                 const SolverParams& solver, double h);

// Quantum analogue over the system's couplings (XX entries first, then ZZ),
// tracking the eigenstate branch across the parameter perturbation.
QuantumGradientReport fd_quantum_cost_gradient(const QuantumSystem& sys, int which,
                                               double h);

// Exact thermal cost gradient -(1/T) Cov[df/dtheta, c] by quadrature
// (n_nodes <= 3), flat parameter order.
Eigen::VectorXd quadrature_cost_gradient(const Network& net, const ClampContext& ctx0,
                                         double temperature, int points_per_dim = 320);

// Thermal mean of -rho_i rho_j by quadrature (used to difference dF/dW over
// beta or W from the defining integral).
double quadrature_dF_dW(const Network& net, const ClampContext& ctx, double temperature,
                        int i, int j, int points_per_dim = 320);

}  // namespace epsim
