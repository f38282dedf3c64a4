#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "core/network.hpp"
#include "core/tensors.hpp"

namespace epsim {

// Everything the O(T) formulas consume, assembled once at a fixed point.
// The Hessian must be positive definite (Gaussian fluctuation integral).
struct ExpansionContext {
  Eigen::VectorXd z_bar;
  Eigen::MatrixXd hess;
  Eigen::MatrixXd hess_inv;
  Eigen::VectorXd hess_eigenvalues;  // ascending, all > 0
  Tensor3 v3;
  std::optional<Tensor4> v4;
  ActivationDerivs act;  // rho derivatives at z_bar
  int dim = 0;
  double temperature = 0.0;

  // order 3 suffices for the free energy and first-order formulas; order 4 is
  // needed for the beta derivative of the O(T) coefficient.
  static ExpansionContext build(const Network& net, const ClampContext& clamp,
                                const Eigen::VectorXd& z_bar, double temperature,
                                int order = 3);
};

// f(z_bar) - (T D / 2) log(2 pi T) + (T / 2) Tr log H  (exact for quadratic
// energies; remainder O(T^2) otherwise). T = 0 returns f(z_bar).
double free_energy_expansion(const ExpansionContext& ctx, const Network& net,
                             const ClampContext& clamp);

// Implicit derivatives of the fixed point: -H^{-1} d2f/dz dtheta.
Eigen::VectorXd dzbar_dbeta(const ExpansionContext& ctx, const Network& net,
                            const ClampContext& clamp);
Eigen::VectorXd dzbar_dW(const ExpansionContext& ctx, int i, int j);
Eigen::VectorXd dzbar_dlambda(const ExpansionContext& ctx, int i);

struct DFdWExpansion {
  double leading = 0.0;   // -rho(z_i) rho(z_j)
  double order_t = 0.0;   // (1/2) sum_ab H^-1_ab [dH_ab/dW + sum_c V3_abc dz_c/dW]
  double lambda1 = 0.0;   // same coefficient assembled along the observable route
  double value = 0.0;     // leading + T * order_t
};

// dF/dW_ij to first order in T. The two algebraically equivalent forms of the
// O(T) coefficient are both computed and must agree; a mismatch beyond
// rounding noise throws.
DFdWExpansion dF_dW_orderT(const ExpansionContext& ctx, const Network& net,
                           const ClampContext& clamp, int i, int j);

// T = 0 limit of the cost gradient in closed form (implicit differentiation
// through the fixed point); evaluate with a beta = 0 context.
double d2F_dWdbeta_leading(const ExpansionContext& ctx, const Network& net,
                           const ClampContext& clamp, int i, int j);

// The four constituent derivative formulas of the O(T) coefficient. Each one
// is independently checkable against finite differences.
Eigen::MatrixXd dHinv_dbeta(const ExpansionContext& ctx, const Network& net,
                            const ClampContext& clamp);
Eigen::MatrixXd dHdW_dbeta(const ExpansionContext& ctx, const Network& net,
                           const ClampContext& clamp, int i, int j);
Tensor3 dV3_dbeta(const ExpansionContext& ctx, const Network& net,
                  const ClampContext& clamp);
Eigen::VectorXd d2zbar_dWdbeta(const ExpansionContext& ctx, const Network& net,
                               const ClampContext& clamp, int i, int j);

// O(T) coefficient of d2F/dW_ij dbeta (the beta derivative of the order_t
// bracket above). Needs V4.
double d2F_dWdbeta_orderT(const ExpansionContext& ctx, const Network& net,
                          const ClampContext& clamp, int i, int j);

// Observable with analytic first and second derivatives, for the O(T)
// expectation expansion.
struct SmoothObservable {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

double expectation_expansion(const ExpansionContext& ctx, const SmoothObservable& obs);

// Thermal mean of the state itself to O(T): z_bar - (T/2) H^-1 S with
// S_c = sum_ab V3_abc H^-1_ab.
Eigen::VectorXd mean_z_orderT(const ExpansionContext& ctx);

}  // namespace epsim
