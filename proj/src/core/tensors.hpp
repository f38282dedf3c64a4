#pragma once

#include <Eigen/Dense>
#include <optional>

#include "core/network.hpp"

namespace epsim {

// `Exact` differentiates the full energy (local potential on every node);
// `AsPrinted` drops the lambda term on clamped-node diagonals, reproducing a
// variant formula kept around so the difference stays testable.
enum class HessianVariant { Exact, AsPrinted };

// Rank-3 symmetric derivative tensor of the energy. Structurally sparse: an
// entry is nonzero only when its index multiset has at most two distinct
// values (each coupling term involves exactly two state variables and the
// clamp/local terms are quadratic). Stored by pattern:
//   diag[a]    = V_aaa
//   pair(a,b)  = V_aab (index a twice, b once), a != b
struct Tensor3 {
  Eigen::VectorXd diag;
  Eigen::MatrixXd pair;

  int dim() const { return static_cast<int>(diag.size()); }

  // Value for arbitrary index order (uses full permutation symmetry).
  double value(int a, int b, int c) const;

  // S_c = sum_{ab} V_abc X_ab for symmetric X.
  Eigen::VectorXd contract_sym(const Eigen::MatrixXd& x) const;

  // M_ab = sum_c V_abc y_c.
  Eigen::MatrixXd contract_vec(const Eigen::VectorXd& y) const;
};

// Rank-4 symmetric derivative tensor, same sparsity rule. Patterns:
//   diag[a]   = V_aaaa
//   p31(a,b)  = V_aaab (a three times)
//   p22(a,b)  = V_aabb (symmetric)
struct Tensor4 {
  Eigen::VectorXd diag;
  Eigen::MatrixXd p31;
  Eigen::MatrixXd p22;

  int dim() const { return static_cast<int>(diag.size()); }

  double value(int a, int b, int c, int d) const;

  // T_cd = sum_{ab} V_abcd X_ab for symmetric X.
  Eigen::MatrixXd contract_sym(const Eigen::MatrixXd& x) const;

  // R_abc = sum_d V_abcd y_d; the result keeps the rank-3 sparsity pattern.
  Tensor3 contract_vec(const Eigen::VectorXd& y) const;
};

struct DerivativeTensors {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hessian;
  std::optional<Tensor3> v3;
  std::optional<Tensor4> v4;
};

Eigen::MatrixXd hessian(const Network& net, const Eigen::VectorXd& z,
                        const ClampContext& ctx,
                        HessianVariant variant = HessianVariant::Exact);

// Third/fourth derivatives depend only on the coupling term (clamp and local
// potentials are quadratic), so they take no clamp context.
Tensor3 third_derivative(const Network& net, const Eigen::VectorXd& z);
Tensor4 fourth_derivative(const Network& net, const Eigen::VectorXd& z);

// order in {2, 3, 4}; rejects activations lacking the needed derivatives.
DerivativeTensors derivative_tensors(const Network& net, const Eigen::VectorXd& z,
                                     const ClampContext& ctx, int order,
                                     HessianVariant variant = HessianVariant::Exact);

// dH/dW_ij for the unordered pair (i, j), holding z fixed. Dense for
// convenience; only entries (i,j),(j,i),(i,i),(j,j) can be nonzero.
Eigen::MatrixXd hessian_dW(const Network& net, const Eigen::VectorXd& z,
                           int i, int j);

}  // namespace epsim
