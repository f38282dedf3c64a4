#include "core/expansion.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace epsim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Explicit beta dependence of the Hessian: +1 on output-node diagonals.
Eigen::MatrixXd dH_dbeta_explicit(const Network& net) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(net.n_nodes, net.n_nodes);
  for (int k : net.output_nodes) p(k, k) = 1.0;
  return p;
}

// Residual vector (z_a - d_a) scattered over output nodes.
Eigen::VectorXd output_residual(const Network& net, const ClampContext& clamp,
                                const Eigen::VectorXd& z) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(net.n_nodes);
  for (int k = 0; k < net.n_outputs(); ++k)
    r[net.output_nodes[k]] = z[net.output_nodes[k]] - clamp.d[k];
  return r;
}

// Total beta derivative of the Hessian along the fixed-point branch.
Eigen::MatrixXd hess_dot_beta(const ExpansionContext& ctx, const Network& net,
                              const ClampContext& clamp) {
  return dH_dbeta_explicit(net) + ctx.v3.contract_vec(dzbar_dbeta(ctx, net, clamp));
}

}  // namespace

ExpansionContext ExpansionContext::build(const Network& net, const ClampContext& clamp,
                                         const Eigen::VectorXd& z_bar, double temperature,
                                         int order) {
  require(order == 3 || order == 4, ErrorCode::InvalidArgument,
          "expansion context order must be 3 or 4");
  require(temperature >= 0.0, ErrorCode::InvalidArgument,
          "temperature must be non-negative");
  require_dim(z_bar.size() == net.n_nodes, "z_bar size must equal n_nodes");

  ExpansionContext ctx;
  ctx.z_bar = z_bar;
  ctx.dim = net.n_nodes;
  ctx.temperature = temperature;
  ctx.hess = hessian(net, z_bar, clamp, HessianVariant::Exact);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ctx.hess);
  require(es.info() == Eigen::Success, ErrorCode::Numerical, "Hessian eigensolve failed");
  ctx.hess_eigenvalues = es.eigenvalues();
  require(ctx.hess_eigenvalues[0] > 0.0, ErrorCode::Numerical,
          "Hessian is not positive definite (min eigenvalue " +
              std::to_string(ctx.hess_eigenvalues[0]) + "); the Gaussian integral is undefined");

  ctx.hess_inv = ctx.hess.llt().solve(Eigen::MatrixXd::Identity(ctx.dim, ctx.dim));
  const double id_err = (ctx.hess * ctx.hess_inv -
                         Eigen::MatrixXd::Identity(ctx.dim, ctx.dim))
                            .lpNorm<Eigen::Infinity>();
  require(id_err <= 1e-10, ErrorCode::Numerical,
          "Hessian inverse inaccurate (||H H^-1 - I|| = " + std::to_string(id_err) + ")");

  ctx.act = ActivationDerivs::compute(net.activation, z_bar, order);
  ctx.v3 = third_derivative(net, z_bar);
  if (order >= 4) ctx.v4 = fourth_derivative(net, z_bar);
  return ctx;
}

double free_energy_expansion(const ExpansionContext& ctx, const Network& net,
                             const ClampContext& clamp) {
  const double f0 = energy(net, ctx.z_bar, clamp);
  const double t = ctx.temperature;
  if (t == 0.0) return f0;
  const double tr_log_h = ctx.hess_eigenvalues.array().log().sum();
  return f0 - 0.5 * t * ctx.dim * std::log(kTwoPi * t) + 0.5 * t * tr_log_h;
}

Eigen::VectorXd dzbar_dbeta(const ExpansionContext& ctx, const Network& net,
                            const ClampContext& clamp) {
  return -ctx.hess_inv * output_residual(net, clamp, ctx.z_bar);
}

Eigen::VectorXd dzbar_dW(const ExpansionContext& ctx, int i, int j) {
  require(i != j && i >= 0 && j >= 0 && i < ctx.dim && j < ctx.dim,
          ErrorCode::InvalidArgument, "dzbar_dW needs a valid off-diagonal pair");
  // d2f/dz dW_ij = -d[rho_i rho_j]/dz, so the implicit derivative comes out
  // with a plus sign on the H^-1 columns.
  return ctx.hess_inv.col(i) * (ctx.act.r1[i] * ctx.act.r0[j]) +
         ctx.hess_inv.col(j) * (ctx.act.r0[i] * ctx.act.r1[j]);
}

Eigen::VectorXd dzbar_dlambda(const ExpansionContext& ctx, int i) {
  require(i >= 0 && i < ctx.dim, ErrorCode::InvalidArgument, "node index out of range");
  return -ctx.hess_inv.col(i) * ctx.z_bar[i];
}

DFdWExpansion dF_dW_orderT(const ExpansionContext& ctx, const Network& net,
                           const ClampContext& clamp, int i, int j) {
  (void)clamp;
  DFdWExpansion out;
  out.leading = -ctx.act.r0[i] * ctx.act.r0[j];

  const Eigen::MatrixXd a = hessian_dW(net, ctx.z_bar, i, j);
  const Eigen::VectorXd x = dzbar_dW(ctx, i, j);
  const Eigen::MatrixXd b = ctx.v3.contract_vec(x);
  out.order_t = 0.5 * (ctx.hess_inv.cwiseProduct(a + b)).sum();

  // Same coefficient assembled from the observable expansion of -E[rho rho].
  const Eigen::MatrixXd& hi = ctx.hess_inv;
  const Eigen::VectorXd s = ctx.v3.contract_sym(hi);
  const double curvature = -0.5 * (ctx.act.r2[i] * ctx.act.r0[j] * hi(i, i) +
                                   ctx.act.r0[i] * ctx.act.r2[j] * hi(j, j) +
                                   2.0 * ctx.act.r1[i] * ctx.act.r1[j] * hi(i, j));
  const double drift = 0.5 * (ctx.act.r1[i] * ctx.act.r0[j] * hi.row(i).dot(s) +
                              ctx.act.r0[i] * ctx.act.r1[j] * hi.row(j).dot(s));
  out.lambda1 = curvature + drift;

  const double mismatch = std::abs(out.order_t - out.lambda1);
  require(mismatch <= 1e-8 * (1.0 + std::abs(out.order_t)), ErrorCode::Numerical,
          "O(T) coefficient forms disagree by " + std::to_string(mismatch));

  out.value = out.leading + ctx.temperature * out.order_t;
  return out;
}

double d2F_dWdbeta_leading(const ExpansionContext& ctx, const Network& net,
                           const ClampContext& clamp, int i, int j) {
  const Eigen::VectorXd r = output_residual(net, clamp, ctx.z_bar);
  return ctx.act.r1[i] * ctx.act.r0[j] * ctx.hess_inv.row(i).dot(r) +
         ctx.act.r0[i] * ctx.act.r1[j] * ctx.hess_inv.row(j).dot(r);
}

Eigen::MatrixXd dHinv_dbeta(const ExpansionContext& ctx, const Network& net,
                            const ClampContext& clamp) {
  const Eigen::MatrixXd hdot = hess_dot_beta(ctx, net, clamp);
  return -ctx.hess_inv * hdot * ctx.hess_inv;
}

Eigen::MatrixXd dHdW_dbeta(const ExpansionContext& ctx, const Network& net,
                           const ClampContext& clamp, int i, int j) {
  require(i != j && i >= 0 && j >= 0 && i < ctx.dim && j < ctx.dim,
          ErrorCode::InvalidArgument, "dHdW_dbeta needs a valid off-diagonal pair");
  (void)net;
  const Eigen::VectorXd bdot = dzbar_dbeta(ctx, net, clamp);
  // Entries of dV3/dW_ij (explicit, f linear in theta) contracted with bdot.
  const double vi = -ctx.act.r3[i] * ctx.act.r0[j];
  const double vj = -ctx.act.r3[j] * ctx.act.r0[i];
  const double pij = -ctx.act.r2[i] * ctx.act.r1[j];
  const double pji = -ctx.act.r2[j] * ctx.act.r1[i];

  Eigen::MatrixXd adot = Eigen::MatrixXd::Zero(ctx.dim, ctx.dim);
  adot(i, i) = vi * bdot[i] + pij * bdot[j];
  adot(j, j) = vj * bdot[j] + pji * bdot[i];
  adot(i, j) = adot(j, i) = pij * bdot[i] + pji * bdot[j];
  return adot;
}

Tensor3 dV3_dbeta(const ExpansionContext& ctx, const Network& net,
                  const ClampContext& clamp) {
  require(ctx.v4.has_value(), ErrorCode::InvalidArgument,
          "dV3_dbeta needs an order-4 expansion context");
  return ctx.v4->contract_vec(dzbar_dbeta(ctx, net, clamp));
}

Eigen::VectorXd d2zbar_dWdbeta(const ExpansionContext& ctx, const Network& net,
                               const ClampContext& clamp, int i, int j) {
  const Eigen::VectorXd bdot = dzbar_dbeta(ctx, net, clamp);
  const Eigen::VectorXd x = dzbar_dW(ctx, i, j);
  const Eigen::MatrixXd a = hessian_dW(net, ctx.z_bar, i, j);
  const Eigen::MatrixXd hdot = hess_dot_beta(ctx, net, clamp);
  return -ctx.hess_inv * (a * bdot + hdot * x);
}

double d2F_dWdbeta_orderT(const ExpansionContext& ctx, const Network& net,
                          const ClampContext& clamp, int i, int j) {
  require(ctx.v4.has_value(), ErrorCode::InvalidArgument,
          "d2F_dWdbeta_orderT needs an order-4 expansion context");

  const Eigen::MatrixXd a = hessian_dW(net, ctx.z_bar, i, j);
  const Eigen::VectorXd x = dzbar_dW(ctx, i, j);
  const Eigen::MatrixXd b = ctx.v3.contract_vec(x);

  const Eigen::MatrixXd hinv_dot = dHinv_dbeta(ctx, net, clamp);
  const Eigen::MatrixXd a_dot = dHdW_dbeta(ctx, net, clamp, i, j);
  const Tensor3 v3_dot = dV3_dbeta(ctx, net, clamp);
  const Eigen::VectorXd x_dot = d2zbar_dWdbeta(ctx, net, clamp, i, j);
  const Eigen::MatrixXd b_dot = v3_dot.contract_vec(x) + ctx.v3.contract_vec(x_dot);

  return 0.5 * (hinv_dot.cwiseProduct(a + b).sum() +
                ctx.hess_inv.cwiseProduct(a_dot + b_dot).sum());
}

double expectation_expansion(const ExpansionContext& ctx, const SmoothObservable& obs) {
  const double chi = obs.value(ctx.z_bar);
  if (ctx.temperature == 0.0) return chi;
  const Eigen::VectorXd grad = obs.gradient(ctx.z_bar);
  const Eigen::MatrixXd hess_chi = obs.hessian(ctx.z_bar);
  require_dim(grad.size() == ctx.dim && hess_chi.rows() == ctx.dim &&
                  hess_chi.cols() == ctx.dim,
              "observable derivatives must match the state dimension");

  const double curvature = ctx.hess_inv.cwiseProduct(hess_chi).sum();
  const Eigen::VectorXd s = ctx.v3.contract_sym(ctx.hess_inv);
  const double drift = s.dot(ctx.hess_inv * grad);
  return chi + 0.5 * ctx.temperature * (curvature - drift);
}

Eigen::VectorXd mean_z_orderT(const ExpansionContext& ctx) {
  const Eigen::VectorXd s = ctx.v3.contract_sym(ctx.hess_inv);
  return ctx.z_bar - 0.5 * ctx.temperature * (ctx.hess_inv * s);
}

}  // namespace epsim
