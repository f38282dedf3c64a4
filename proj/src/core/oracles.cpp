#include "core/oracles.hpp"

#include "core/errors.hpp"
#include "core/quadrature.hpp"

namespace epsim {

Eigen::VectorXd fd_cost_gradient(const Network& net, const ClampContext& ctx0,
                                 const SolverParams& solver, double h) {
  require(h > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be positive");
  SolverParams tight = solver;
  tight.tol = std::min(solver.tol, 1e-12);

  auto cost_at = [&](const Network& n) { return cost_T0(n, ctx0, tight); };

  const int n = net.n_nodes;
  Eigen::VectorXd grad(GradientReport::n_params(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Network p = net, m = net;
      p.weights(i, j) = p.weights(j, i) = net.weights(i, j) + h;
      m.weights(i, j) = m.weights(j, i) = net.weights(i, j) - h;
      grad[k++] = (cost_at(p) - cost_at(m)) / (2.0 * h);
    }
  for (int i = 0; i < n; ++i) {
    Network p = net, m = net;
    p.lambda[i] = net.lambda[i] + h;
    m.lambda[i] = net.lambda[i] - h;
    grad[k++] = (cost_at(p) - cost_at(m)) / (2.0 * h);
  }
  return grad;
}

QuantumGradientReport fd_quantum_cost_gradient(const QuantumSystem& sys, int which,
                                               double h) {
  require(h > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be positive");
  const EigenSolution base = eigensolve(sys, which);

  auto cost_tracked = [&](const QuantumSystem& s) {
    // Follow the same spectral branch as the unperturbed state.
    const Eigen::MatrixXcd hm = build_hamiltonian(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hm);
    require(es.info() == Eigen::Success, ErrorCode::Numerical, "eigensolve failed");
    int best = 0;
    double best_ov = -1.0;
    for (int c = 0; c < es.eigenvectors().cols(); ++c) {
      const double ov = std::abs(base.statevector.dot(es.eigenvectors().col(c)));
      if (ov > best_ov) {
        best_ov = ov;
        best = c;
      }
    }
    require(best_ov >= 0.9, ErrorCode::Numerical,
            "eigenstate tracking failed inside the finite-difference oracle");
    return cost_expectation(s, es.eigenvectors().col(best));
  };

  QuantumGradientReport rep;
  rep.method = "fd_oracle";
  rep.which = which;
  auto run = [&](char kind, size_t idx) {
    QuantumSystem p = sys, m = sys;
    auto& cp = kind == 'a' ? p.xx[idx] : p.zz[idx];
    auto& cm = kind == 'a' ? m.xx[idx] : m.zz[idx];
    cp.value += h;
    cm.value -= h;
    const auto& c = kind == 'a' ? sys.xx[idx] : sys.zz[idx];
    QuantumParamGradient g;
    g.kind = kind;
    g.i = c.i;
    g.j = c.j;
    g.value = (cost_tracked(p) - cost_tracked(m)) / (2.0 * h);
    rep.entries.push_back(g);
  };
  for (size_t k = 0; k < sys.xx.size(); ++k) run('a', k);
  for (size_t k = 0; k < sys.zz.size(); ++k) run('b', k);
  return rep;
}

Eigen::VectorXd quadrature_cost_gradient(const Network& net, const ClampContext& ctx0,
                                         double temperature, int points_per_dim) {
  require(ctx0.beta == 0.0, ErrorCode::InvalidArgument,
          "quadrature cost gradient is defined at beta = 0");
  const int n = net.n_nodes;
  const int np = GradientReport::n_params(n);
  const QuadratureGrid grid = default_grid(net, ctx0, temperature, points_per_dim);

  double c_sum = 0.0;
  Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd gc_sum = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd r(n), g(np);

  const double z_sum = quadrature_sweep(
      net, ctx0, temperature, grid, [&](const Eigen::VectorXd& z, double w) {
        for (int i = 0; i < n; ++i) r[i] = rho(net.activation, z[i], 0);
        int k = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) g[k++] = -r[i] * r[j];
        for (int i = 0; i < n; ++i) g[k++] = 0.5 * z[i] * z[i];
        const double c = cost(z, ctx0.d, net.output_nodes);
        c_sum += w * c;
        g_sum += w * g;
        gc_sum += w * c * g;
      });

  const double ec = c_sum / z_sum;
  Eigen::VectorXd grad(np);
  for (int k = 0; k < np; ++k) {
    const double cov = gc_sum[k] / z_sum - (g_sum[k] / z_sum) * ec;
    grad[k] = -cov / temperature;
  }
  return grad;
}

double quadrature_dF_dW(const Network& net, const ClampContext& ctx, double temperature,
                        int i, int j, int points_per_dim) {
  const QuadratureGrid grid = default_grid(net, ctx, temperature, points_per_dim);
  std::vector<std::function<double(const Eigen::VectorXd&)>> obs = {
      [&net, i, j](const Eigen::VectorXd& z) {
        return -rho(net.activation, z[i], 0) * rho(net.activation, z[j], 0);
      }};
  return quadrature_expectations(net, ctx, temperature, grid, obs)[0];
}

}  // namespace epsim
