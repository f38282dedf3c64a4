#include "core/quadrature.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/tensors.hpp"

namespace epsim {

namespace {

// 10-point Gauss-Legendre rule on [-1, 1]; applied per panel.
constexpr int kRule = 10;
constexpr double kNodes[kRule] = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
    -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
    0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
    0.9739065285171717};
constexpr double kWeights[kRule] = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
    0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
    0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
    0.0666713443086881};

struct Axis {
  std::vector<double> x, w;
};

Axis build_axis(double lo, double hi, int points) {
  require(hi > lo, ErrorCode::InvalidArgument, "integration box must have positive extent");
  const int panels = std::max(1, (points + kRule - 1) / kRule);
  Axis axis;
  axis.x.reserve(static_cast<size_t>(panels) * kRule);
  axis.w.reserve(static_cast<size_t>(panels) * kRule);
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    const double mid = a + 0.5 * width;
    for (int k = 0; k < kRule; ++k) {
      axis.x.push_back(mid + 0.5 * width * kNodes[k]);
      axis.w.push_back(0.5 * width * kWeights[k]);
    }
  }
  return axis;
}

}  // namespace

double quadrature_sweep(const Network& net, const ClampContext& ctx, double temperature,
                        const QuadratureGrid& grid,
                        const std::function<void(const Eigen::VectorXd&, double)>& visit,
                        double* f_ref_out, QuadratureDiag* diag) {
  require(net.n_nodes <= 3, ErrorCode::Unsupported,
          "quadrature oracle is limited to 3 nodes");
  require(temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
  require_dim(grid.lo.size() == net.n_nodes && grid.hi.size() == net.n_nodes,
              "grid bounds must match n_nodes");

  const int n = net.n_nodes;
  const EnergyModel model(net, ctx);

  std::vector<Axis> axes;
  axes.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) axes.push_back(build_axis(grid.lo[i], grid.hi[i], grid.points_per_dim));
  const int m = static_cast<int>(axes[0].x.size());

  // Reference energy at the box center keeps exponents in range.
  Eigen::VectorXd center(n);
  for (int i = 0; i < n; ++i) center[i] = 0.5 * (grid.lo[i] + grid.hi[i]);
  const double f_ref = model.energy(center);

  double z_sum = 0.0;
  double peak = 0.0, boundary = 0.0;

  Eigen::VectorXd z(n);
  const long total = static_cast<long>(std::pow(static_cast<double>(m), n));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    bool edge = false;
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % m);
      rem /= m;
      z[i] = axes[static_cast<size_t>(i)].x[static_cast<size_t>(k)];
      w *= axes[static_cast<size_t>(i)].w[static_cast<size_t>(k)];
      edge = edge || k == 0 || k == m - 1;
    }
    const double density = std::exp(-(model.energy(z) - f_ref) / temperature);
    peak = std::max(peak, density);
    if (edge) boundary = std::max(boundary, density);
    z_sum += w * density;
    if (visit) visit(z, w * density);
  }

  require(z_sum > 0.0 && std::isfinite(z_sum), ErrorCode::Numerical,
          "quadrature partition function vanished or overflowed");
  if (diag) {
    diag->peak_density = peak;
    diag->boundary_density = boundary;
    diag->boundary_warning = boundary > 1e-12 * peak;
  }
  if (f_ref_out) *f_ref_out = f_ref;
  return z_sum;
}

Eigen::VectorXd quadrature_expectations(
    const Network& net, const ClampContext& ctx, double temperature,
    const QuadratureGrid& grid,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& observables,
    double* free_energy_out, QuadratureDiag* diag) {
  Eigen::VectorXd obs_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(observables.size()));
  double f_ref = 0.0;
  const double z_sum = quadrature_sweep(
      net, ctx, temperature, grid,
      [&](const Eigen::VectorXd& z, double w) {
        for (size_t o = 0; o < observables.size(); ++o)
          obs_sum[static_cast<Eigen::Index>(o)] += w * observables[o](z);
      },
      &f_ref, diag);
  if (free_energy_out) *free_energy_out = f_ref - temperature * std::log(z_sum);
  return obs_sum / z_sum;
}

double free_energy_quadrature(const Network& net, const ClampContext& ctx, double temperature,
                              const QuadratureGrid& grid, QuadratureDiag* diag) {
  double f = 0.0;
  quadrature_expectations(net, ctx, temperature, grid, {}, &f, diag);
  return f;
}

QuadratureGrid default_grid(const Network& net, const ClampContext& ctx, double temperature,
                            int points_per_dim, double sigmas, const SolverParams& solver) {
  const FixedPoint fp = relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx, solver);
  const Eigen::MatrixXd h = hessian(net, fp.z, ctx);
  const Eigen::MatrixXd hinv = h.llt().solve(Eigen::MatrixXd::Identity(net.n_nodes, net.n_nodes));

  QuadratureGrid grid;
  grid.points_per_dim = points_per_dim;
  grid.lo.resize(net.n_nodes);
  grid.hi.resize(net.n_nodes);
  for (int i = 0; i < net.n_nodes; ++i) {
    const double sigma = std::sqrt(std::max(1e-12, temperature * hinv(i, i)));
    const double half = sigmas * sigma + 0.5;  // margin guards anharmonic tails
    grid.lo[i] = fp.z[i] - half;
    grid.hi[i] = fp.z[i] + half;
  }
  return grid;
}

}  // namespace epsim
