#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "core/network.hpp"
#include "core/relax.hpp"

namespace epsim {

// Tensor-product integration box; points_per_dim is rounded up to a multiple
// of the panel rule size.
struct QuadratureGrid {
  Eigen::VectorXd lo, hi;
  int points_per_dim = 200;
};

struct QuadratureDiag {
  double peak_density = 0.0;      // max of exp(-f/T) over grid (relative units)
  double boundary_density = 0.0;  // max over outermost nodes
  bool boundary_warning = false;  // boundary/peak above 1e-12
};

// F = -T log integral exp(-f/T) dz over the box, composite Gauss-Legendre.
// Low-dimensional oracle: rejects n_nodes > 3.
double free_energy_quadrature(const Network& net, const ClampContext& ctx, double temperature,
                              const QuadratureGrid& grid, QuadratureDiag* diag = nullptr);

// One pass over the tensor grid: visit(z, w) is called with the quadrature
// weight times the (shifted) Boltzmann density; returns the partition sum in
// the same shifted units and the reference energy used for the shift.
double quadrature_sweep(const Network& net, const ClampContext& ctx, double temperature,
                        const QuadratureGrid& grid,
                        const std::function<void(const Eigen::VectorXd&, double)>& visit,
                        double* f_ref_out = nullptr, QuadratureDiag* diag = nullptr);

// Boltzmann expectations of several observables in one sweep (shared with the
// free-energy computation when free_energy_out is supplied).
Eigen::VectorXd quadrature_expectations(
    const Network& net, const ClampContext& ctx, double temperature,
    const QuadratureGrid& grid,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& observables,
    double* free_energy_out = nullptr, QuadratureDiag* diag = nullptr);

// Box centered on the relaxed fixed point, half-width proportional to the
// thermal standard deviation per coordinate (plus a fixed margin).
QuadratureGrid default_grid(const Network& net, const ClampContext& ctx, double temperature,
                            int points_per_dim = 300, double sigmas = 12.0,
                            const SolverParams& solver = {});

}  // namespace epsim
