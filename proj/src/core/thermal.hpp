#pragma once

#include "core/gradient_report.hpp"
#include "core/network.hpp"
#include "core/sampler.hpp"

namespace epsim {

// Two-chain clamped estimator: chains at beta = +/- delta_beta, gradient per
// parameter from the symmetric difference of the conjugate observables.
GradientReport grad_clamped_thermal(const Network& net, const ClampContext& ctx0,
                                    double delta_beta, const SamplerParams& params);

// Zero-clamp covariance estimator: a single beta = 0 chain, gradient per
// parameter from -(1/T) Cov[df/dtheta, cost]. The target d enters only
// through the cost observable.
GradientReport grad_covariance(const Network& net, const ClampContext& ctx0,
                               const SamplerParams& params);

// Reweighting estimator: clamped expectations recovered from the beta = 0
// chain through Boltzmann weight ratios exp(-+ beta_probe c / T), symmetric
// difference over 2 beta_probe. Fails when the effective sample size drops
// below ess_floor_frac of the nominal count.
GradientReport grad_reweighted(const Network& net, const ClampContext& ctx0,
                               double beta_probe, const SamplerParams& params,
                               double ess_floor_frac = 0.10);

}  // namespace epsim
