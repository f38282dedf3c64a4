#include "core/thermal.hpp"

#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/relax.hpp"

namespace epsim {

namespace {

// Fills the conjugate-observable vector df/dtheta at z in flat parameter
// order (pairs i<j, then lambdas): -rho_i rho_j resp. z_i^2 / 2.
void conjugate_observables(const Network& net, const Eigen::VectorXd& z,
                           Eigen::VectorXd& rho_buf, Eigen::VectorXd& out) {
  const int n = net.n_nodes;
  for (int i = 0; i < n; ++i) rho_buf[i] = rho(net.activation, z[i], 0);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out[k++] = -rho_buf[i] * rho_buf[j];
  for (int i = 0; i < n; ++i) out[k++] = 0.5 * z[i] * z[i];
}

Eigen::VectorXd warm_start(const Network& net, const ClampContext& ctx) {
  // Best-effort relaxation; burn-in covers any residual transient.
  SolverParams sp;
  sp.tol = 1e-8;
  sp.max_iters = 200000;
  return relax(net, Eigen::VectorXd::Zero(net.n_nodes), ctx, sp).z;
}

GradientReport report_from_flat(const Network& net, const std::string& method,
                                const Eigen::VectorXd& value, const Eigen::VectorXd& se) {
  GradientReport rep = GradientReport::zeros(net.n_nodes, method);
  const int n = net.n_nodes;
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      rep.w(i, j) = rep.w(j, i) = value[k];
      rep.w_se(i, j) = rep.w_se(j, i) = se[k];
      ++k;
    }
  for (int i = 0; i < n; ++i) {
    rep.lambda[i] = value[k];
    rep.lambda_se[i] = se[k];
    ++k;
  }
  return rep;
}

}  // namespace

GradientReport grad_clamped_thermal(const Network& net, const ClampContext& ctx0,
                                    double delta_beta, const SamplerParams& params) {
  require(delta_beta > 0.0, ErrorCode::InvalidArgument, "delta_beta must be positive");
  require(ctx0.beta == 0.0, ErrorCode::InvalidArgument,
          "clamped thermal estimator expects a beta = 0 base context");
  params.validate();

  const int np = GradientReport::n_params(net.n_nodes);
  Eigen::VectorXd mean_p(np), se_p(np), mean_m(np), se_m(np);

  auto run_chain = [&](double beta, std::uint64_t stream, Eigen::VectorXd& mean,
                       Eigen::VectorXd& se) {
    const ClampContext ctx = ctx0.with_beta(beta);
    SamplerParams chain = params;
    chain.seed = split_seed(params.seed, stream);
    std::vector<BucketSeries> acc(static_cast<size_t>(np), BucketSeries(params.n_samples));
    Eigen::VectorXd rho_buf(net.n_nodes), g(np);
    const EnergyModel model(net, ctx);
    langevin_run(model, chain, warm_start(net, ctx), [&](const Eigen::VectorXd& z) {
      conjugate_observables(net, z, rho_buf, g);
      for (int k = 0; k < np; ++k) acc[static_cast<size_t>(k)].add(g[k]);
    });
    for (int k = 0; k < np; ++k) {
      const MeanSE ms = acc[static_cast<size_t>(k)].mean_se();
      mean[k] = ms.mean;
      se[k] = ms.se;
    }
  };

  run_chain(+delta_beta, 1, mean_p, se_p);
  run_chain(-delta_beta, 2, mean_m, se_m);

  const Eigen::VectorXd value = (mean_p - mean_m) / (2.0 * delta_beta);
  const Eigen::VectorXd se =
      (se_p.array().square() + se_m.array().square()).sqrt() / (2.0 * delta_beta);

  GradientReport rep = report_from_flat(net, "thermal_clamped", value, se);
  rep.delta_beta = delta_beta;
  rep.temperature = params.temperature;
  rep.n_samples = params.n_samples;
  return rep;
}

GradientReport grad_covariance(const Network& net, const ClampContext& ctx0,
                               const SamplerParams& params) {
  require(ctx0.beta == 0.0, ErrorCode::InvalidArgument,
          "covariance estimator samples strictly at beta = 0");
  params.validate();

  const int np = GradientReport::n_params(net.n_nodes);
  std::vector<BucketSeries> acc_g(static_cast<size_t>(np), BucketSeries(params.n_samples));
  std::vector<BucketSeries> acc_gc(static_cast<size_t>(np), BucketSeries(params.n_samples));
  BucketSeries acc_c(params.n_samples);
  Eigen::VectorXd out_sum = Eigen::VectorXd::Zero(net.n_outputs());

  const EnergyModel model(net, ctx0);
  Eigen::VectorXd rho_buf(net.n_nodes), g(np);
  langevin_run(model, params, warm_start(net, ctx0), [&](const Eigen::VectorXd& z) {
    conjugate_observables(net, z, rho_buf, g);
    const double c = model.cost(z);
    acc_c.add(c);
    for (int k = 0; k < net.n_outputs(); ++k) out_sum[k] += z[net.output_nodes[k]];
    for (int k = 0; k < np; ++k) {
      acc_g[static_cast<size_t>(k)].add(g[k]);
      acc_gc[static_cast<size_t>(k)].add(g[k] * c);
    }
  });

  Eigen::VectorXd value(np), se(np);
  for (int k = 0; k < np; ++k) {
    const MeanSE cov =
        covariance_se(acc_g[static_cast<size_t>(k)], acc_c, acc_gc[static_cast<size_t>(k)]);
    // dC/dtheta = -(1/T) Cov[df/dtheta, c]
    value[k] = -cov.mean / params.temperature;
    se[k] = cov.se / params.temperature;
  }

  GradientReport rep = report_from_flat(net, "thermal_covariance", value, se);
  rep.temperature = params.temperature;
  rep.n_samples = params.n_samples;
  rep.free_cost = acc_c.total() / static_cast<double>(acc_c.n());
  rep.free_output_mean = out_sum / static_cast<double>(acc_c.n());
  return rep;
}

GradientReport grad_reweighted(const Network& net, const ClampContext& ctx0,
                               double beta_probe, const SamplerParams& params,
                               double ess_floor_frac) {
  require(beta_probe != 0.0, ErrorCode::InvalidArgument,
          "beta_probe must be nonzero (the symmetric difference degenerates)");
  require(ctx0.beta == 0.0, ErrorCode::InvalidArgument,
          "reweighting estimator samples strictly at beta = 0");
  params.validate();

  const int np = GradientReport::n_params(net.n_nodes);
  const double bp = std::abs(beta_probe);
  const double t = params.temperature;

  const Eigen::VectorXd z0 = warm_start(net, ctx0);
  const EnergyModel model(net, ctx0);
  const double c_ref = model.cost(z0);  // shift keeps the exponents tame

  BucketSeries acc_wp(params.n_samples), acc_wm(params.n_samples);
  std::vector<BucketSeries> acc_wpg(static_cast<size_t>(np), BucketSeries(params.n_samples));
  std::vector<BucketSeries> acc_wmg(static_cast<size_t>(np), BucketSeries(params.n_samples));
  double sum_wp2 = 0.0, sum_wm2 = 0.0, sum_c = 0.0;
  Eigen::VectorXd out_sum = Eigen::VectorXd::Zero(net.n_outputs());

  Eigen::VectorXd rho_buf(net.n_nodes), g(np);
  langevin_run(model, params, z0, [&](const Eigen::VectorXd& z) {
    conjugate_observables(net, z, rho_buf, g);
    const double c = model.cost(z);
    sum_c += c;
    for (int k = 0; k < net.n_outputs(); ++k) out_sum[k] += z[net.output_nodes[k]];
    const double wp = std::exp(-bp * (c - c_ref) / t);  // weight toward +beta_probe
    const double wm = std::exp(+bp * (c - c_ref) / t);
    acc_wp.add(wp);
    acc_wm.add(wm);
    sum_wp2 += wp * wp;
    sum_wm2 += wm * wm;
    for (int k = 0; k < np; ++k) {
      acc_wpg[static_cast<size_t>(k)].add(wp * g[k]);
      acc_wmg[static_cast<size_t>(k)].add(wm * g[k]);
    }
  });

  const double n = static_cast<double>(acc_wp.n());
  const double ess_p = acc_wp.total() * acc_wp.total() / sum_wp2;
  const double ess_m = acc_wm.total() * acc_wm.total() / sum_wm2;
  const double ess = std::min(ess_p, ess_m);
  if (ess < ess_floor_frac * n) {
    throw Error(ErrorCode::Numerical,
                "reweighting degeneracy: effective sample size " + std::to_string(ess) +
                    " below floor " + std::to_string(ess_floor_frac * n) +
                    "; reduce beta_probe");
  }

  const double wbar_p = acc_wp.total() / n;
  const double wbar_m = acc_wm.total() / n;
  const auto wp_means = acc_wp.bucket_means();
  const auto wm_means = acc_wm.bucket_means();
  const auto counts = acc_wp.bucket_counts();

  Eigen::VectorXd value(np), se(np);
  for (int k = 0; k < np; ++k) {
    const double rp = acc_wpg[static_cast<size_t>(k)].total() / acc_wp.total();
    const double rm = acc_wmg[static_cast<size_t>(k)].total() / acc_wm.total();
    value[k] = (rp - rm) / (2.0 * beta_probe);

    // Delta-method influence per bucket; the two ratio estimators share the
    // chain, so their covariance is captured by differencing per bucket.
    const auto wpg_means = acc_wpg[static_cast<size_t>(k)].bucket_means();
    const auto wmg_means = acc_wmg[static_cast<size_t>(k)].bucket_means();
    std::vector<double> infl, weights;
    size_t kk = 0;
    for (size_t b = 0; b < counts.size(); ++b) {
      if (counts[b] <= 0) continue;
      const double psi_p = (wpg_means[kk] - rp * wp_means[kk]) / wbar_p;
      const double psi_m = (wmg_means[kk] - rm * wm_means[kk]) / wbar_m;
      infl.push_back((psi_p - psi_m) / (2.0 * beta_probe));
      weights.push_back(static_cast<double>(counts[b]));
      ++kk;
    }
    se[k] = infl.size() > 1 ? batch_mean_se_weighted(infl, weights).se : 0.0;
  }

  GradientReport rep = report_from_flat(net, "thermal_reweighted", value, se);
  rep.temperature = params.temperature;
  rep.beta_probe = beta_probe;
  rep.n_samples = params.n_samples;
  rep.effective_sample_size = ess;
  rep.free_cost = sum_c / n;
  rep.free_output_mean = out_sum / n;
  return rep;
}

}  // namespace epsim
