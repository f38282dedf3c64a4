#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/network.hpp"

namespace epsim {

struct SamplerParams {
  double dt = 1e-2;
  double temperature = 1.0;
  long burn_in = 1000;
  long n_samples = 10000;
  long thin = 1;
  std::uint64_t seed = 0;

  void validate() const {
    require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
    require(temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
    require(thin >= 1, ErrorCode::InvalidArgument, "thin must be >= 1");
    require(n_samples > 0, ErrorCode::InvalidArgument, "n_samples must be positive");
    require(burn_in >= 0, ErrorCode::InvalidArgument, "burn_in must be non-negative");
  }
};

struct SampleSet {
  std::vector<Eigen::VectorXd> samples;
  std::vector<double> weights;  // empty => unweighted; else positive, mean one
  SamplerParams params;
  ClampContext ctx;
};

// Substream derivation: seed_k = splitmix64(master + GOLDEN * (k + 1)).
// Counter-based so chains, epochs and examples get reproducible independent
// streams without shared state.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

// Euler-Maruyama walk of the overdamped Langevin dynamics
//   z <- z - grad f(z) dt + sqrt(2 T dt) xi.
// Runs burn_in + n_samples * thin steps, invoking on_sample(z) for each
// retained state. Throws on non-finite states, naming the step index.
template <class F>
void langevin_run(const EnergyModel& model, const SamplerParams& params,
                  const Eigen::VectorXd& z0, F&& on_sample) {
  params.validate();
  require_dim(z0.size() == model.net().n_nodes, "z0 size must equal n_nodes");

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_scale = std::sqrt(2.0 * params.temperature * params.dt);

  Eigen::VectorXd z = z0;
  Eigen::VectorXd g(z.size());
  const long total = params.burn_in + params.n_samples * params.thin;
  long retained = 0;
  for (long step = 0; step < total; ++step) {
    model.grad(z, g);
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z[i] += -g[i] * params.dt + noise_scale * gauss(rng);
    if (!z.allFinite()) {
      throw Error(ErrorCode::Numerical,
                  "Langevin chain diverged at step " + std::to_string(step) +
                      "; reduce dt");
    }
    if (step >= params.burn_in && (step - params.burn_in + 1) % params.thin == 0) {
      on_sample(static_cast<const Eigen::VectorXd&>(z));
      if (++retained == params.n_samples) break;
    }
  }
}

SampleSet langevin_chain(const Network& net, const ClampContext& ctx,
                         const SamplerParams& params, const Eigen::VectorXd& z0);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

// Batch-means standard error with batch-size doubling: batches are merged
// level by level and the largest SE over levels with enough batches is kept,
// so autocorrelated series do not get i.i.d.-optimistic error bars.
MeanSE batch_mean_se(const std::vector<double>& series);

MeanSE mc_expectation(const SampleSet& set,
                      const std::function<double(const Eigen::VectorXd&)>& observable);

// Streaming accumulator used by the thermal estimators: scalar series are
// bucketed on the fly (fixed bucket count), and means / covariances with
// batch-means errors are derived from the bucket sums afterwards.
class BucketSeries {
 public:
  explicit BucketSeries(long n_samples, int max_buckets = 1024);

  void add(double x) {
    const long b = std::min(counter_ / per_bucket_, static_cast<long>(n_buckets_ - 1));
    sum_[static_cast<size_t>(b)] += x;
    count_[static_cast<size_t>(b)] += 1;
    ++counter_;
  }

  double total() const;
  long n() const { return counter_; }
  // Per-bucket means (only buckets that received samples).
  std::vector<double> bucket_means() const;
  std::vector<long> bucket_counts() const { return count_; }

  MeanSE mean_se() const;

 private:
  long per_bucket_;
  int n_buckets_;
  long counter_ = 0;
  std::vector<double> sum_;
  std::vector<long> count_;
};

// mean/SE of Cov[x, y] from three aligned series (x, y, x*y).
MeanSE covariance_se(const BucketSeries& x, const BucketSeries& y, const BucketSeries& xy);

// Batch-means SE over precomputed batch means with per-batch sample counts.
MeanSE batch_mean_se_weighted(std::vector<double> means, std::vector<double> weights);

}  // namespace epsim
