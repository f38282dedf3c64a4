#include "core/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epsim {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 step applied to master offset by the stream counter.
  std::uint64_t x = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

SampleSet langevin_chain(const Network& net, const ClampContext& ctx,
                         const SamplerParams& params, const Eigen::VectorXd& z0) {
  const EnergyModel model(net, ctx);
  SampleSet set;
  set.params = params;
  set.ctx = ctx;
  set.samples.reserve(static_cast<size_t>(params.n_samples));
  langevin_run(model, params, z0,
               [&](const Eigen::VectorXd& z) { set.samples.push_back(z); });
  return set;
}

namespace {

// SE over a list of (already batched) means; merges pairs level by level and
// keeps the largest estimate among levels with at least min_batches batches.
MeanSE doubling_se(std::vector<double> means, std::vector<double> weights) {
  MeanSE out;
  const double wtot = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < means.size(); ++i) acc += means[i] * weights[i];
  out.mean = wtot > 0 ? acc / wtot : 0.0;

  constexpr size_t min_batches = 16;
  double best_se = 0.0;
  while (means.size() >= 2) {
    const size_t b = means.size();
    if (b >= min_batches || best_se == 0.0) {
      double var = 0.0;
      for (size_t i = 0; i < b; ++i) {
        const double d = means[i] - out.mean;
        var += d * d;
      }
      var /= static_cast<double>(b - 1);
      const double se = std::sqrt(var / static_cast<double>(b));
      if (b >= min_batches) best_se = std::max(best_se, se);
      else if (best_se == 0.0) best_se = se;
    }
    // merge adjacent batches (weighted by their sample counts)
    std::vector<double> m2, w2;
    m2.reserve(b / 2 + 1);
    w2.reserve(b / 2 + 1);
    for (size_t i = 0; i + 1 < b; i += 2) {
      const double w = weights[i] + weights[i + 1];
      m2.push_back((means[i] * weights[i] + means[i + 1] * weights[i + 1]) / w);
      w2.push_back(w);
    }
    if (b % 2 == 1) {
      m2.push_back(means[b - 1]);
      w2.push_back(weights[b - 1]);
    }
    means = std::move(m2);
    weights = std::move(w2);
  }
  out.se = best_se;
  return out;
}

}  // namespace

MeanSE batch_mean_se(const std::vector<double>& series) {
  require(!series.empty(), ErrorCode::InvalidArgument, "empty series");
  if (series.size() == 1) return {series[0], 0.0};
  return doubling_se(series, std::vector<double>(series.size(), 1.0));
}

MeanSE batch_mean_se_weighted(std::vector<double> means, std::vector<double> weights) {
  require(!means.empty() && means.size() == weights.size(), ErrorCode::InvalidArgument,
          "batch means and weights must align");
  if (means.size() == 1) return {means[0], 0.0};
  return doubling_se(std::move(means), std::move(weights));
}

MeanSE mc_expectation(const SampleSet& set,
                      const std::function<double(const Eigen::VectorXd&)>& observable) {
  require(!set.samples.empty(), ErrorCode::InvalidArgument, "empty sample set");
  const size_t n = set.samples.size();
  const bool weighted = !set.weights.empty();
  if (weighted)
    require_dim(set.weights.size() == n, "weights must match sample count");

  std::vector<double> values(n);
  for (size_t i = 0; i < n; ++i) values[i] = observable(set.samples[i]);

  if (!weighted) return batch_mean_se(values);

  // Weighted mean with a delta-method influence series for the batch-means SE.
  double sw = 0.0, swx = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sw += set.weights[i];
    swx += set.weights[i] * values[i];
  }
  require(sw > 0.0, ErrorCode::Numerical, "non-positive total weight");
  const double mean = swx / sw;
  const double wbar = sw / static_cast<double>(n);
  std::vector<double> influence(n);
  for (size_t i = 0; i < n; ++i)
    influence[i] = set.weights[i] * (values[i] - mean) / wbar;
  MeanSE se = batch_mean_se(influence);
  return {mean, se.se};
}

// ---------------------------------------------------------------------------
// BucketSeries
// ---------------------------------------------------------------------------

BucketSeries::BucketSeries(long n_samples, int max_buckets) {
  require(n_samples > 0, ErrorCode::InvalidArgument, "n_samples must be positive");
  n_buckets_ = static_cast<int>(std::min<long>(max_buckets, n_samples));
  per_bucket_ = std::max<long>(1, n_samples / n_buckets_);
  sum_.assign(static_cast<size_t>(n_buckets_), 0.0);
  count_.assign(static_cast<size_t>(n_buckets_), 0);
}

double BucketSeries::total() const {
  return std::accumulate(sum_.begin(), sum_.end(), 0.0);
}

std::vector<double> BucketSeries::bucket_means() const {
  std::vector<double> m;
  m.reserve(sum_.size());
  for (size_t b = 0; b < sum_.size(); ++b)
    if (count_[b] > 0) m.push_back(sum_[b] / static_cast<double>(count_[b]));
  return m;
}

MeanSE BucketSeries::mean_se() const {
  require(counter_ > 0, ErrorCode::InvalidArgument, "empty series");
  std::vector<double> means, weights;
  for (size_t b = 0; b < sum_.size(); ++b) {
    if (count_[b] > 0) {
      means.push_back(sum_[b] / static_cast<double>(count_[b]));
      weights.push_back(static_cast<double>(count_[b]));
    }
  }
  if (means.size() == 1) return {means[0], 0.0};
  return doubling_se(std::move(means), std::move(weights));
}

MeanSE covariance_se(const BucketSeries& x, const BucketSeries& y, const BucketSeries& xy) {
  require(x.n() == y.n() && x.n() == xy.n() && x.n() > 1, ErrorCode::InvalidArgument,
          "covariance needs aligned series with at least two samples");
  const double n = static_cast<double>(x.n());
  const double mx = x.total() / n;
  const double my = y.total() / n;
  const double cov = xy.total() / n - mx * my;

  // Influence series (xy - mx*y - my*x + mx*my) has mean = cov by
  // construction; its batch-means SE is the covariance error bar.
  const auto bx = x.bucket_means();
  const auto by = y.bucket_means();
  const auto bxy = xy.bucket_means();
  const auto counts = x.bucket_counts();
  std::vector<double> means, weights;
  means.reserve(bx.size());
  size_t k = 0;
  for (size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] <= 0) continue;
    means.push_back(bxy[k] - mx * by[k] - my * bx[k] + mx * my);
    weights.push_back(static_cast<double>(counts[b]));
    ++k;
  }
  if (means.size() == 1) return {cov, 0.0};
  MeanSE se = doubling_se(std::move(means), std::move(weights));
  return {cov, se.se};
}

}  // namespace epsim
