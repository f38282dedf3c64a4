#pragma once

#include <Eigen/Dense>
#include <limits>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <utility>

namespace epsim {

// Per-parameter gradient estimates over the trainable set (all unordered
// coupling pairs i<j plus all lambda_i), with estimator metadata and standard
// errors (zero for the deterministic estimators).
struct GradientReport {
  std::string method;
  double delta_beta = 0.0;
  double temperature = 0.0;
  double beta_probe = 0.0;
  long long n_samples = 0;
  double effective_sample_size = -1.0;  // < 0 when not applicable

  Eigen::MatrixXd w;          // symmetric, zero diagonal
  Eigen::VectorXd lambda;
  Eigen::MatrixXd w_se;
  Eigen::VectorXd lambda_se;

  // Free-phase readout collected as a byproduct where the estimator has it
  // (fixed-point cost for the deterministic schemes, chain means for the
  // beta = 0 thermal schemes); NaN / empty when unavailable.
  double free_cost = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd free_output_mean;

  static GradientReport zeros(int n_nodes, std::string method_name);

  int n_nodes() const { return static_cast<int>(lambda.size()); }

  // Flat parameter order: W pairs (i<j) lexicographic, then lambda_0..n-1.
  static int n_params(int n_nodes) { return n_nodes * (n_nodes - 1) / 2 + n_nodes; }
  static int n_pairs(int n_nodes) { return n_nodes * (n_nodes - 1) / 2; }
  static std::pair<int, int> pair_at(int n_nodes, int flat_index);
  static std::string param_name(int n_nodes, int flat_index);

  Eigen::VectorXd flat() const;
  Eigen::VectorXd flat_se() const;

  nlohmann::json to_json() const;
};

}  // namespace epsim
