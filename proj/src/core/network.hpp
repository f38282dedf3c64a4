#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "core/activation.hpp"

namespace epsim {

struct GradientReport;

// Hopfield-style network: symmetric couplings, per-node quadratic confinement
// h_i(z) = lambda_i z^2 / 2, and disjoint input/output node sets.
struct Network {
  int n_nodes = 0;
  std::vector<int> input_nodes;
  std::vector<int> output_nodes;
  Eigen::MatrixXd weights;  // symmetric, zero diagonal
  Eigen::VectorXd lambda;   // all > 0
  Activation activation = Activation::Tanh;

  // Throws on any structural violation (asymmetry, nonzero diagonal,
  // overlapping or out-of-range node sets, non-positive lambda).
  void validate() const;

  int n_inputs() const { return static_cast<int>(input_nodes.size()); }
  int n_outputs() const { return static_cast<int>(output_nodes.size()); }
};

// Clamp data for one example: input targets u (strength alpha) and output
// targets d (strength beta; sign matters, symmetric nudging uses both).
struct ClampContext {
  Eigen::VectorXd u;  // size |I_in|
  Eigen::VectorXd d;  // size |I_out|
  double alpha = 0.0;
  double beta = 0.0;

  ClampContext with_beta(double b) const {
    ClampContext c = *this;
    c.beta = b;
    return c;
  }
};

// Evaluation kernel for a fixed (net, ctx) pair. Scatters the clamp terms
// over the full node dimension once so the per-step loops stay branch-free;
// relaxation and Langevin sampling call these in tight loops.
class EnergyModel {
 public:
  EnergyModel(const Network& net, const ClampContext& ctx);

  double energy(const Eigen::VectorXd& z) const;
  void grad(const Eigen::VectorXd& z, Eigen::VectorXd& out) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& z) const;
  double cost(const Eigen::VectorXd& z) const;

  const Network& net() const { return *net_; }
  const ClampContext& ctx() const { return *ctx_; }

 private:
  const Network* net_;
  const ClampContext* ctx_;
  Eigen::VectorXd alpha_mask_, alpha_u_;  // alpha resp. alpha*u on input nodes
  Eigen::VectorXd beta_mask_, beta_d_;    // beta resp. beta*d on output nodes
  mutable Eigen::VectorXd rho_, rho1_, wr_;  // scratch
};

double energy(const Network& net, const Eigen::VectorXd& z, const ClampContext& ctx);

// Quadratic readout error, 1/2 sum over outputs of (z_i - d_i)^2.
double cost(const Eigen::VectorXd& z, const Eigen::VectorXd& d,
            const std::vector<int>& output_nodes);

Eigen::VectorXd grad_z(const Network& net, const Eigen::VectorXd& z,
                       const ClampContext& ctx);

// Exact parameter derivatives of the energy at the supplied state:
// dF/dW_ij = -rho(z_i) rho(z_j) per unordered pair, dF/dlambda_i = z_i^2/2.
GradientReport grad_theta(const Network& net, const Eigen::VectorXd& z,
                          const ClampContext& ctx);

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
std::string network_to_json_string(const Network& net);
Network network_from_json_string(const std::string& s);

// Symmetric W ~ U(-w_scale, w_scale), zero diagonal, uniform lambda.
Network random_network(int n_nodes, std::vector<int> input_nodes,
                       std::vector<int> output_nodes, double w_scale,
                       std::uint64_t seed, Activation activation = Activation::Tanh,
                       double lambda0 = 1.0);

}  // namespace epsim
