#include "core/network.hpp"

#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "core/errors.hpp"
#include "core/gradient_report.hpp"

namespace epsim {

void Network::validate() const {
  require(n_nodes > 0, ErrorCode::InvalidArgument, "network needs at least one node");
  require_dim(weights.rows() == n_nodes && weights.cols() == n_nodes,
              "weights must be n_nodes x n_nodes");
  require_dim(lambda.size() == n_nodes, "lambda must have one entry per node");
  require(!input_nodes.empty() && !output_nodes.empty(), ErrorCode::InvalidArgument,
          "input and output node sets must be non-empty");

  std::set<int> in(input_nodes.begin(), input_nodes.end());
  std::set<int> out(output_nodes.begin(), output_nodes.end());
  require(in.size() == input_nodes.size() && out.size() == output_nodes.size(),
          ErrorCode::InvalidArgument, "node sets must not contain duplicates");
  for (int i : input_nodes)
    require(i >= 0 && i < n_nodes, ErrorCode::InvalidArgument, "input node index out of range");
  for (int i : output_nodes) {
    require(i >= 0 && i < n_nodes, ErrorCode::InvalidArgument, "output node index out of range");
    require(!in.count(i), ErrorCode::InvalidArgument,
            "input and output node sets must be disjoint");
  }

  for (int i = 0; i < n_nodes; ++i) {
    require(lambda[i] > 0.0, ErrorCode::InvalidArgument,
            "lambda must be positive (confining local potential)");
    require(weights(i, i) == 0.0, ErrorCode::InvalidArgument,
            "weight matrix must have zero diagonal");
    for (int j = i + 1; j < n_nodes; ++j)
      require(weights(i, j) == weights(j, i), ErrorCode::InvalidArgument,
              "weight matrix must be symmetric");
  }
}

// ---------------------------------------------------------------------------
// EnergyModel
// ---------------------------------------------------------------------------

EnergyModel::EnergyModel(const Network& net, const ClampContext& ctx)
    : net_(&net), ctx_(&ctx) {
  require_dim(ctx.u.size() == net.n_inputs(), "clamp u must match |I_in|");
  require_dim(ctx.d.size() == net.n_outputs(), "clamp d must match |I_out|");
  require(ctx.alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be non-negative");

  const int n = net.n_nodes;
  alpha_mask_ = Eigen::VectorXd::Zero(n);
  alpha_u_ = Eigen::VectorXd::Zero(n);
  beta_mask_ = Eigen::VectorXd::Zero(n);
  beta_d_ = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < net.n_inputs(); ++k) {
    alpha_mask_[net.input_nodes[k]] = ctx.alpha;
    alpha_u_[net.input_nodes[k]] = ctx.alpha * ctx.u[k];
  }
  for (int k = 0; k < net.n_outputs(); ++k) {
    beta_mask_[net.output_nodes[k]] = ctx.beta;
    beta_d_[net.output_nodes[k]] = ctx.beta * ctx.d[k];
  }
  rho_.resize(n);
  rho1_.resize(n);
  wr_.resize(n);
}

double EnergyModel::energy(const Eigen::VectorXd& z) const {
  require_dim(z.size() == net_->n_nodes, "state vector size must equal n_nodes");
  const Network& net = *net_;
  double e = 0.5 * z.cwiseProduct(net.lambda.cwiseProduct(z)).sum();
  for (int k = 0; k < net.n_inputs(); ++k) {
    const double r = ctx_->u[k] - z[net.input_nodes[k]];
    e += 0.5 * ctx_->alpha * r * r;
  }
  for (int k = 0; k < net.n_outputs(); ++k) {
    const double r = z[net.output_nodes[k]] - ctx_->d[k];
    e += 0.5 * ctx_->beta * r * r;
  }
  for (Eigen::Index i = 0; i < z.size(); ++i) rho_[i] = rho(net.activation, z[i], 0);
  // -1/2 sum_{i != j} W_ij rho_i rho_j, using W symmetric with zero diagonal
  e -= 0.5 * rho_.dot(net.weights * rho_);
  return e;
}

void EnergyModel::grad(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
  require_dim(z.size() == net_->n_nodes, "state vector size must equal n_nodes");
  const Network& net = *net_;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    rho_[i] = rho(net.activation, z[i], 0);
    rho1_[i] = rho(net.activation, z[i], 1);
  }
  wr_.noalias() = net.weights * rho_;
  out = net.lambda.cwiseProduct(z) - rho1_.cwiseProduct(wr_) +
        alpha_mask_.cwiseProduct(z) - alpha_u_ + beta_mask_.cwiseProduct(z) - beta_d_;
}

Eigen::VectorXd EnergyModel::grad(const Eigen::VectorXd& z) const {
  Eigen::VectorXd out(z.size());
  grad(z, out);
  return out;
}

double EnergyModel::cost(const Eigen::VectorXd& z) const {
  return epsim::cost(z, ctx_->d, net_->output_nodes);
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

double energy(const Network& net, const Eigen::VectorXd& z, const ClampContext& ctx) {
  return EnergyModel(net, ctx).energy(z);
}

double cost(const Eigen::VectorXd& z, const Eigen::VectorXd& d,
            const std::vector<int>& output_nodes) {
  require_dim(d.size() == static_cast<Eigen::Index>(output_nodes.size()),
              "target vector must match |I_out|");
  double c = 0.0;
  for (size_t k = 0; k < output_nodes.size(); ++k) {
    require_dim(output_nodes[k] >= 0 && output_nodes[k] < z.size(),
                "output node index out of range for state vector");
    const double r = z[output_nodes[k]] - d[k];
    c += 0.5 * r * r;
  }
  return c;
}

Eigen::VectorXd grad_z(const Network& net, const Eigen::VectorXd& z,
                       const ClampContext& ctx) {
  return EnergyModel(net, ctx).grad(z);
}

GradientReport grad_theta(const Network& net, const Eigen::VectorXd& z,
                          const ClampContext& ctx) {
  require_dim(z.size() == net.n_nodes, "state vector size must equal n_nodes");
  (void)ctx;  // clamp terms carry no trainable parameters
  GradientReport rep = GradientReport::zeros(net.n_nodes, "analytic");
  Eigen::VectorXd r(net.n_nodes);
  for (int i = 0; i < net.n_nodes; ++i) r[i] = rho(net.activation, z[i], 0);
  rep.w.noalias() = -(r * r.transpose());
  rep.w.diagonal().setZero();
  rep.lambda = 0.5 * z.cwiseProduct(z);
  return rep;
}

// ---------------------------------------------------------------------------
// GradientReport
// ---------------------------------------------------------------------------

GradientReport GradientReport::zeros(int n_nodes, std::string method_name) {
  GradientReport rep;
  rep.method = std::move(method_name);
  rep.w = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  rep.lambda = Eigen::VectorXd::Zero(n_nodes);
  rep.w_se = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  rep.lambda_se = Eigen::VectorXd::Zero(n_nodes);
  return rep;
}

std::pair<int, int> GradientReport::pair_at(int n_nodes, int flat_index) {
  int k = flat_index;
  for (int i = 0; i < n_nodes; ++i) {
    const int row = n_nodes - 1 - i;
    if (k < row) return {i, i + 1 + k};
    k -= row;
  }
  throw Error(ErrorCode::InvalidArgument, "flat pair index out of range");
}

std::string GradientReport::param_name(int n_nodes, int flat_index) {
  if (flat_index < n_pairs(n_nodes)) {
    auto [i, j] = pair_at(n_nodes, flat_index);
    return "W[" + std::to_string(i) + "][" + std::to_string(j) + "]";
  }
  return "lambda[" + std::to_string(flat_index - n_pairs(n_nodes)) + "]";
}

Eigen::VectorXd GradientReport::flat() const {
  const int n = n_nodes();
  Eigen::VectorXd v(n_params(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) v[k++] = w(i, j);
  for (int i = 0; i < n; ++i) v[k++] = lambda[i];
  return v;
}

Eigen::VectorXd GradientReport::flat_se() const {
  const int n = n_nodes();
  Eigen::VectorXd v(n_params(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) v[k++] = w_se(i, j);
  for (int i = 0; i < n; ++i) v[k++] = lambda_se[i];
  return v;
}

nlohmann::json GradientReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  if (delta_beta != 0.0) j["delta_beta"] = delta_beta;
  if (temperature != 0.0) j["temperature"] = temperature;
  if (beta_probe != 0.0) j["beta_probe"] = beta_probe;
  if (n_samples > 0) j["n_samples"] = n_samples;
  if (effective_sample_size >= 0.0) j["effective_sample_size"] = effective_sample_size;
  const int n = n_nodes();
  nlohmann::json params = nlohmann::json::array();
  const Eigen::VectorXd v = flat();
  const Eigen::VectorXd se = flat_se();
  for (int k = 0; k < n_params(n); ++k) {
    params.push_back({{"name", param_name(n, k)}, {"value", v[k]}, {"std_error", se[k]}});
  }
  j["params"] = params;
  return j;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json j;
  j["n_nodes"] = net.n_nodes;
  j["input_nodes"] = net.input_nodes;
  j["output_nodes"] = net.output_nodes;
  std::vector<double> w;
  w.reserve(static_cast<size_t>(net.n_nodes) * net.n_nodes);
  for (int i = 0; i < net.n_nodes; ++i)
    for (int k = 0; k < net.n_nodes; ++k) w.push_back(net.weights(i, k));
  j["weights"] = w;
  j["lambda"] = std::vector<double>(net.lambda.data(), net.lambda.data() + net.lambda.size());
  j["activation"] = activation_name(net.activation);
  return j;
}

Network network_from_json(const nlohmann::json& j) {
  Network net;
  try {
    net.n_nodes = j.at("n_nodes").get<int>();
    net.input_nodes = j.at("input_nodes").get<std::vector<int>>();
    net.output_nodes = j.at("output_nodes").get<std::vector<int>>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto lam = j.at("lambda").get<std::vector<double>>();
    require_dim(static_cast<int>(w.size()) == net.n_nodes * net.n_nodes,
                "weights array must hold n_nodes^2 row-major entries");
    require_dim(static_cast<int>(lam.size()) == net.n_nodes,
                "lambda array must hold n_nodes entries");
    net.weights.resize(net.n_nodes, net.n_nodes);
    for (int i = 0; i < net.n_nodes; ++i)
      for (int k = 0; k < net.n_nodes; ++k) net.weights(i, k) = w[i * net.n_nodes + k];
    net.lambda = Eigen::Map<const Eigen::VectorXd>(lam.data(), net.n_nodes);
    net.activation = activation_from_name(j.at("activation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad network document: ") + e.what());
  }
  net.validate();
  return net;
}

std::string network_to_json_string(const Network& net) {
  return network_to_json(net).dump(2);
}

Network random_network(int n_nodes, std::vector<int> input_nodes,
                       std::vector<int> output_nodes, double w_scale,
                       std::uint64_t seed, Activation activation, double lambda0) {
  Network net;
  net.n_nodes = n_nodes;
  net.input_nodes = std::move(input_nodes);
  net.output_nodes = std::move(output_nodes);
  net.activation = activation;
  net.lambda = Eigen::VectorXd::Constant(n_nodes, lambda0);
  net.weights = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-w_scale, w_scale);
  for (int i = 0; i < n_nodes; ++i)
    for (int j = i + 1; j < n_nodes; ++j) net.weights(i, j) = net.weights(j, i) = u(rng);
  net.validate();
  return net;
}

Network network_from_json_string(const std::string& s) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(s);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("network JSON parse error: ") + e.what());
  }
  return network_from_json(j);
}

}  // namespace epsim
