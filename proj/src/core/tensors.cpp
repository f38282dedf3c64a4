#include "core/tensors.hpp"

#include "core/errors.hpp"

namespace epsim {

namespace {

// Distinguishes the index multiset patterns of a rank-3 entry.
struct Multiset3 {
  int repeated = -1, single = -1;
  enum Kind { AllSame, TwoOne, Distinct } kind;
};

Multiset3 classify3(int a, int b, int c) {
  Multiset3 m;
  if (a == b && b == c) {
    m.kind = Multiset3::AllSame;
    m.repeated = a;
  } else if (a == b) {
    m.kind = Multiset3::TwoOne;
    m.repeated = a;
    m.single = c;
  } else if (a == c) {
    m.kind = Multiset3::TwoOne;
    m.repeated = a;
    m.single = b;
  } else if (b == c) {
    m.kind = Multiset3::TwoOne;
    m.repeated = b;
    m.single = a;
  } else {
    m.kind = Multiset3::Distinct;
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor3
// ---------------------------------------------------------------------------

double Tensor3::value(int a, int b, int c) const {
  const Multiset3 m = classify3(a, b, c);
  switch (m.kind) {
    case Multiset3::AllSame: return diag[m.repeated];
    case Multiset3::TwoOne: return pair(m.repeated, m.single);
    case Multiset3::Distinct: return 0.0;
  }
  return 0.0;
}

Eigen::VectorXd Tensor3::contract_sym(const Eigen::MatrixXd& x) const {
  const int n = dim();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    double acc = diag[c] * x(c, c);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      // (a,b) = (r,r) with third index c, plus the two orderings that place
      // one index c against the pair entry V_ccr.
      acc += pair(r, c) * x(r, r) + 2.0 * pair(c, r) * x(c, r);
    }
    s[c] = acc;
  }
  return s;
}

Eigen::MatrixXd Tensor3::contract_vec(const Eigen::VectorXd& y) const {
  const int n = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    double acc = diag[a] * y[a];
    for (int c = 0; c < n; ++c) {
      if (c == a) continue;
      acc += pair(a, c) * y[c];
      m(a, c) = pair(a, c) * y[a] + pair(c, a) * y[c];
    }
    m(a, a) = acc;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Tensor4
// ---------------------------------------------------------------------------

double Tensor4::value(int a, int b, int c, int d) const {
  int idx[4] = {a, b, c, d};
  // Count occurrences of the two (at most) distinct values.
  int v0 = idx[0], n0 = 1, v1 = -1, n1 = 0;
  for (int k = 1; k < 4; ++k) {
    if (idx[k] == v0) {
      ++n0;
    } else if (n1 == 0 || idx[k] == v1) {
      v1 = idx[k];
      ++n1;
    } else {
      return 0.0;  // three or more distinct indices
    }
  }
  if (n1 == 0) return diag[v0];
  if (n0 == 3) return p31(v0, v1);
  if (n1 == 3) return p31(v1, v0);
  return p22(v0, v1);  // 2 + 2
}

Eigen::MatrixXd Tensor4::contract_sym(const Eigen::MatrixXd& x) const {
  const int n = dim();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < n; ++e) {
    double acc = x(e, e) * diag[e];
    for (int b = 0; b < n; ++b) {
      if (b == e) continue;
      acc += 2.0 * x(e, b) * p31(e, b) + x(b, b) * p22(b, e);
    }
    t(e, e) = acc;
  }
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d) {
      if (c == d) continue;
      t(c, d) = x(c, c) * p31(c, d) + x(d, d) * p31(d, c) + 2.0 * x(c, d) * p22(c, d);
    }
  return t;
}

Tensor3 Tensor4::contract_vec(const Eigen::VectorXd& y) const {
  const int n = dim();
  Tensor3 r;
  r.diag.resize(n);
  r.pair = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    double acc = diag[a] * y[a];
    for (int d = 0; d < n; ++d) {
      if (d == a) continue;
      acc += p31(a, d) * y[d];
      r.pair(a, d) = p31(a, d) * y[a] + p22(a, d) * y[d];
    }
    r.diag[a] = acc;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Energy derivatives
// ---------------------------------------------------------------------------

Eigen::MatrixXd hessian(const Network& net, const Eigen::VectorXd& z,
                        const ClampContext& ctx, HessianVariant variant) {
  require_dim(z.size() == net.n_nodes, "state vector size must equal n_nodes");
  const int n = net.n_nodes;
  const ActivationDerivs ad = ActivationDerivs::compute(net.activation, z, 2);
  const Eigen::VectorXd wr = net.weights * ad.r0;

  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      h(i, j) = i == j ? 0.0 : -ad.r1[i] * ad.r1[j] * net.weights(i, j);

  Eigen::VectorXd t = net.lambda - ad.r2.cwiseProduct(wr);
  for (int k = 0; k < net.n_inputs(); ++k) {
    const int i = net.input_nodes[k];
    t[i] += ctx.alpha;
    if (variant == HessianVariant::AsPrinted) t[i] -= net.lambda[i];
  }
  for (int k = 0; k < net.n_outputs(); ++k) {
    const int i = net.output_nodes[k];
    t[i] += ctx.beta;
    if (variant == HessianVariant::AsPrinted) t[i] -= net.lambda[i];
  }
  h.diagonal() = t;
  return h;
}

Tensor3 third_derivative(const Network& net, const Eigen::VectorXd& z) {
  require_dim(z.size() == net.n_nodes, "state vector size must equal n_nodes");
  require(activation_max_order(net.activation) >= 3, ErrorCode::Unsupported,
          "activation '" + activation_name(net.activation) +
              "' lacks the third derivative needed for V3");
  const int n = net.n_nodes;
  const ActivationDerivs ad = ActivationDerivs::compute(net.activation, z, 3);
  const Eigen::VectorXd wr = net.weights * ad.r0;

  Tensor3 v;
  v.diag = -ad.r3.cwiseProduct(wr);
  v.pair.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      v.pair(a, b) = a == b ? 0.0 : -net.weights(a, b) * ad.r2[a] * ad.r1[b];
  return v;
}

Tensor4 fourth_derivative(const Network& net, const Eigen::VectorXd& z) {
  require_dim(z.size() == net.n_nodes, "state vector size must equal n_nodes");
  require(activation_max_order(net.activation) >= 4, ErrorCode::Unsupported,
          "activation '" + activation_name(net.activation) +
              "' lacks the fourth derivative needed for V4");
  const int n = net.n_nodes;
  const ActivationDerivs ad = ActivationDerivs::compute(net.activation, z, 4);
  const Eigen::VectorXd wr = net.weights * ad.r0;

  Tensor4 v;
  v.diag = -ad.r4.cwiseProduct(wr);
  v.p31.resize(n, n);
  v.p22.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) {
        v.p31(a, b) = 0.0;
        v.p22(a, b) = 0.0;
      } else {
        v.p31(a, b) = -net.weights(a, b) * ad.r3[a] * ad.r1[b];
        v.p22(a, b) = -net.weights(a, b) * ad.r2[a] * ad.r2[b];
      }
    }
  return v;
}

DerivativeTensors derivative_tensors(const Network& net, const Eigen::VectorXd& z,
                                     const ClampContext& ctx, int order,
                                     HessianVariant variant) {
  require(order >= 2 && order <= 4, ErrorCode::InvalidArgument,
          "derivative order must be 2, 3 or 4");
  require(activation_max_order(net.activation) >= order, ErrorCode::Unsupported,
          "activation '" + activation_name(net.activation) +
              "' does not support derivative order " + std::to_string(order));
  DerivativeTensors out;
  out.grad = grad_z(net, z, ctx);
  out.hessian = hessian(net, z, ctx, variant);
  if (order >= 3) out.v3 = third_derivative(net, z);
  if (order >= 4) out.v4 = fourth_derivative(net, z);
  return out;
}

Eigen::MatrixXd hessian_dW(const Network& net, const Eigen::VectorXd& z,
                           int i, int j) {
  require(i != j && i >= 0 && j >= 0 && i < net.n_nodes && j < net.n_nodes,
          ErrorCode::InvalidArgument, "hessian_dW needs a valid off-diagonal pair");
  const ActivationDerivs ad = ActivationDerivs::compute(net.activation, z, 2);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(net.n_nodes, net.n_nodes);
  a(i, j) = a(j, i) = -ad.r1[i] * ad.r1[j];
  a(i, i) = -ad.r2[i] * ad.r0[j];
  a(j, j) = -ad.r2[j] * ad.r0[i];
  return a;
}

}  // namespace epsim
