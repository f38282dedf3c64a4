#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace epsim {

enum class Activation { Tanh, Identity, HardSigmoid };

// Highest derivative the activation supports everywhere (hard-sigmoid is only
// piecewise smooth; its kinks make third and higher derivatives meaningless).
inline int activation_max_order(Activation a) {
  return a == Activation::HardSigmoid ? 2 : 4;
}

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
    case Activation::HardSigmoid: return "hard-sigmoid";
  }
  return "?";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  if (s == "hard-sigmoid") return Activation::HardSigmoid;
  throw Error(ErrorCode::InvalidArgument, "unknown activation: " + s);
}

// rho and its derivatives, order in [0, 4].
inline double rho(Activation a, double z, int order = 0) {
  switch (a) {
    case Activation::Identity:
      return order == 0 ? z : (order == 1 ? 1.0 : 0.0);
    case Activation::HardSigmoid: {
      // min(max(z, 0), 1); derivatives taken piecewise.
      if (order == 0) return z < 0.0 ? 0.0 : (z > 1.0 ? 1.0 : z);
      if (order == 1) return (z > 0.0 && z < 1.0) ? 1.0 : 0.0;
      return 0.0;
    }
    case Activation::Tanh: {
      const double t = std::tanh(z);
      const double s = 1.0 - t * t;
      switch (order) {
        case 0: return t;
        case 1: return s;
        case 2: return -2.0 * t * s;
        case 3: return -2.0 * s * (1.0 - 3.0 * t * t);
        case 4: return 8.0 * t * s * (2.0 - 3.0 * t * t);
      }
      break;
    }
  }
  throw Error(ErrorCode::Unsupported, "activation derivative order out of range");
}

// All derivative tables of rho at a state vector, filled up to `order`.
struct ActivationDerivs {
  Eigen::VectorXd r0, r1, r2, r3, r4;

  static ActivationDerivs compute(Activation a, const Eigen::VectorXd& z, int order) {
    ActivationDerivs out;
    const auto n = z.size();
    out.r0.resize(n);
    if (order >= 1) out.r1.resize(n);
    if (order >= 2) out.r2.resize(n);
    if (order >= 3) out.r3.resize(n);
    if (order >= 4) out.r4.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.r0[i] = rho(a, z[i], 0);
      if (order >= 1) out.r1[i] = rho(a, z[i], 1);
      if (order >= 2) out.r2[i] = rho(a, z[i], 2);
      if (order >= 3) out.r3[i] = rho(a, z[i], 3);
      if (order >= 4) out.r4[i] = rho(a, z[i], 4);
    }
    return out;
  }
};

}  // namespace epsim
