#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace epsim {

// Hard cap on the dense representation (2^12 x 2^12 complex).
inline constexpr int kMaxQubits = 12;

struct QubitCoupling {
  int i = 0, j = 0;  // canonical i < j
  double value = 0.0;
};

// N-qubit system: longitudinal input fields u_i Z_i, trainable XX and ZZ
// couplings, and a quadratic output clamp of strength beta toward targets d.
struct QuantumSystem {
  int n_qubits = 0;
  std::vector<int> input_qubits;
  Eigen::VectorXd u;  // aligned with input_qubits
  std::vector<int> output_qubits;
  Eigen::VectorXd d;  // aligned with output_qubits, each in [-1, 1]
  std::vector<QubitCoupling> xx;  // a_ij X_i X_j
  std::vector<QubitCoupling> zz;  // b_ij Z_i Z_j
  double beta = 0.0;

  void validate() const;
  long dim() const { return 1L << n_qubits; }

  QuantumSystem with_beta(double b) const {
    QuantumSystem s = *this;
    s.beta = b;
    return s;
  }
};

struct EigenSolution {
  double eigenvalue = 0.0;
  Eigen::VectorXcd statevector;  // unit norm
  int index = 0;                 // 0 = ground
  double gap_below = 0.0;        // +inf for the ground state
  double gap_above = 0.0;        // +inf for the top state
  double residual = 0.0;         // ||H psi - lambda psi||
};

Eigen::MatrixXcd build_hamiltonian(const QuantumSystem& sys);

// Operator builders (dense), mainly for tests and expectation checks.
Eigen::MatrixXcd pauli_z(int n_qubits, int i);
Eigen::MatrixXcd pauli_x(int n_qubits, int i);
Eigen::MatrixXcd pauli_xx(int n_qubits, int i, int j);
Eigen::MatrixXcd pauli_zz(int n_qubits, int i, int j);
// Cost operator 1/2 sum over outputs of (Z_i - d_i)^2 (beta-independent).
Eigen::MatrixXcd cost_operator(const QuantumSystem& sys);

// Full dense decomposition, eigenvalues ascending. The requested state must
// be separated from its neighbours by more than degeneracy_tol * ||H||,
// otherwise a DegeneracyError carrying both eigenvalues is thrown.
EigenSolution eigensolve(const QuantumSystem& sys, int which,
                         double degeneracy_tol = 1e-9);

// <psi|A|psi>; the imaginary residue must stay below tolerance or the
// observable is reported as non-Hermitian.
double expectation(const EigenSolution& sol, const Eigen::MatrixXcd& observable);

// Fast paths used by the gradient estimator.
double xx_expectation(const Eigen::VectorXcd& psi, int i, int j);
double zz_expectation(const Eigen::VectorXcd& psi, int i, int j);
double z_expectation(const Eigen::VectorXcd& psi, int i);
double cost_expectation(const QuantumSystem& sys, const Eigen::VectorXcd& psi);

struct QuantumParamGradient {
  char kind = 'a';  // 'a' = XX coupling, 'b' = ZZ coupling
  int i = 0, j = 0;
  double value = 0.0;
  double std_error = 0.0;
};

struct QuantumGradientReport {
  std::string method;
  double delta_beta = 0.0;
  int which = 0;
  std::vector<QuantumParamGradient> entries;

  nlohmann::json to_json() const;
};

// Symmetric nudge estimator for eigenstate `which`: eigensolves at
// beta = +/- delta_beta, follows the same spectral branch by maximal overlap
// with the beta = 0 state (error below overlap_threshold), and differences
// <dH/dtheta> across the nudge.
QuantumGradientReport qep_gradient(const QuantumSystem& sys, double delta_beta,
                                   int which, double overlap_threshold = 0.9);

struct PerturbationReport {
  double cost_identity_error = 0.0;  // |dE/dbeta - <C>| relative
  double max_param_error = 0.0;      // worst |dE/dtheta - <dH/dtheta>| relative
  std::vector<QuantumParamGradient> param_errors;  // value = fd, std_error = |diff|
};

// Checks dE/dbeta = <C> and dE/dtheta = <dH/dtheta> by central differences.
PerturbationReport perturbation_identity_check(const QuantumSystem& sys, int which,
                                               double fd_step = 1e-5);

enum class MeasurementBasis { X, Z };

struct ShotEstimate {
  int i = 0, j = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

// Simulates n_shots projective measurements of the full commuting family
// {X_i} or {Z_i} and returns the per-pair product estimates. The two
// families do not commute, so one call covers exactly one of them.
std::vector<ShotEstimate> shot_estimate(const EigenSolution& sol, MeasurementBasis basis,
                                        long n_shots, std::uint64_t seed);

// F = -T log Tr exp(-H/T), computed from the full spectrum with a max-shift.
double quantum_free_energy(const QuantumSystem& sys, double temperature);

QuantumSystem update_quantum_params(const QuantumSystem& sys,
                                    const QuantumGradientReport& grads, double tau);

nlohmann::json quantum_to_json(const QuantumSystem& sys);
QuantumSystem quantum_from_json(const nlohmann::json& j);
std::string quantum_to_json_string(const QuantumSystem& sys);
QuantumSystem quantum_from_json_string(const std::string& s);

}  // namespace epsim
