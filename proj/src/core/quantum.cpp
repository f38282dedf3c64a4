#include "core/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "core/errors.hpp"

namespace epsim {

namespace {

// Z eigenvalue of qubit i in basis state s: |0> -> +1, |1> -> -1.
inline double zsign(long s, int i) { return (s >> i) & 1 ? -1.0 : 1.0; }

void validate_couplings(const std::vector<QubitCoupling>& cs, int n, const char* what) {
  std::set<std::pair<int, int>> seen;
  for (const auto& c : cs) {
    require(c.i >= 0 && c.j >= 0 && c.i < n && c.j < n, ErrorCode::InvalidArgument,
            std::string(what) + " coupling index out of range");
    require(c.i < c.j, ErrorCode::InvalidArgument,
            std::string(what) + " couplings must be stored with i < j and no diagonal");
    require(seen.emplace(c.i, c.j).second, ErrorCode::InvalidArgument,
            std::string(what) + " couplings contain a duplicate pair");
  }
}

struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  double norm = 0.0;  // spectral norm
};

Spectrum full_decomposition(const QuantumSystem& sys) {
  const Eigen::MatrixXcd h = build_hamiltonian(sys);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  require(solver.info() == Eigen::Success, ErrorCode::Numerical,
          "dense eigendecomposition failed");
  Spectrum sp;
  sp.eigenvalues = solver.eigenvalues();
  sp.eigenvectors = solver.eigenvectors();
  sp.norm = std::max(std::abs(sp.eigenvalues[0]),
                     std::abs(sp.eigenvalues[sp.eigenvalues.size() - 1]));
  return sp;
}

EigenSolution solution_at(const QuantumSystem& sys, const Spectrum& sp, int which,
                          double degeneracy_tol) {
  const long dim = sys.dim();
  require(which >= 0 && which < dim, ErrorCode::InvalidArgument,
          "eigenstate index out of range");
  EigenSolution sol;
  sol.index = which;
  sol.eigenvalue = sp.eigenvalues[which];
  sol.statevector = sp.eigenvectors.col(which);
  sol.gap_below = which > 0 ? sp.eigenvalues[which] - sp.eigenvalues[which - 1]
                            : std::numeric_limits<double>::infinity();
  sol.gap_above = which < dim - 1 ? sp.eigenvalues[which + 1] - sp.eigenvalues[which]
                                  : std::numeric_limits<double>::infinity();

  const double scale = std::max(sp.norm, 1e-300);
  if (std::min(sol.gap_below, sol.gap_above) < degeneracy_tol * scale) {
    const double other = sol.gap_below < sol.gap_above ? sp.eigenvalues[which - 1]
                                                       : sp.eigenvalues[which + 1];
    throw DegeneracyError("eigenstate " + std::to_string(which) +
                              " is degenerate: eigenvalues " +
                              std::to_string(sol.eigenvalue) + " and " +
                              std::to_string(other),
                          sol.eigenvalue, other);
  }

  const Eigen::MatrixXcd h = build_hamiltonian(sys);
  sol.residual = (h * sol.statevector - sol.eigenvalue * sol.statevector).norm();
  return sol;
}

int track_branch(const Spectrum& sp, const Eigen::VectorXcd& reference,
                 double overlap_threshold, const char* what) {
  int best = 0;
  double best_overlap = -1.0;
  for (int k = 0; k < sp.eigenvectors.cols(); ++k) {
    const double ov = std::abs(reference.dot(sp.eigenvectors.col(k)));
    if (ov > best_overlap) {
      best_overlap = ov;
      best = k;
    }
  }
  if (best_overlap < overlap_threshold) {
    throw Error(ErrorCode::Numerical,
                std::string("eigenstate tracking failed for the ") + what +
                    " solve: best overlap " + std::to_string(best_overlap) +
                    " below threshold " + std::to_string(overlap_threshold));
  }
  return best;
}

}  // namespace

void QuantumSystem::validate() const {
  require(n_qubits > 0, ErrorCode::InvalidArgument, "system needs at least one qubit");
  require(n_qubits <= kMaxQubits, ErrorCode::InvalidArgument,
          "memory budget exceeded: dense representation is capped at " +
              std::to_string(kMaxQubits) + " qubits");
  require_dim(u.size() == static_cast<Eigen::Index>(input_qubits.size()),
              "u must align with input_qubits");
  require_dim(d.size() == static_cast<Eigen::Index>(output_qubits.size()),
              "d must align with output_qubits");
  std::set<int> in(input_qubits.begin(), input_qubits.end());
  std::set<int> out(output_qubits.begin(), output_qubits.end());
  require(in.size() == input_qubits.size() && out.size() == output_qubits.size(),
          ErrorCode::InvalidArgument, "qubit sets must not contain duplicates");
  for (int q : input_qubits)
    require(q >= 0 && q < n_qubits, ErrorCode::InvalidArgument, "input qubit out of range");
  for (int q : output_qubits) {
    require(q >= 0 && q < n_qubits, ErrorCode::InvalidArgument, "output qubit out of range");
    require(!in.count(q), ErrorCode::InvalidArgument,
            "input and output qubit sets must be disjoint");
  }
  for (Eigen::Index k = 0; k < d.size(); ++k)
    require(d[k] >= -1.0 && d[k] <= 1.0, ErrorCode::InvalidArgument,
            "targets d must lie in [-1, 1]");
  validate_couplings(xx, n_qubits, "XX");
  validate_couplings(zz, n_qubits, "ZZ");
}

Eigen::MatrixXcd build_hamiltonian(const QuantumSystem& sys) {
  sys.validate();
  const long dim = sys.dim();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);

  for (long s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (size_t k = 0; k < sys.input_qubits.size(); ++k)
      diag += sys.u[static_cast<Eigen::Index>(k)] * zsign(s, sys.input_qubits[k]);
    for (const auto& c : sys.zz) diag += c.value * zsign(s, c.i) * zsign(s, c.j);
    // Clamp expands to (beta/2) [(1 + d^2) - 2 d Z_i] per output qubit,
    // exact for any real d since Z^2 = 1.
    for (size_t k = 0; k < sys.output_qubits.size(); ++k) {
      const double dk = sys.d[static_cast<Eigen::Index>(k)];
      diag += 0.5 * sys.beta * (1.0 + dk * dk - 2.0 * dk * zsign(s, sys.output_qubits[k]));
    }
    h(s, s) = diag;
  }
  for (const auto& c : sys.xx) {
    const long mask = (1L << c.i) | (1L << c.j);
    for (long s = 0; s < dim; ++s) h(s ^ mask, s) += c.value;
  }
  return h;
}

Eigen::MatrixXcd pauli_z(int n, int i) {
  const long dim = 1L << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (long s = 0; s < dim; ++s) m(s, s) = zsign(s, i);
  return m;
}

Eigen::MatrixXcd pauli_x(int n, int i) {
  const long dim = 1L << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (long s = 0; s < dim; ++s) m(s ^ (1L << i), s) = 1.0;
  return m;
}

Eigen::MatrixXcd pauli_xx(int n, int i, int j) { return pauli_x(n, i) * pauli_x(n, j); }

Eigen::MatrixXcd pauli_zz(int n, int i, int j) {
  const long dim = 1L << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (long s = 0; s < dim; ++s) m(s, s) = zsign(s, i) * zsign(s, j);
  return m;
}

Eigen::MatrixXcd cost_operator(const QuantumSystem& sys) {
  const long dim = sys.dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (long s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (size_t k = 0; k < sys.output_qubits.size(); ++k) {
      const double dk = sys.d[static_cast<Eigen::Index>(k)];
      diag += 0.5 * (1.0 + dk * dk - 2.0 * dk * zsign(s, sys.output_qubits[k]));
    }
    m(s, s) = diag;
  }
  return m;
}

EigenSolution eigensolve(const QuantumSystem& sys, int which, double degeneracy_tol) {
  return solution_at(sys, full_decomposition(sys), which, degeneracy_tol);
}

double expectation(const EigenSolution& sol, const Eigen::MatrixXcd& observable) {
  require_dim(observable.rows() == sol.statevector.size() &&
                  observable.cols() == sol.statevector.size(),
              "observable dimension must match the statevector");
  const std::complex<double> v =
      sol.statevector.dot(observable * sol.statevector);  // conjugates the left side
  const double tol = 1e-12 * std::max(1.0, std::abs(v.real()));
  require(std::abs(v.imag()) <= tol, ErrorCode::InvalidArgument,
          "expectation has imaginary residue " + std::to_string(v.imag()) +
              "; observable is not Hermitian");
  return v.real();
}

double xx_expectation(const Eigen::VectorXcd& psi, int i, int j) {
  const long dim = psi.size();
  const long mask = (1L << i) | (1L << j);
  double acc = 0.0;
  for (long s = 0; s < dim; ++s) acc += (std::conj(psi[s ^ mask]) * psi[s]).real();
  return acc;
}

double zz_expectation(const Eigen::VectorXcd& psi, int i, int j) {
  const long dim = psi.size();
  double acc = 0.0;
  for (long s = 0; s < dim; ++s) acc += zsign(s, i) * zsign(s, j) * std::norm(psi[s]);
  return acc;
}

double z_expectation(const Eigen::VectorXcd& psi, int i) {
  double acc = 0.0;
  for (long s = 0; s < psi.size(); ++s) acc += zsign(s, i) * std::norm(psi[s]);
  return acc;
}

double cost_expectation(const QuantumSystem& sys, const Eigen::VectorXcd& psi) {
  const long dim = psi.size();
  double acc = 0.0;
  for (long s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (size_t k = 0; k < sys.output_qubits.size(); ++k) {
      const double dk = sys.d[static_cast<Eigen::Index>(k)];
      diag += 0.5 * (1.0 + dk * dk - 2.0 * dk * zsign(s, sys.output_qubits[k]));
    }
    acc += diag * std::norm(psi[s]);
  }
  return acc;
}

nlohmann::json QuantumGradientReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["delta_beta"] = delta_beta;
  j["which"] = which;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& e : entries) {
    params.push_back({{"kind", std::string(1, e.kind)},
                      {"i", e.i},
                      {"j", e.j},
                      {"value", e.value},
                      {"std_error", e.std_error}});
  }
  j["params"] = params;
  return j;
}

QuantumGradientReport qep_gradient(const QuantumSystem& sys, double delta_beta,
                                   int which, double overlap_threshold) {
  require(delta_beta > 0.0, ErrorCode::InvalidArgument, "delta_beta must be positive");
  require(sys.beta == 0.0, ErrorCode::InvalidArgument,
          "gradient estimation expects a beta = 0 system");

  const Spectrum base = full_decomposition(sys);
  const EigenSolution ref = solution_at(sys, base, which, 1e-9);

  auto nudged_state = [&](double beta, const char* what) {
    const QuantumSystem s = sys.with_beta(beta);
    const Spectrum sp = full_decomposition(s);
    const int idx = track_branch(sp, ref.statevector, overlap_threshold, what);
    return solution_at(s, sp, idx, 1e-9).statevector;
  };

  const Eigen::VectorXcd psi_p = nudged_state(+delta_beta, "+beta");
  const Eigen::VectorXcd psi_m = nudged_state(-delta_beta, "-beta");

  QuantumGradientReport rep;
  rep.method = "qep_symmetric";
  rep.delta_beta = delta_beta;
  rep.which = which;
  for (const auto& c : sys.xx) {
    QuantumParamGradient g;
    g.kind = 'a';
    g.i = c.i;
    g.j = c.j;
    g.value = (xx_expectation(psi_p, c.i, c.j) - xx_expectation(psi_m, c.i, c.j)) /
              (2.0 * delta_beta);
    rep.entries.push_back(g);
  }
  for (const auto& c : sys.zz) {
    QuantumParamGradient g;
    g.kind = 'b';
    g.i = c.i;
    g.j = c.j;
    g.value = (zz_expectation(psi_p, c.i, c.j) - zz_expectation(psi_m, c.i, c.j)) /
              (2.0 * delta_beta);
    rep.entries.push_back(g);
  }
  return rep;
}

PerturbationReport perturbation_identity_check(const QuantumSystem& sys, int which,
                                               double fd_step) {
  require(fd_step > 0.0, ErrorCode::InvalidArgument, "fd_step must be positive");
  const Spectrum base = full_decomposition(sys);
  const EigenSolution sol = solution_at(sys, base, which, 1e-9);

  auto tracked_eigenvalue = [&](const QuantumSystem& s) {
    const Spectrum sp = full_decomposition(s);
    return sp.eigenvalues[track_branch(sp, sol.statevector, 0.9, "finite-difference")];
  };
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
  };

  PerturbationReport rep;

  // dE/dbeta vs <C>
  {
    const double ep = tracked_eigenvalue(sys.with_beta(sys.beta + fd_step));
    const double em = tracked_eigenvalue(sys.with_beta(sys.beta - fd_step));
    const double fd = (ep - em) / (2.0 * fd_step);
    rep.cost_identity_error = rel(fd, cost_expectation(sys, sol.statevector));
  }

  // dE/dtheta vs <dH/dtheta> for every coupling
  auto check_param = [&](char kind, size_t idx) {
    QuantumSystem sp = sys, sm = sys;
    auto& cp = kind == 'a' ? sp.xx[idx] : sp.zz[idx];
    auto& cm = kind == 'a' ? sm.xx[idx] : sm.zz[idx];
    cp.value += fd_step;
    cm.value -= fd_step;
    const double fd =
        (tracked_eigenvalue(sp) - tracked_eigenvalue(sm)) / (2.0 * fd_step);
    const auto& c = kind == 'a' ? sys.xx[idx] : sys.zz[idx];
    const double exact = kind == 'a' ? xx_expectation(sol.statevector, c.i, c.j)
                                     : zz_expectation(sol.statevector, c.i, c.j);
    QuantumParamGradient e;
    e.kind = kind;
    e.i = c.i;
    e.j = c.j;
    e.value = fd;
    e.std_error = rel(fd, exact);
    rep.param_errors.push_back(e);
    rep.max_param_error = std::max(rep.max_param_error, e.std_error);
  };
  for (size_t k = 0; k < sys.xx.size(); ++k) check_param('a', k);
  for (size_t k = 0; k < sys.zz.size(); ++k) check_param('b', k);
  return rep;
}

std::vector<ShotEstimate> shot_estimate(const EigenSolution& sol, MeasurementBasis basis,
                                        long n_shots, std::uint64_t seed) {
  require(n_shots > 0, ErrorCode::InvalidArgument, "n_shots must be positive");
  const long dim = sol.statevector.size();
  int n = 0;
  while ((1L << n) < dim) ++n;

  Eigen::VectorXcd psi = sol.statevector;
  if (basis == MeasurementBasis::X) {
    // Rotate into the X eigenbasis with a fast Walsh-Hadamard transform;
    // afterwards bit 0 of an outcome means X eigenvalue +1.
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (long len = 1; len < dim; len <<= 1) {
      for (long s = 0; s < dim; s += len << 1) {
        for (long k = s; k < s + len; ++k) {
          const std::complex<double> a = psi[k], b = psi[k + len];
          psi[k] = (a + b) * inv_sqrt2;
          psi[k + len] = (a - b) * inv_sqrt2;
        }
      }
    }
  }

  std::vector<double> cdf(static_cast<size_t>(dim));
  double acc = 0.0;
  for (long s = 0; s < dim; ++s) {
    acc += std::norm(psi[s]);
    cdf[static_cast<size_t>(s)] = acc;
  }

  const int n_pairs = n * (n - 1) / 2;
  std::vector<double> sum(static_cast<size_t>(n_pairs), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long shot = 0; shot < n_shots; ++shot) {
    const double r = unif(rng) * acc;
    const long s = std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin();
    const long state = std::min(s, dim - 1);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        sum[static_cast<size_t>(k++)] += zsign(state, i) * zsign(state, j);
  }

  std::vector<ShotEstimate> out;
  out.reserve(static_cast<size_t>(n_pairs));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      ShotEstimate e;
      e.i = i;
      e.j = j;
      e.mean = sum[static_cast<size_t>(k)] / static_cast<double>(n_shots);
      // products are +/-1, so the sample variance is (1 - mean^2) n/(n-1)
      const double var = n_shots > 1
                             ? std::max(0.0, 1.0 - e.mean * e.mean) *
                                   static_cast<double>(n_shots) /
                                   static_cast<double>(n_shots - 1)
                             : 0.0;
      e.std_error = std::sqrt(var / static_cast<double>(n_shots));
      out.push_back(e);
      ++k;
    }
  return out;
}

double quantum_free_energy(const QuantumSystem& sys, double temperature) {
  require(temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
  const Spectrum sp = full_decomposition(sys);
  const double e0 = sp.eigenvalues[0];
  double zsum = 0.0;
  for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k)
    zsum += std::exp(-(sp.eigenvalues[k] - e0) / temperature);
  return e0 - temperature * std::log(zsum);
}

QuantumSystem update_quantum_params(const QuantumSystem& sys,
                                    const QuantumGradientReport& grads, double tau) {
  QuantumSystem out = sys;
  for (const auto& g : grads.entries) {
    auto& list = g.kind == 'a' ? out.xx : out.zz;
    bool found = false;
    for (auto& c : list) {
      if (c.i == g.i && c.j == g.j) {
        c.value -= tau * g.value;
        found = true;
        break;
      }
    }
    require(found, ErrorCode::InvalidArgument,
            "gradient entry refers to a coupling absent from the system");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json quantum_to_json(const QuantumSystem& sys) {
  nlohmann::json j;
  j["n_qubits"] = sys.n_qubits;
  j["input_qubits"] = sys.input_qubits;
  j["u"] = std::vector<double>(sys.u.data(), sys.u.data() + sys.u.size());
  j["output_qubits"] = sys.output_qubits;
  j["d"] = std::vector<double>(sys.d.data(), sys.d.data() + sys.d.size());
  auto couplings = [](const std::vector<QubitCoupling>& cs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cs) arr.push_back({c.i, c.j, c.value});
    return arr;
  };
  j["xx_couplings"] = couplings(sys.xx);
  j["zz_couplings"] = couplings(sys.zz);
  j["beta"] = sys.beta;
  return j;
}

QuantumSystem quantum_from_json(const nlohmann::json& j) {
  QuantumSystem sys;
  try {
    sys.n_qubits = j.at("n_qubits").get<int>();
    sys.input_qubits = j.at("input_qubits").get<std::vector<int>>();
    const auto u = j.at("u").get<std::vector<double>>();
    sys.u = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    sys.output_qubits = j.at("output_qubits").get<std::vector<int>>();
    const auto d = j.at("d").get<std::vector<double>>();
    sys.d = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    auto couplings = [](const nlohmann::json& arr) {
      std::vector<QubitCoupling> cs;
      for (const auto& e : arr) {
        QubitCoupling c;
        c.i = e.at(0).get<int>();
        c.j = e.at(1).get<int>();
        c.value = e.at(2).get<double>();
        cs.push_back(c);
      }
      return cs;
    };
    sys.xx = couplings(j.at("xx_couplings"));
    sys.zz = couplings(j.at("zz_couplings"));
    sys.beta = j.value("beta", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("bad quantum system document: ") + e.what());
  }
  sys.validate();
  return sys;
}

std::string quantum_to_json_string(const QuantumSystem& sys) {
  return quantum_to_json(sys).dump(2);
}

QuantumSystem quantum_from_json_string(const std::string& s) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(s);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("quantum JSON parse error: ") + e.what());
  }
  return quantum_from_json(j);
}

}  // namespace epsim
