#pragma once

#include <stdexcept>
#include <string>

namespace epsim {

// Error categories; the C API maps these 1:1 onto epsim_status codes.
enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  Numerical,
  Unsupported,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when an eigensolve hits a (near-)degenerate level; carries the pair
// of eigenvalues so callers can report the actual splitting.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, double ev_a, double ev_b)
      : Error(ErrorCode::Numerical, what), ev_a_(ev_a), ev_b_(ev_b) {}
  double eigenvalue_a() const noexcept { return ev_a_; }
  double eigenvalue_b() const noexcept { return ev_b_; }

 private:
  double ev_a_, ev_b_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

inline void require_dim(bool cond, const std::string& what) {
  require(cond, ErrorCode::DimensionMismatch, what);
}

}  // namespace epsim
