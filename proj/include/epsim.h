/*
 * epsim — equilibrium-propagation simulation library, C interface.
 *
 * The core is C++; this header is the stable ABI boundary. All entry points
 * return an epsim_status; on failure call epsim_last_error() (thread-local
 * message, valid until the next failing call on the same thread). Strings
 * returned through char** are heap-allocated; release them with
 * epsim_string_free().
 */

#ifndef EPSIM_H
#define EPSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(EPSIM_BUILD_DLL)
#    define EPSIM_API __declspec(dllexport)
#  else
#    define EPSIM_API __declspec(dllimport)
#  endif
#else
#  define EPSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum epsim_status {
  EPSIM_OK = 0,
  EPSIM_ERR_INVALID_ARGUMENT = 1,
  EPSIM_ERR_DIMENSION_MISMATCH = 2,
  EPSIM_ERR_NUMERICAL = 3, /* divergence, degeneracy, non-convergence */
  EPSIM_ERR_UNSUPPORTED = 4,
  EPSIM_ERR_IO = 5
} epsim_status;

EPSIM_API const char* epsim_version(void);
EPSIM_API const char* epsim_last_error(void);
EPSIM_API void epsim_string_free(char* s);

/* Cooperative cancellation for long runs (training checks it between
 * epochs and still writes its checkpoint). */
EPSIM_API void epsim_request_stop(void);
EPSIM_API void epsim_clear_stop(void);

/* ------------------------------------------------------------------ */
/* Classical network                                                    */
/* ------------------------------------------------------------------ */

typedef struct epsim_network epsim_network; /* opaque */

/* Clamp data for one example; u has n_u entries (inputs), d has n_d
 * entries (outputs), in the order of the network's node sets. */
typedef struct epsim_clamp {
  const double* u;
  size_t n_u;
  const double* d;
  size_t n_d;
  double alpha;
  double beta;
} epsim_clamp;

EPSIM_API epsim_status epsim_network_parse(const char* json, epsim_network** out);
EPSIM_API epsim_status epsim_network_load(const char* path, epsim_network** out);
EPSIM_API epsim_status epsim_network_to_json(const epsim_network* net, char** out_json);
EPSIM_API epsim_status epsim_network_save(const epsim_network* net, const char* path);
EPSIM_API void epsim_network_free(epsim_network* net);
EPSIM_API epsim_status epsim_network_n_nodes(const epsim_network* net, size_t* out);

EPSIM_API epsim_status epsim_energy(const epsim_network* net, const double* z, size_t n,
                                    const epsim_clamp* clamp, double* out);
EPSIM_API epsim_status epsim_grad_z(const epsim_network* net, const double* z, size_t n,
                                    const epsim_clamp* clamp, double* out /* n */);
EPSIM_API epsim_status epsim_cost(const epsim_network* net, const double* z, size_t n,
                                  const double* d, size_t n_d, double* out);

/* Explicit-Euler relaxation to a fixed point. z_out must hold n doubles;
 * converged is 0/1. Non-convergence is reported through *converged, not as
 * an error; NaN divergence is EPSIM_ERR_NUMERICAL. */
EPSIM_API epsim_status epsim_relax(const epsim_network* net, const double* z0, size_t n,
                                   const epsim_clamp* clamp, double step_size, double tol,
                                   long max_iters, double* z_out, double* residual_out,
                                   long* iters_out, int* converged_out);

/* Nudge gradient estimate at clamp->beta == 0; report returned as JSON
 * (method, per-parameter values and standard errors). symmetric != 0
 * selects the two-sided scheme. */
EPSIM_API epsim_status epsim_ep_gradient(const epsim_network* net, const epsim_clamp* clamp,
                                         double delta_beta, double step_size, double tol,
                                         long max_iters, int symmetric, char** out_json);

/* Thermal gradient estimate; method is "clamped", "covariance" or
 * "reweighted"; sampler_json holds {dt, temperature, burn_in, n_samples,
 * thin, seed} plus "delta_beta" or "beta_probe" where applicable. */
EPSIM_API epsim_status epsim_thermal_gradient(const epsim_network* net,
                                              const epsim_clamp* clamp, const char* method,
                                              const char* sampler_json, char** out_json);

/* ------------------------------------------------------------------ */
/* Quantum system                                                      */
/* ------------------------------------------------------------------ */

typedef struct epsim_quantum epsim_quantum; /* opaque */

EPSIM_API epsim_status epsim_quantum_parse(const char* json, epsim_quantum** out);
EPSIM_API epsim_status epsim_quantum_load(const char* path, epsim_quantum** out);
EPSIM_API epsim_status epsim_quantum_to_json(const epsim_quantum* sys, char** out_json);
EPSIM_API void epsim_quantum_free(epsim_quantum* sys);

/* Eigensolve report for state `which` (JSON: eigenvalue, gaps, residual,
 * cost expectation, output polarizations). Degenerate levels fail with
 * EPSIM_ERR_NUMERICAL. */
EPSIM_API epsim_status epsim_quantum_solve(const epsim_quantum* sys, int which,
                                           char** out_json);

EPSIM_API epsim_status epsim_qep_gradient(const epsim_quantum* sys, double delta_beta,
                                          int which, char** out_json);

/* ------------------------------------------------------------------ */
/* Run drivers (config documents; see README for the schema)           */
/* ------------------------------------------------------------------ */

EPSIM_API epsim_status epsim_run_train(const char* config_json, char** out_summary_json);
EPSIM_API epsim_status epsim_run_eval(const char* config_json, char** out_json);
EPSIM_API epsim_status epsim_run_gradcheck(const char* config_json, char** out_json);
EPSIM_API epsim_status epsim_run_thermal_sample(const char* config_json,
                                                const char* out_path, char** out_json);
EPSIM_API epsim_status epsim_run_quantum_solve(const char* config_json, char** out_json);
EPSIM_API epsim_status epsim_run_expansion_check(const char* config_json, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EPSIM_H */
