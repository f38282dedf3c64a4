#pragma once

#include <atomic>
#include <nlohmann/json.hpp>
#include <string>

#include "core/run_config.hpp"

namespace epsim {

struct MetricsRecord {
  int epoch = 0;
  double mean_train_cost = 0.0;
  double accuracy = 0.0;
  double grad_norm = 0.0;
  long wall_ms = 0;  // diagnostic only; kept out of the persisted metrics
  nlohmann::json estimator_meta;
};

// Epoch loop over the configured regime. Writes dataset.csv, metrics.jsonl
// and checkpoint.json into cfg.out_dir; honors `stop` between epochs (the
// checkpoint is written either way, so interrupted runs resume exactly).
// Returns a summary document.
nlohmann::json run_train(const RunConfig& cfg, const std::atomic<bool>* stop = nullptr);

// Free-phase cost/accuracy of a trained (or fresh) model on the dataset.
nlohmann::json run_eval(const RunConfig& cfg);

// Regime estimator against the brute-force finite-difference (or quadrature)
// oracle of the beta = 0 cost; enforces the small-system limits.
nlohmann::json run_gradcheck(const RunConfig& cfg);

// Runs one Langevin chain and writes a line-delimited JSON sample file
// (header record first); returns the header document.
nlohmann::json run_thermal_sample(const RunConfig& cfg, const std::string& out_path);

// Eigensolve report: eigenvalue, gaps, residual, cost expectation, output
// polarizations, optional measurement-shot estimates.
nlohmann::json run_quantum_solve(const RunConfig& cfg);

// Low-temperature expansion diagnostics: per-formula oracle errors,
// T-scaling slopes and internal consistency residuals.
nlohmann::json run_expansion_check(const RunConfig& cfg);

}  // namespace epsim
