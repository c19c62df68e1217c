#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "critpar/estimators.hpp"
#include "critpar/harness.hpp"

namespace critpar {

/// Header plus homogeneous rows of preformatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// %.17g, which round-trips every double.
std::string format_real(double v);

void write_csv(const CsvTable& table, std::ostream& out);
/// Throws std::runtime_error when the file cannot be written.
void emit_csv(const CsvTable& table, const std::string& out_path);

/// algorithm, M, sigma2, parallelism, gamma, seed_count, grad_evals_mean,
/// grad_evals_sd, model_updates_mean, converged, normalized_parallel_time
CsvTable speedup_csv(const SpeedupTable& table);
CsvTable tuning_csv(const RunConfig& config, const TuningResult& result);
CsvTable run_csv(const RunConfig& config, const RunResult& result);
CsvTable rt_csv(const std::vector<RtPoint>& points);
CsvTable bhat_csv(const BhatTrajectory& trajectory, const SandwichReport& sandwich);

}  // namespace critpar
