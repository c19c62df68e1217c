#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "critpar/config.hpp"
#include "critpar/theory.hpp"

namespace critpar {

struct CommandOptions {
  std::string subcommand;  ///< run, tune, speedup, rt-verify, estimate, verify-theory
  std::string config_path;  ///< empty: all defaults
  std::string out_path;     ///< empty: CSV to the output stream
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  void validate() const;
};

struct CheckResult {
  std::string name;
  bool passed;
  double slack;  ///< distance to the violation boundary; negative when violated
  std::string detail;
};

struct TheoryReport {
  std::vector<CheckResult> checks;

  bool ok() const;
};

/// Random finite-support distribution with Pr[X != 0] <= delta.
DiscreteDistribution random_sparse_distribution(double delta, RandomStream& rng);

/// g' = grad f + scale * (g - grad f). The base support is reported unchanged
/// although off-support coordinates become nonzero, so this is only fit for
/// variance checks (it exists to inject a fault into them).
Oracle make_scaled_deviation_oracle(const Oracle& base, double scale);

/// Sparsity inequality suite, bound dominance sweep, block-oracle variance check, b_hat
/// sandwich and range checks, and the drift-bound check.
TheoryReport verify_theory(const ExperimentConfig& config);
void print_report(const TheoryReport& report, std::ostream& out);

/// Runs one subcommand. CSV goes to options.out_path or `out`; progress and
/// summaries go to `log`. Returns the process exit status.
int run_command(const CommandOptions& options, std::ostream& out, std::ostream& log);

}  // namespace critpar
