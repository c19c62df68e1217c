#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "critpar/harness.hpp"
#include "critpar/oracles.hpp"

namespace critpar {

/// b_hat(x) = 1 + E|g - grad f|^2 / (|grad f|^2 + eps_hat).
struct BhatRecord {
  std::uint64_t step = 0;
  double grad_norm2 = 0.0;
  double noise_mean2 = 0.0;
  double bhat = 1.0;
  bool defined = true;  ///< false only when eps_hat = 0 at a stationary point
};

/// Mean of the last ten checkpoint gradient norms.
double estimate_epsilon_hat(std::span<const double> grad_norm2_tail);

BhatRecord estimate_bhat(const Oracle& oracle, std::span<const double> x, double eps_hat,
                         std::size_t samples, RandomStream& rng, std::uint64_t step = 0);

/// max b_hat over the records (undefined records are skipped).
double running_bhat_crit(std::span<const BhatRecord> records);

struct SandwichEntry {
  std::uint64_t step;
  double bhat;
  double middle;  ///< 1 + sigma_*^2 / max(|grad f|^2, eps_hat) + M
  bool left_ok;   ///< bhat <= (1 + tolerance) * middle
  bool right_ok;  ///< middle <= 4 * sup bhat
};

/// The right-hand side uses the supremum over the supplied records in place of
/// the supremum over all of R^d; it is an approximation, not the true sup.
struct SandwichReport {
  std::vector<SandwichEntry> entries;
  double sup_bhat = 1.0;
  double tolerance = 0.05;
  std::size_t left_violations = 0;
  std::size_t right_violations = 0;

  bool ok() const { return left_violations == 0 && right_violations == 0; }
};

SandwichReport bhat_sandwich_check(std::span<const BhatRecord> records, double sigma_star2,
                                   double M, double eps_hat, double tolerance = 0.05);

struct BhatOptions {
  std::size_t samples = 10000;    ///< oracle draws per checkpoint
  std::size_t checkpoints = 100;  ///< cadence = max(1, T / checkpoints) model updates
  std::size_t tail = 10;          ///< checkpoints averaged into eps_hat
};

struct BhatTrajectory {
  std::vector<BhatRecord> records;
  std::vector<double> running_crit;  ///< running max after each record
  double eps_hat = 0.0;
  double bhat_crit = 1.0;
  std::uint64_t total_updates = 0;
  bool converged = false;
};

/// Runs the configured simulation once to learn its length T, replays it with
/// checkpoints every T/checkpoints updates, estimates eps_hat from the last
/// checkpoints and evaluates b_hat at every checkpoint.
BhatTrajectory track_bhat(const RunConfig& config, const BhatOptions& options = {});

}  // namespace critpar
