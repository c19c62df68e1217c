#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "critpar/oracles.hpp"
#include "critpar/problems.hpp"
#include "critpar/schedulers.hpp"

namespace critpar {

enum class OracleKind { Gaussian, BlockSparse };
enum class StopKind { IterateNorm, GradNorm2 };

std::string_view to_string(OracleKind kind);
OracleKind parse_oracle_kind(std::string_view name);
std::string_view to_string(StopKind kind);
StopKind parse_stop_kind(std::string_view name);

/// IterateNorm: (1/d)|x|_2 <= threshold.  GradNorm2: |grad f(x)|^2 <= threshold.
struct StopRule {
  StopKind kind = StopKind::IterateNorm;
  double threshold = 0.1;

  bool satisfied(const Problem& problem, std::span<const double> x) const;
};

/// Recording cadences in model updates; 0 disables.
struct RecordFlags {
  std::uint64_t stats_every = 0;     ///< |grad f(x)|^2 and |x - ghost|^2
  std::uint64_t snapshot_every = 0;  ///< full iterate copies
};

struct RunConfig {
  QuadraticBandSpec problem;
  std::size_t blocks = 1;  ///< > 1 builds the block-separable instance
  OracleKind oracle = OracleKind::Gaussian;
  NoiseSpec noise;
  ScheduleSpec schedule;
  StopRule stop;
  double x0_fill = 10.0;
  std::optional<Vector> x0;  ///< overrides x0_fill when set
  std::uint64_t max_updates = 1'000'000;
  std::uint64_t seed = 0;
  RecordFlags record;
  /// Run exactly max_updates model updates regardless of the stopping rule.
  bool fixed_horizon = false;
  /// Abort once grad_evals exceeds this many without converging; 0 disables.
  std::uint64_t grad_eval_budget = 0;

  void validate() const;
  Problem make_problem() const;
  Oracle make_oracle(const Problem& problem) const;
  Vector initial_point(std::size_t dim) const;
};

/// Text identifying the experiment row a config belongs to (algorithm, noise,
/// parallelism, problem); used to derive per-row seeds.
std::string row_key(const RunConfig& config);

struct RunSample {
  std::uint64_t model_updates;
  std::uint64_t step;
  double grad_norm2;
  double deviation;
};

struct Snapshot {
  std::uint64_t model_updates;
  Vector x;
};

struct RunResult {
  bool converged = false;
  bool diverged = false;
  bool budget_exhausted = false;
  std::uint64_t grad_evals = 0;  ///< T(b, eps) in gradient evaluations
  std::uint64_t model_updates = 0;
  std::uint64_t steps = 0;
  Vector final_x;
  std::vector<RunSample> samples;
  std::vector<Snapshot> snapshots;
};

RunResult run(const RunConfig& config);
RunResult run(const RunConfig& config, const Oracle& oracle);

enum class PointStatus { Converged, Diverged, NotConverged, Pruned };
std::string_view to_string(PointStatus status);

struct GridPoint {
  double gamma;          ///< per-gradient stepsize
  double algorithm_lr;   ///< parallelism * gamma
  double mean_grad_evals;
  double sd_grad_evals;
  double mean_model_updates;
  double converged_fraction;
  std::size_t seeds_run;
  PointStatus status;
};

struct TuneOptions {
  std::size_t seeds = 3;
  std::uint64_t master_seed = 0;
  std::size_t grid_size = 20;
  std::optional<double> grid_base;  ///< default 1.1 / (1 + M)
  /// Stop a point once its seeds have used more evaluations than the current
  /// best point's total; such a point cannot win.
  bool prune = true;
};

struct TuningResult {
  std::vector<GridPoint> grid;
  std::optional<std::size_t> best_index;
  double best_gamma = 0.0;
  double best_T = 0.0;
  bool endpoint_warning = false;

  bool ok() const { return best_index.has_value(); }
  const GridPoint& best() const { return grid.at(*best_index); }
};

/// Grid gamma_k = base * 2^-k, k = 1..grid_size, over the per-gradient
/// stepsize, in decreasing order.
std::vector<double> stepsize_grid(double base, std::size_t size);

/// Evaluates every grid point (largest first) and picks the one with the
/// smallest mean T among points where every seed converged. A point that
/// cannot converge at all yields a result with ok() == false.
TuningResult tune_stepsize(const RunConfig& config_template, const TuneOptions& options);

struct SpeedupRow {
  std::string algorithm;
  double M;
  double sigma2;
  std::size_t parallelism;
  double gamma;         ///< tuned per-gradient stepsize
  double algorithm_lr;  ///< parallelism * gamma (gamma_mb, gamma_d, gamma_HW)
  std::size_t seed_count;
  double grad_evals_mean;
  double grad_evals_sd;
  double model_updates_mean;
  bool converged;
  double normalized_parallel_time;  ///< (T / parallelism) / T(1); NaN without a reference
  TuningResult tuning;
};

struct SpeedupTable {
  std::vector<SpeedupRow> rows;

  const SpeedupRow* find(std::size_t parallelism) const;
};

struct SweepOptions {
  TuneOptions tune;
  std::size_t threads = 0;  ///< 0 picks hardware concurrency
};

/// Tunes each parallelism level independently; rows are assembled in input
/// order. `parallelism_list` must contain 1.
SpeedupTable speedup_sweep(const RunConfig& config_template,
                           const std::vector<std::size_t>& parallelism_list,
                           const SweepOptions& options);

struct RtPoint {
  std::uint64_t t;
  double mean_deviation;   ///< seed-averaged |x_t - ghost_t|^2
  double mean_grad_norm2;  ///< seed-averaged |grad f(x_t)|^2
  double theta_smj;
  double theta_sk;
  double general_bound;
};

/// Exact-delay runs of exactly config.max_updates steps over `seeds` seeds,
/// pairing the measured drift with the bounds evaluated on the seed-averaged
/// gradient-norm window. Requires gamma <= gamma_crit(L, M, tau).
std::vector<RtPoint> rt_trajectory(const RunConfig& config, std::size_t seeds);

}  // namespace critpar
