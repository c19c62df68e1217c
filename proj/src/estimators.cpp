#include "critpar/estimators.hpp"

#include <algorithm>
#include <numeric>

namespace critpar {

double estimate_epsilon_hat(std::span<const double> grad_norm2_tail) {
  if (grad_norm2_tail.size() != 10) {
    throw InputError("eps_hat is averaged over exactly 10 checkpoints");
  }
  return std::accumulate(grad_norm2_tail.begin(), grad_norm2_tail.end(), 0.0) / 10.0;
}

BhatRecord estimate_bhat(const Oracle& oracle, std::span<const double> x, double eps_hat,
                         std::size_t samples, RandomStream& rng, std::uint64_t step) {
  if (samples < 2) throw InputError("b_hat needs at least 2 oracle samples");
  if (eps_hat < 0.0) throw InputError("eps_hat must be nonnegative");
  BhatRecord r;
  r.step = step;
  r.grad_norm2 = squared_norm(oracle.problem().gradient(x));
  r.noise_mean2 = mean_noise_norm2(oracle, x, samples, rng);
  const double denom = r.grad_norm2 + eps_hat;
  if (denom == 0.0) {
    r.defined = false;
    r.bhat = 1.0;
    return r;
  }
  r.bhat = 1.0 + r.noise_mean2 / denom;
  return r;
}

double running_bhat_crit(std::span<const BhatRecord> records) {
  if (records.empty()) throw InputError("b_hat_crit needs at least one record");
  double best = 1.0;
  for (const BhatRecord& r : records) {
    if (r.defined) best = std::max(best, r.bhat);
  }
  return best;
}

SandwichReport bhat_sandwich_check(std::span<const BhatRecord> records, double sigma_star2,
                                   double M, double eps_hat, double tolerance) {
  SandwichReport report;
  report.tolerance = tolerance;
  if (records.empty()) return report;
  report.sup_bhat = running_bhat_crit(records);
  for (const BhatRecord& r : records) {
    if (!r.defined) continue;
    const double scale = std::max(r.grad_norm2, eps_hat);
    // sigma_*^2 / 0 only arises at an exact stationary point with eps_hat = 0.
    const double middle = 1.0 + (sigma_star2 == 0.0 ? 0.0 : sigma_star2 / scale) + M;
    SandwichEntry e{r.step, r.bhat, middle, r.bhat <= (1.0 + tolerance) * middle,
                    middle <= 4.0 * report.sup_bhat};
    if (!e.left_ok) ++report.left_violations;
    if (!e.right_ok) ++report.right_violations;
    report.entries.push_back(e);
  }
  return report;
}

BhatTrajectory track_bhat(const RunConfig& config, const BhatOptions& options) {
  if (options.checkpoints < 1) throw InputError("need at least one checkpoint");
  RunConfig probe = config;
  probe.record = {};
  const Problem problem = config.make_problem();
  const Oracle oracle = config.make_oracle(problem);
  const RunResult first = run(probe, oracle);
  if (first.diverged) throw InputError("b_hat tracking run diverged");

  const std::uint64_t total = first.model_updates;
  RunConfig replay = probe;
  replay.record.snapshot_every = std::max<std::uint64_t>(1, total / options.checkpoints);
  RunResult second = run(replay, oracle);
  if (second.snapshots.empty() || second.snapshots.back().model_updates != total) {
    second.snapshots.push_back({total, second.final_x});
  }
  if (second.snapshots.size() < options.tail) {
    throw InputError("run too short for the requested eps_hat tail");
  }

  std::vector<double> grad2;
  grad2.reserve(second.snapshots.size());
  for (const Snapshot& s : second.snapshots) grad2.push_back(squared_norm(problem.gradient(s.x)));

  BhatTrajectory out;
  out.total_updates = total;
  out.converged = first.converged;
  const std::span<const double> tail(grad2.data() + grad2.size() - options.tail, options.tail);
  out.eps_hat = options.tail == 10 ? estimate_epsilon_hat(tail)
                                   : std::accumulate(tail.begin(), tail.end(), 0.0) /
                                         static_cast<double>(options.tail);

  // Measurement draws come from their own stream so they never perturb the run.
  RandomStream measure(config.seed, 7);
  double crit = 1.0;
  for (const Snapshot& s : second.snapshots) {
    out.records.push_back(estimate_bhat(oracle, s.x, out.eps_hat, options.samples, measure, s.model_updates));
    if (out.records.back().defined) crit = std::max(crit, out.records.back().bhat);
    out.running_crit.push_back(crit);
  }
  out.bhat_crit = crit;
  return out;
}

}  // namespace critpar
