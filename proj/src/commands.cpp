#include "critpar/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "critpar/csv.hpp"
#include "critpar/rng.hpp"

namespace critpar {

void CommandOptions::validate() const {
  static const std::vector<std::string> known{"run",       "tune",     "speedup",
                                              "rt-verify", "estimate", "verify-theory"};
  if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
    throw InputError("unknown subcommand '" + subcommand + "'");
  }
}

bool TheoryReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

DiscreteDistribution random_sparse_distribution(double delta, RandomStream& rng) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InputError("delta must lie in (0, 1]");
  const std::size_t atoms = 1 + rng.uniform_index(5);
  const double mass = delta * (1.0 - rng.uniform01());  // in (0, delta]
  std::vector<double> w(atoms);
  double total = 0.0;
  for (double& v : w) total += (v = 0.1 + rng.uniform01());
  DiscreteDistribution d;
  double used = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    const double p = mass * w[i] / total;
    used += p;
    double value = 0.0;
    while (value == 0.0) value = 3.0 * rng.normal();
    d.atoms.emplace_back(value, p);
  }
  d.atoms.emplace_back(0.0, std::max(0.0, 1.0 - used));
  return d;
}

Oracle make_scaled_deviation_oracle(const Oracle& base, double scale) {
  auto sampler = [base, scale](std::span<const double> x, RandomStream& rng, GradientSample& out) {
    base.sample(x, rng, out);
    const Vector grad = base.problem().gradient(x);
    for (std::uint32_t j : out.support) out.values[j] = grad[j] + scale * (out.values[j] - grad[j]);
    // Coordinates off the support carry g = 0, so their deviation is -grad.
    std::size_t k = 0;
    for (std::size_t j = 0; j < grad.size(); ++j) {
      if (k < out.support.size() && out.support[k] == j) {
        ++k;
        continue;
      }
      out.values[j] = (1.0 - scale) * grad[j];
    }
  };
  return Oracle(base.problem(), sampler, base.name() + "-scaled");
}

namespace {

CheckResult lemma_check(const ExperimentConfig& config) {
  RandomStream rng(derive_seed(config.tune.master_seed, "verify/lemma", 0));
  std::size_t violations = 0;
  double slack = std::numeric_limits<double>::infinity();
  auto tally = [&](const LemmaReport& r) {
    if (!r.precondition_ok || !r.holds) ++violations;
    slack = std::min(slack, r.slack());
  };
  for (std::size_t i = 0; i < config.verify.lemma_trials; ++i) {
    const double delta = 1.0 - rng.uniform01();
    tally(verify_lemma_trick(random_sparse_distribution(delta, rng), delta));
  }
  // Equality witness: one nonzero atom carrying exactly delta of the mass.
  const LemmaReport witness = verify_lemma_trick({{{3.0, 0.25}, {0.0, 0.75}}}, 0.25);
  tally(witness);
  std::ostringstream d;
  d << config.verify.lemma_trials + 1 << " distributions, " << violations
    << " violations, witness gap " << witness.slack();
  return {"lemma-sparsity", violations == 0 && witness.slack() == 0.0, slack, d.str()};
}

CheckResult theta_check(const ExperimentConfig& config) {
  RandomStream rng(derive_seed(config.tune.master_seed, "verify/theta", 0));
  const double L = config.base.make_problem().L();
  std::size_t evaluations = 0;
  std::size_t violations = 0;
  double slack = std::numeric_limits<double>::infinity();
  for (double tau : {1.0, 2.0, 4.0, 16.0, 64.0}) {
    for (double M : {0.0, 10.0, 100.0}) {
      for (double sigma2 : {0.0, 1.0}) {
        for (double frac : {1.0, 0.5}) {
          const double gamma = frac * critical_stepsize(L, M, tau);
          for (std::size_t len = 0; len <= static_cast<std::size_t>(tau); ++len) {
            std::vector<double> h(len);
            for (double& v : h) v = 100.0 * rng.uniform01();
            const RtBounds smj = rt_bound_smj(h, L, M, tau, gamma, sigma2);
            const double sk = rt_bound_sk(h, L, tau, gamma, sigma2);
            ++evaluations;
            if (!smj.smj || *smj.smj > sk) ++violations;
            if (smj.smj) slack = std::min(slack, sk - *smj.smj);
          }
        }
      }
    }
  }
  std::ostringstream d;
  d << evaluations << " evaluations, " << violations << " with theta_smj > theta_sk";
  return {"theta-dominance", violations == 0, slack, d.str()};
}

CheckResult corollary_check(const ExperimentConfig& config) {
  const bool faulty = config.verify.fault == "scaled-block";
  std::size_t violations = 0;
  double slack = std::numeric_limits<double>::infinity();
  std::ostringstream d;
  d << std::setprecision(4);
  for (std::size_t B : config.verify.corollary_blocks) {
    const Problem problem = Problem::block_separable({config.base.problem, B});
    Oracle oracle = make_block_oracle(problem);
    if (faulty) oracle = make_scaled_deviation_oracle(oracle, 1.0 / std::sqrt(2.0));
    RandomStream rng(derive_seed(config.tune.master_seed, "verify/corollary", B));
    Vector x(problem.dim());
    for (double& v : x) v = config.base.x0_fill * (1.0 + rng.normal());
    const double grad2 = squared_norm(problem.gradient(x));
    const double noise = mean_noise_norm2(oracle, x, config.verify.corollary_samples, rng);
    const double expected = static_cast<double>(B) - 1.0;
    double s = 0.0;
    if (expected == 0.0) {
      s = noise == 0.0 ? 0.05 : -noise / grad2;
    } else {
      s = 0.05 - std::abs(noise / grad2 / expected - 1.0);
    }
    if (s < 0.0) ++violations;
    slack = std::min(slack, s);
    d << "B=" << B << " ratio " << noise / grad2 << " (expect " << expected << ") ";
  }
  return {"block-variance", violations == 0, slack, d.str()};
}

RunConfig sandwich_config(const ExperimentConfig& config) {
  RunConfig rc = config.base;
  rc.oracle = OracleKind::Gaussian;
  rc.blocks = 1;
  rc.noise = {config.verify.sandwich_M, 0.0, std::nullopt};
  rc.schedule = {ScheduleKind::MiniBatch, 1, 0.0};
  rc.schedule.effective_lr = critical_stepsize(rc.make_problem().L(), rc.noise.M, 1.0);
  rc.record = {};
  rc.seed = derive_seed(config.tune.master_seed, "verify/sandwich", 0);
  return rc;
}

void bhat_checks(const ExperimentConfig& config, std::vector<CheckResult>& out) {
  const RunConfig rc = sandwich_config(config);
  const BhatTrajectory traj = track_bhat(rc, config.bhat);
  const double M = rc.noise.M;
  const SandwichReport sw = bhat_sandwich_check(traj.records, 0.0, M, traj.eps_hat);

  double slack = std::numeric_limits<double>::infinity();
  for (const SandwichEntry& e : sw.entries) {
    slack = std::min(slack, (1.0 + sw.tolerance) * e.middle - e.bhat);
  }
  std::ostringstream d;
  d << sw.entries.size() << " checkpoints, " << sw.left_violations << " left and "
    << sw.right_violations << " right violations";
  out.push_back({"bhat-sandwich", sw.ok(), slack, d.str()});

  const double lo = 1.0 + M / 2.0;
  const double hi = 1.05 * (1.0 + M);
  std::ostringstream r;
  r << "bhat_crit " << traj.bhat_crit << " in [" << lo << ", " << hi << "]";
  out.push_back({"bhat-crit-range", traj.bhat_crit >= lo && traj.bhat_crit <= hi,
                 std::min(traj.bhat_crit - lo, hi - traj.bhat_crit), r.str()});
}

CheckResult drift_check(const ExperimentConfig& config) {
  std::size_t violations = 0;
  std::size_t evaluations = 0;
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t tau : {4, 16}) {
    for (double M : {0.0, 10.0}) {
      for (double sigma2 : {0.0, 1.0}) {
        RunConfig rc = config.base;
        rc.oracle = OracleKind::Gaussian;
        rc.blocks = 1;
        rc.noise = {M, sigma2, std::nullopt};
        rc.schedule = {ScheduleKind::ExactDelay, tau, 0.0};
        rc.schedule.effective_lr =
            critical_stepsize(rc.make_problem().L(), M, static_cast<double>(tau)) / 2.0;
        rc.max_updates = config.rt_horizon;
        rc.record = {};
        rc.seed = derive_seed(config.tune.master_seed, "verify/drift", 0);
        for (const RtPoint& p : rt_trajectory(rc, config.rt_seeds)) {
          ++evaluations;
          if (p.mean_deviation > 1.1 * p.theta_smj || p.theta_smj > p.theta_sk) ++violations;
          slack = std::min(slack, 1.1 * p.theta_smj - p.mean_deviation);
        }
      }
    }
  }
  std::ostringstream d;
  d << evaluations << " recorded steps over 8 settings, " << violations << " violations";
  return {"drift-bound", violations == 0, slack, d.str()};
}

/// Per-gradient stepsize for single runs: explicit, else the critical one.
double default_gamma(const ExperimentConfig& config, const RunConfig& rc, double fraction) {
  if (config.gamma) return *config.gamma;
  return fraction * critical_stepsize(rc.make_problem().L(), declared_noise(rc).first,
                                      static_cast<double>(rc.schedule.parallelism));
}

void deliver(const CsvTable& table, const CommandOptions& options, std::ostream& out) {
  if (options.out_path.empty()) {
    write_csv(table, out);
  } else {
    emit_csv(table, options.out_path);
  }
}

}  // namespace

TheoryReport verify_theory(const ExperimentConfig& config) {
  TheoryReport report;
  report.checks.push_back(lemma_check(config));
  report.checks.push_back(theta_check(config));
  report.checks.push_back(corollary_check(config));
  bhat_checks(config, report.checks);
  report.checks.push_back(drift_check(config));
  return report;
}

void print_report(const TheoryReport& report, std::ostream& out) {
  for (const CheckResult& c : report.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(16) << c.name
        << " slack=" << format_real(c.slack) << "  " << c.detail << '\n';
  }
  out << (report.ok() ? "all checks passed" : "violations found") << '\n';
}

int run_command(const CommandOptions& options, std::ostream& out, std::ostream& log) {
  options.validate();
  ExperimentConfig config = load_config(options.config_path, options.overrides);
  if (options.seed) config.tune.master_seed = *options.seed;
  RunConfig rc = config.base;
  const std::string& cmd = options.subcommand;

  if (cmd == "run") {
    rc.schedule.effective_lr = default_gamma(config, rc, 1.0);
    rc.seed = derive_seed(config.tune.master_seed, row_key(rc), 0);
    const RunResult r = run(rc);
    deliver(run_csv(rc, r), options, out);
    log << (r.converged ? "converged" : r.diverged ? "diverged" : "not converged") << " after "
        << r.grad_evals << " gradient evaluations\n";
    return 0;
  }
  if (cmd == "tune") {
    const TuningResult t = tune_stepsize(rc, config.tune);
    deliver(tuning_csv(rc, t), options, out);
    if (!t.ok()) {
      log << "no grid point converged on every seed\n";
      return 1;
    }
    log << "best gamma " << format_real(t.best_gamma) << " with mean T " << format_real(t.best_T)
        << (t.endpoint_warning ? " (at a grid endpoint)" : "") << '\n';
    return 0;
  }
  if (cmd == "speedup") {
    const SpeedupTable table = speedup_sweep(rc, config.parallelism_list, {config.tune, config.threads});
    deliver(speedup_csv(table), options, out);
    for (const SpeedupRow& r : table.rows) {
      if (r.tuning.endpoint_warning) log << "parallelism " << r.parallelism << ": best gamma at a grid endpoint\n";
    }
    return 0;
  }
  if (cmd == "rt-verify") {
    rc.schedule.kind = ScheduleKind::ExactDelay;
    rc.schedule.effective_lr = default_gamma(config, rc, 0.5);
    rc.max_updates = config.rt_horizon;
    rc.seed = config.tune.master_seed;
    const std::vector<RtPoint> points = rt_trajectory(rc, config.rt_seeds);
    deliver(rt_csv(points), options, out);
    std::size_t violations = 0;
    for (const RtPoint& p : points) {
      if (p.mean_deviation > 1.1 * p.theta_smj || p.theta_smj > p.theta_sk) ++violations;
    }
    log << points.size() << " steps, " << violations << " bound violations\n";
    return violations == 0 ? 0 : 1;
  }
  if (cmd == "estimate") {
    rc.schedule.effective_lr = default_gamma(config, rc, 1.0);
    rc.seed = derive_seed(config.tune.master_seed, row_key(rc), 0);
    const BhatTrajectory traj = track_bhat(rc, config.bhat);
    const auto [M, sigma2] = declared_noise(rc);
    const SandwichReport sw = bhat_sandwich_check(traj.records, sigma2, M, traj.eps_hat);
    deliver(bhat_csv(traj, sw), options, out);
    log << "eps_hat " << format_real(traj.eps_hat) << ", bhat_crit " << format_real(traj.bhat_crit)
        << ", sandwich " << (sw.ok() ? "holds" : "violated") << '\n';
    return sw.ok() ? 0 : 1;
  }
  // verify-theory
  const TheoryReport report = verify_theory(config);
  print_report(report, out);
  if (!options.out_path.empty()) {
    CsvTable t{{"check", "passed", "slack", "detail"}, {}};
    for (const CheckResult& c : report.checks) {
      t.rows.push_back({c.name, c.passed ? "1" : "0", format_real(c.slack), "\"" + c.detail + "\""});
    }
    emit_csv(t, options.out_path);
  }
  return report.ok() ? 0 : 1;
}

}  // namespace critpar
