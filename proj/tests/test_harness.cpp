#include <gtest/gtest.h>

#include <cmath>

#include "critpar/harness.hpp"
#include "critpar/theory.hpp"

using namespace critpar;

namespace {

RunConfig base_config(double M = 0.0, double sigma2 = 0.0) {
  RunConfig c;
  c.noise = {M, sigma2, std::nullopt};
  return c;
}

}  // namespace

TEST(Run, GradientDescentMatchesPlainLoop) {
  RunConfig c = base_config();
  const double L = curvature_constants(c.problem).L;
  c.schedule.effective_lr = 1.0 / L;
  const RunResult r = run(c);
  ASSERT_TRUE(r.converged);

  // Independent loop with an explicit tridiagonal product.
  const std::size_t d = 20;
  std::vector<double> x(d, 10.0), g(d);
  std::uint64_t iters = 0;
  auto norm_over_d = [&] {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s) / d;
  };
  while (norm_over_d() > 0.1) {
    for (std::size_t i = 0; i < d; ++i) {
      g[i] = 2.2 * x[i] - (i > 0 ? x[i - 1] : 0.0) - (i + 1 < d ? x[i + 1] : 0.0);
    }
    for (std::size_t i = 0; i < d; ++i) x[i] -= g[i] / L;
    ++iters;
  }
  EXPECT_EQ(r.grad_evals, iters);
  EXPECT_EQ(r.model_updates, iters);
}

TEST(Run, ConvergedAtStartCostsNothing) {
  RunConfig c = base_config(10.0, 1.0);
  c.x0_fill = 0.0;
  const RunResult r = run(c);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.grad_evals, 0u);
}

TEST(Run, FixedHorizonAndRecording) {
  RunConfig c = base_config(1.0, 0.0);
  c.schedule = {ScheduleKind::ExactDelay, 4, 0.001};
  c.fixed_horizon = true;
  c.max_updates = 50;
  c.record = {5, 10};
  const RunResult r = run(c);
  EXPECT_EQ(r.model_updates, 50u);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.samples.size(), 11u);
  EXPECT_EQ(r.snapshots.size(), 6u);
  EXPECT_EQ(r.samples.front().deviation, 0.0);
  EXPECT_GT(r.samples.back().deviation, 0.0);
  EXPECT_EQ(r.snapshots.back().x, r.final_x);
}

TEST(Run, DivergesAndRespectsBudget) {
  RunConfig c = base_config();
  c.schedule.effective_lr = 1.0;
  EXPECT_TRUE(run(c).diverged);
  c.schedule.effective_lr = 1e-4;
  c.grad_eval_budget = 100;
  const RunResult r = run(c);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_EQ(r.grad_evals, 101u);
}

TEST(Run, SameSeedSameResult) {
  RunConfig c = base_config(10.0, 0.0);
  c.schedule = {ScheduleKind::RandomCoordinateDelay, 8, 0.01};
  c.seed = 123;
  const RunResult a = run(c), b = run(c);
  EXPECT_EQ(a.final_x, b.final_x);
  EXPECT_EQ(a.grad_evals, b.grad_evals);
  c.seed = 124;
  EXPECT_NE(run(c).final_x, a.final_x);
}

TEST(RowKey, CoversRowParametersOnly) {
  RunConfig a = base_config(10.0, 0.0), b = a;
  b.schedule.effective_lr = 0.5;
  b.seed = 9;
  EXPECT_EQ(row_key(a), row_key(b));
  b.noise.M = 11.0;
  EXPECT_NE(row_key(a), row_key(b));
  b = a;
  b.schedule.parallelism = 2;
  EXPECT_NE(row_key(a), row_key(b));
}

TEST(Grid, HalvingDefinition) {
  const std::vector<double> g = stepsize_grid(1.1, 20);
  ASSERT_EQ(g.size(), 20u);
  EXPECT_DOUBLE_EQ(g.front(), 0.55);
  EXPECT_DOUBLE_EQ(g.back(), 1.1 / (1 << 20));
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_DOUBLE_EQ(g[k - 1], 2 * g[k]);
}

TEST(Tune, DeterministicPicksLargestConvergingPoint) {
  const TuningResult t = tune_stepsize(base_config(), {3, 0, 20, std::nullopt, false});
  ASSERT_TRUE(t.ok());
  std::size_t first = 0;
  while (t.grid[first].status != PointStatus::Converged) ++first;
  EXPECT_EQ(*t.best_index, first);
  EXPECT_EQ(t.grid.front().status, PointStatus::Diverged);
  EXPECT_DOUBLE_EQ(t.best_gamma, 0.275);
  for (const GridPoint& p : t.grid) {
    if (p.status == PointStatus::Converged) {
      EXPECT_GE(p.mean_grad_evals, t.best_T);
      EXPECT_EQ(p.converged_fraction, 1.0);
    }
  }
}

TEST(Tune, PruningNeverChangesTheWinner) {
  for (double M : {10.0, 100.0}) {
    for (std::size_t b : {1, 8}) {
      RunConfig c = base_config(M);
      c.schedule.parallelism = b;
      c.max_updates = 200000;
      const TuningResult full = tune_stepsize(c, {3, 5, 12, std::nullopt, false});
      const TuningResult pruned = tune_stepsize(c, {3, 5, 12, std::nullopt, true});
      EXPECT_EQ(full.best_index, pruned.best_index);
      EXPECT_EQ(full.best_T, pruned.best_T);
      EXPECT_EQ(full.best().sd_grad_evals, pruned.best().sd_grad_evals);
    }
  }
}

TEST(Tune, UnreachableTargetIsReported) {
  RunConfig c = base_config(10.0);
  c.max_updates = 5;
  const TuningResult t = tune_stepsize(c, {2, 0, 4, std::nullopt, true});
  EXPECT_FALSE(t.ok());
  for (const GridPoint& p : t.grid) EXPECT_NE(p.status, PointStatus::Converged);
}

TEST(Sweep, DeterministicProblemIsFlat) {
  const SpeedupTable t = speedup_sweep(base_config(), {1, 2, 4}, {{3, 0, 20, std::nullopt, true}, 1});
  ASSERT_EQ(t.rows.size(), 3u);
  for (const SpeedupRow& r : t.rows) {
    EXPECT_TRUE(r.converged);
    EXPECT_GE(r.normalized_parallel_time, 0.9);
    EXPECT_LE(r.normalized_parallel_time, 1.1);
    EXPECT_DOUBLE_EQ(r.algorithm_lr, r.gamma * r.parallelism);
  }
  EXPECT_EQ(t.find(1)->normalized_parallel_time, 1.0);
  EXPECT_EQ(t.find(3), nullptr);
}

TEST(Sweep, ThreadedMatchesSequential) {
  const TuneOptions opts{3, 2, 20, std::nullopt, true};
  const std::vector<std::size_t> ps{1, 2, 4, 8};
  RunConfig c = base_config(10.0);
  c.schedule.kind = ScheduleKind::RandomCoordinateDelay;
  const SpeedupTable a = speedup_sweep(c, ps, {opts, 1});
  const SpeedupTable b = speedup_sweep(c, ps, {opts, 3});
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(a.rows[i].parallelism, ps[i]);
    EXPECT_EQ(a.rows[i].gamma, b.rows[i].gamma);
    EXPECT_EQ(a.rows[i].grad_evals_mean, b.rows[i].grad_evals_mean);
  }
}

TEST(Sweep, LargeNoiseSpeedsUpThenSaturates) {
  const TuneOptions opts{3, 0, 20, std::nullopt, true};
  const SpeedupTable t = speedup_sweep(base_config(1000.0), {1, 8, 64, 1024}, {opts, 1});
  EXPECT_LE(t.find(8)->normalized_parallel_time, 2.0 / 8);
  EXPECT_LE(t.find(64)->normalized_parallel_time, 2.0 / 64);
  EXPECT_LT(t.find(1024)->normalized_parallel_time, t.find(64)->normalized_parallel_time);
}

TEST(Sweep, RejectsBadLists) {
  EXPECT_THROW(speedup_sweep(base_config(), {}, {}), InputError);
  EXPECT_THROW(speedup_sweep(base_config(), {2, 4}, {}), InputError);
}

TEST(RtTrajectory, DominanceHoldsAtEveryStep) {
  RunConfig c = base_config(10.0, 0.0);
  const double L = curvature_constants(c.problem).L;
  c.schedule = {ScheduleKind::ExactDelay, 8, critical_stepsize(L, 10.0, 8.0) / 2};
  c.max_updates = 200;
  c.seed = 4;
  const std::vector<RtPoint> pts = rt_trajectory(c, 20);
  ASSERT_EQ(pts.size(), 201u);
  for (const RtPoint& p : pts) {
    EXPECT_LE(p.mean_deviation, 1.1 * p.theta_smj) << "t=" << p.t;
    EXPECT_LE(p.theta_smj, p.theta_sk);
    EXPECT_LE(p.general_bound, p.theta_smj * (1 + 1e-12));
  }
}

TEST(RtTrajectory, StartAtOptimumLeavesAdditiveTerm) {
  RunConfig c = base_config(0.0, 1.0);
  const double L = curvature_constants(c.problem).L;
  const double gamma = critical_stepsize(L, 0.0, 4.0) / 2;
  c.schedule = {ScheduleKind::ExactDelay, 4, gamma};
  c.x0_fill = 0.0;
  c.max_updates = 20;
  const std::vector<RtPoint> pts = rt_trajectory(c, 20);
  EXPECT_EQ(pts[0].mean_grad_norm2, 0.0);
  EXPECT_DOUBLE_EQ(pts[1].theta_smj, gamma * 1.0 / (5 * L));
  EXPECT_LE(pts[1].mean_deviation, gamma / (5 * L) * 1.1);
}

TEST(RtTrajectory, Preconditions) {
  RunConfig c = base_config(10.0, 0.0);
  c.schedule = {ScheduleKind::ExactDelay, 4, 1.0};
  EXPECT_THROW(rt_trajectory(c, 2), InputError);
  c.schedule = {ScheduleKind::MiniBatch, 4, 1e-4};
  EXPECT_THROW(rt_trajectory(c, 2), InputError);
}

TEST(Enums, RoundTrip) {
  for (auto k : {OracleKind::Gaussian, OracleKind::BlockSparse}) EXPECT_EQ(parse_oracle_kind(to_string(k)), k);
  for (auto k : {StopKind::IterateNorm, StopKind::GradNorm2}) EXPECT_EQ(parse_stop_kind(to_string(k)), k);
  EXPECT_THROW(parse_oracle_kind("x"), InputError);
  EXPECT_THROW(parse_stop_kind("x"), InputError);
}

TEST(StopRule, GradientNormVariant) {
  const Problem q = Problem::quadratic({20, 0.2});
  const StopRule r{StopKind::GradNorm2, 1.0};
  EXPECT_TRUE(r.satisfied(q, Vector(20, 0.0)));
  EXPECT_FALSE(r.satisfied(q, Vector(20, 10.0)));
  RunConfig c = base_config();
  c.stop = r;
  c.schedule.effective_lr = 0.2;
  const RunResult res = run(c);
  ASSERT_TRUE(res.converged);
  EXPECT_LE(squared_norm(q.gradient(res.final_x)), 1.0);
}
