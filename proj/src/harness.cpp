#include "critpar/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "critpar/rng.hpp"
#include "critpar/theory.hpp"

namespace critpar {

std::string_view to_string(OracleKind kind) {
  return kind == OracleKind::Gaussian ? "gaussian" : "block";
}

OracleKind parse_oracle_kind(std::string_view name) {
  if (name == "gaussian") return OracleKind::Gaussian;
  if (name == "block") return OracleKind::BlockSparse;
  throw InputError("unknown oracle '" + std::string(name) + "' (expected gaussian or block)");
}

std::string_view to_string(StopKind kind) {
  return kind == StopKind::IterateNorm ? "iterate-norm" : "grad-norm2";
}

StopKind parse_stop_kind(std::string_view name) {
  if (name == "iterate-norm") return StopKind::IterateNorm;
  if (name == "grad-norm2") return StopKind::GradNorm2;
  throw InputError("unknown stop kind '" + std::string(name) +
                   "' (expected iterate-norm or grad-norm2)");
}

std::string_view to_string(PointStatus status) {
  switch (status) {
    case PointStatus::Converged: return "converged";
    case PointStatus::Diverged: return "diverged";
    case PointStatus::NotConverged: return "not-converged";
    case PointStatus::Pruned: return "pruned";
  }
  return "unknown";
}

bool StopRule::satisfied(const Problem& problem, std::span<const double> x) const {
  if (kind == StopKind::IterateNorm) {
    return std::sqrt(squared_norm(x)) / static_cast<double>(x.size()) <= threshold;
  }
  return squared_norm(problem.gradient(x)) <= threshold;
}

void RunConfig::validate() const {
  problem.validate();
  if (blocks < 1) throw InputError("problem.blocks must be at least 1");
  noise.validate();
  schedule.validate();
  if (!(stop.threshold > 0.0)) throw InputError("stop.threshold must be positive");
  if (max_updates < 1) throw InputError("stop.max_updates must be at least 1");
  if (x0 && x0->size() != blocks * problem.d) throw InputError("x0 has the wrong dimension");
}

Problem RunConfig::make_problem() const {
  if (blocks > 1 || oracle == OracleKind::BlockSparse) {
    return Problem::block_separable({problem, blocks});
  }
  return Problem::quadratic(problem);
}

Oracle RunConfig::make_oracle(const Problem& p) const {
  if (oracle == OracleKind::Gaussian) return make_gaussian_oracle(p, noise);
  Oracle base = make_block_oracle(p);
  if (noise.mask_alpha) return make_masked_oracle(base, *noise.mask_alpha);
  return base;
}

Vector RunConfig::initial_point(std::size_t dim) const {
  if (x0) return *x0;
  return Vector(dim, x0_fill);
}

std::string row_key(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(c.schedule.kind) << '|' << to_string(c.oracle) << "|M=" << c.noise.M
     << "|s2=" << c.noise.sigma2 << "|a=" << c.noise.mask_alpha.value_or(1.0)
     << "|p=" << c.schedule.parallelism << "|d=" << c.problem.d << "|l=" << c.problem.lambda
     << "|B=" << c.blocks;
  return os.str();
}

RunResult run(const RunConfig& config) {
  config.validate();
  const Problem problem = config.make_problem();
  return run(config, config.make_oracle(problem));
}

RunResult run(const RunConfig& config, const Oracle& oracle) {
  config.validate();
  const Problem& problem = oracle.problem();
  SimState state = make_state(config.initial_point(problem.dim()), config.schedule);
  SimStreams streams = SimStreams::from_seed(config.seed);
  RunResult result;
  Vector grad(problem.dim());

  auto record = [&] {
    const std::uint64_t u = state.model_updates;
    if (config.record.stats_every && u % config.record.stats_every == 0) {
      problem.gradient(state.x, grad);
      result.samples.push_back({u, state.step, squared_norm(grad), ghost_deviation(state)});
    }
    if (config.record.snapshot_every && u % config.record.snapshot_every == 0) {
      result.snapshots.push_back({u, state.x});
    }
  };

  record();
  if (!config.fixed_horizon && config.stop.satisfied(problem, state.x)) {
    result.converged = true;
  } else {
    while (state.model_updates < config.max_updates) {
      advance(state, config.schedule, oracle, streams);
      record();
      if (state.diverged) {
        result.diverged = true;
        break;
      }
      if (!config.fixed_horizon && config.stop.satisfied(problem, state.x)) {
        result.converged = true;
        break;
      }
      if (config.grad_eval_budget && state.grad_evals > config.grad_eval_budget) {
        result.budget_exhausted = true;
        break;
      }
    }
  }
  result.grad_evals = state.grad_evals;
  result.model_updates = state.model_updates;
  result.steps = state.step;
  result.final_x = std::move(state.x);
  return result;
}

std::vector<double> stepsize_grid(double base, std::size_t size) {
  std::vector<double> grid(size);
  for (std::size_t k = 0; k < size; ++k) grid[k] = std::ldexp(base, -static_cast<int>(k + 1));
  return grid;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double e : v) s += (e - m) * (e - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TuningResult tune_stepsize(const RunConfig& config_template, const TuneOptions& options) {
  config_template.validate();
  if (options.seeds < 1) throw InputError("tuning needs at least one seed");
  if (options.grid_size < 1) throw InputError("tuning grid must be nonempty");

  const double base = options.grid_base.value_or(1.1 / (1.0 + config_template.noise.M));
  const std::string key = row_key(config_template);
  std::vector<std::uint64_t> seeds(options.seeds);
  for (std::size_t i = 0; i < options.seeds; ++i) seeds[i] = derive_seed(options.master_seed, key, i);

  const Problem problem = config_template.make_problem();
  const Oracle oracle = config_template.make_oracle(problem);
  const double n_seeds = static_cast<double>(options.seeds);

  TuningResult result;
  for (double gamma : stepsize_grid(base, options.grid_size)) {
    RunConfig cfg = config_template;
    cfg.schedule.effective_lr = gamma;
    cfg.record = {};

    std::vector<double> evals;
    std::vector<double> updates;
    PointStatus status = PointStatus::Converged;
    std::uint64_t used = 0;
    std::size_t runs = 0;
    for (std::size_t i = 0; i < options.seeds; ++i) {
      cfg.seed = seeds[i];
      cfg.grad_eval_budget = 0;
      if (options.prune && result.best_index) {
        const auto allowed = static_cast<std::uint64_t>(std::llround(n_seeds * result.best_T));
        if (used >= allowed) {
          status = PointStatus::Pruned;
          break;
        }
        cfg.grad_eval_budget = allowed - used;
      }
      const RunResult r = run(cfg, oracle);
      ++runs;
      used += r.grad_evals;
      if (r.converged) {
        evals.push_back(static_cast<double>(r.grad_evals));
        updates.push_back(static_cast<double>(r.model_updates));
        continue;
      }
      status = r.diverged ? PointStatus::Diverged
               : r.budget_exhausted ? PointStatus::Pruned
                                    : PointStatus::NotConverged;
      break;
    }

    GridPoint point{gamma,
                    gamma * static_cast<double>(cfg.schedule.parallelism),
                    mean_of(evals),
                    sample_sd(evals),
                    mean_of(updates),
                    static_cast<double>(evals.size()) / n_seeds,
                    runs,
                    status};
    result.grid.push_back(point);
    // Strict improvement only: on ties the larger, earlier gamma wins.
    if (status == PointStatus::Converged && (!result.best_index || point.mean_grad_evals < result.best_T)) {
      result.best_index = result.grid.size() - 1;
      result.best_T = point.mean_grad_evals;
      result.best_gamma = gamma;
    }
  }
  if (result.best_index) {
    result.endpoint_warning = *result.best_index == 0 || *result.best_index + 1 == result.grid.size();
  }
  return result;
}

const SpeedupRow* SpeedupTable::find(std::size_t parallelism) const {
  for (const SpeedupRow& r : rows) {
    if (r.parallelism == parallelism) return &r;
  }
  return nullptr;
}

SpeedupTable speedup_sweep(const RunConfig& config_template,
                           const std::vector<std::size_t>& parallelism_list,
                           const SweepOptions& options) {
  if (parallelism_list.empty()) throw InputError("parallelism list is empty");
  if (std::find(parallelism_list.begin(), parallelism_list.end(), 1) == parallelism_list.end()) {
    throw InputError("parallelism list must contain 1 (the reference row)");
  }
  config_template.validate();

  auto tune_row = [&](std::size_t p) {
    RunConfig cfg = config_template;
    cfg.schedule.parallelism = p;
    return tune_stepsize(cfg, options.tune);
  };

  std::vector<TuningResult> tunings(parallelism_list.size());
  std::size_t threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max<std::size_t>(1, std::min(threads, parallelism_list.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < parallelism_list.size(); ++i) tunings[i] = tune_row(parallelism_list[i]);
  } else {
    // Rows are independent; each worker takes every threads-th row.
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < parallelism_list.size(); i += threads) {
          tunings[i] = tune_row(parallelism_list[i]);
        }
      }));
    }
    for (auto& f : workers) f.get();
  }

  SpeedupTable table;
  for (std::size_t i = 0; i < parallelism_list.size(); ++i) {
    const std::size_t p = parallelism_list[i];
    const TuningResult& t = tunings[i];
    SpeedupRow row{std::string(to_string(config_template.schedule.kind)),
                   config_template.noise.M,
                   config_template.noise.sigma2,
                   p,
                   std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(),
                   options.tune.seeds,
                   std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(),
                   t.ok(),
                   std::numeric_limits<double>::quiet_NaN(),
                   t};
    if (t.ok()) {
      const GridPoint& best = t.best();
      row.gamma = best.gamma;
      row.algorithm_lr = best.algorithm_lr;
      row.grad_evals_mean = best.mean_grad_evals;
      row.grad_evals_sd = best.sd_grad_evals;
      row.model_updates_mean = best.mean_model_updates;
    }
    table.rows.push_back(std::move(row));
  }

  const SpeedupRow* ref = table.find(1);
  if (ref && ref->converged) {
    const double t_ref = ref->grad_evals_mean;
    for (SpeedupRow& row : table.rows) {
      if (!row.converged) continue;
      row.normalized_parallel_time =
          row.parallelism == 1 ? 1.0
                               : (row.grad_evals_mean / static_cast<double>(row.parallelism)) / t_ref;
    }
  }
  return table;
}

std::vector<RtPoint> rt_trajectory(const RunConfig& config, std::size_t seeds) {
  config.validate();
  if (config.schedule.kind != ScheduleKind::ExactDelay) {
    throw InputError("rt_trajectory requires the exact-delay schedule");
  }
  if (seeds < 1) throw InputError("rt_trajectory needs at least one seed");
  const Problem problem = config.make_problem();
  const Oracle oracle = config.make_oracle(problem);
  const double tau = static_cast<double>(config.schedule.parallelism);
  const double gamma = config.schedule.effective_lr;
  const double L = problem.L();
  const double M = config.noise.M;
  const double sigma2 = config.noise.sigma2;
  if (gamma > critical_stepsize(L, M, tau)) {
    throw InputError("stepsize exceeds the critical stepsize; the drift bound does not apply");
  }

  const std::uint64_t horizon = config.max_updates;
  std::vector<double> dev(horizon + 1, 0.0);
  std::vector<double> grad2(horizon + 1, 0.0);
  const std::string key = row_key(config);
  for (std::size_t s = 0; s < seeds; ++s) {
    RunConfig cfg = config;
    cfg.seed = derive_seed(config.seed, key, s);
    cfg.fixed_horizon = true;
    cfg.record.stats_every = 1;
    const RunResult r = run(cfg, oracle);
    if (r.diverged) throw InputError("rt_trajectory run diverged below the critical stepsize");
    for (const RunSample& sample : r.samples) {
      dev[sample.step] += sample.deviation;
      grad2[sample.step] += sample.grad_norm2;
    }
  }
  const double n = static_cast<double>(seeds);
  for (std::uint64_t t = 0; t <= horizon; ++t) {
    dev[t] /= n;
    grad2[t] /= n;
  }

  std::vector<RtPoint> out;
  out.reserve(horizon + 1);
  const auto window = static_cast<std::uint64_t>(config.schedule.parallelism);
  for (std::uint64_t t = 0; t <= horizon; ++t) {
    const std::uint64_t lo = t > window ? t - window : 0;
    const std::span<const double> history(grad2.data() + lo, t - lo);
    const RtBounds b = rt_bound_smj(history, L, M, tau, gamma, sigma2);
    out.push_back({t, dev[t], grad2[t], *b.smj, rt_bound_sk(history, L, tau, gamma, sigma2), b.general});
  }
  return out;
}

}  // namespace critpar
