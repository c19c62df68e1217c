#include "critpar/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace critpar {

namespace {

std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const CsvTable& table, std::ostream& out) {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::logic_error("csv row width mismatch");
    line(row);
  }
}

void emit_csv(const CsvTable& table, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
  write_csv(table, out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + out_path + "' failed");
}

CsvTable speedup_csv(const SpeedupTable& table) {
  CsvTable t{{"algorithm", "M", "sigma2", "parallelism", "gamma", "seed_count", "grad_evals_mean",
              "grad_evals_sd", "model_updates_mean", "converged", "normalized_parallel_time"},
             {}};
  for (const SpeedupRow& r : table.rows) {
    t.rows.push_back({r.algorithm, format_real(r.M), format_real(r.sigma2), cell(std::uint64_t{r.parallelism}),
                      format_real(r.gamma), cell(std::uint64_t{r.seed_count}), format_real(r.grad_evals_mean),
                      format_real(r.grad_evals_sd), format_real(r.model_updates_mean), cell(r.converged),
                      format_real(r.normalized_parallel_time)});
  }
  return t;
}

CsvTable tuning_csv(const RunConfig& config, const TuningResult& result) {
  CsvTable t{{"algorithm", "M", "sigma2", "parallelism", "gamma", "algorithm_lr", "seeds_run",
              "grad_evals_mean", "grad_evals_sd", "model_updates_mean", "converged_fraction",
              "status", "best"},
             {}};
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    const GridPoint& p = result.grid[i];
    t.rows.push_back({std::string(to_string(config.schedule.kind)), format_real(config.noise.M),
                      format_real(config.noise.sigma2), cell(std::uint64_t{config.schedule.parallelism}),
                      format_real(p.gamma), format_real(p.algorithm_lr), cell(std::uint64_t{p.seeds_run}),
                      format_real(p.mean_grad_evals), format_real(p.sd_grad_evals),
                      format_real(p.mean_model_updates), format_real(p.converged_fraction),
                      std::string(to_string(p.status)), cell(result.best_index == i)});
  }
  return t;
}

CsvTable run_csv(const RunConfig& config, const RunResult& result) {
  CsvTable t{{"algorithm", "M", "sigma2", "parallelism", "gamma", "seed", "converged", "diverged",
              "grad_evals", "model_updates", "steps"},
             {}};
  t.rows.push_back({std::string(to_string(config.schedule.kind)), format_real(config.noise.M),
                    format_real(config.noise.sigma2), cell(std::uint64_t{config.schedule.parallelism}),
                    format_real(config.schedule.effective_lr), cell(config.seed), cell(result.converged),
                    cell(result.diverged), cell(result.grad_evals), cell(result.model_updates),
                    cell(result.steps)});
  return t;
}

CsvTable rt_csv(const std::vector<RtPoint>& points) {
  CsvTable t{{"t", "mean_deviation", "mean_grad_norm2", "theta_smj", "theta_sk", "general_bound"}, {}};
  for (const RtPoint& p : points) {
    t.rows.push_back({cell(p.t), format_real(p.mean_deviation), format_real(p.mean_grad_norm2),
                      format_real(p.theta_smj), format_real(p.theta_sk), format_real(p.general_bound)});
  }
  return t;
}

CsvTable bhat_csv(const BhatTrajectory& trajectory, const SandwichReport& sandwich) {
  CsvTable t{{"model_updates", "grad_norm2", "noise_mean2", "bhat", "running_bhat_crit", "eps_hat",
              "sandwich_middle", "left_ok"},
             {}};
  std::size_t j = 0;
  for (std::size_t i = 0; i < trajectory.records.size(); ++i) {
    const BhatRecord& r = trajectory.records[i];
    std::string middle = "nan";
    std::string left = "0";
    if (r.defined && j < sandwich.entries.size()) {
      middle = format_real(sandwich.entries[j].middle);
      left = cell(sandwich.entries[j].left_ok);
      ++j;
    }
    t.rows.push_back({cell(r.step), format_real(r.grad_norm2), format_real(r.noise_mean2),
                      format_real(r.bhat), format_real(trajectory.running_crit[i]),
                      format_real(trajectory.eps_hat), middle, left});
  }
  return t;
}

}  // namespace critpar
