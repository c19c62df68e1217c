#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "critpar/commands.hpp"
#include "critpar/csv.hpp"

using namespace critpar;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("critpar_test_" + name);
}

std::string error_of(const std::string& text, const std::vector<std::string>& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_EQ(c.base.problem.d, 20u);
  EXPECT_DOUBLE_EQ(c.base.problem.lambda, 0.2);
  EXPECT_DOUBLE_EQ(c.base.x0_fill, 10.0);
  EXPECT_DOUBLE_EQ(c.base.stop.threshold, 0.1);
  EXPECT_EQ(c.base.stop.kind, StopKind::IterateNorm);
  EXPECT_EQ(c.base.noise.M, 0.0);
  EXPECT_EQ(c.base.noise.sigma2, 0.0);
  EXPECT_EQ(c.base.schedule.parallelism, 1u);
  EXPECT_EQ(c.base.schedule.kind, ScheduleKind::MiniBatch);
  EXPECT_EQ(c.tune.seeds, 3u);
  EXPECT_EQ(c.tune.grid_size, 20u);
  EXPECT_FALSE(c.tune.grid_base.has_value());
  ASSERT_EQ(c.parallelism_list.size(), 11u);
  EXPECT_EQ(c.parallelism_list.back(), 1024u);
}

TEST(Config, SectionsAndOverrides) {
  const ExperimentConfig c = parse_config(
      "[noise]\nM = 100\nsigma2=0.5\n; comment\n[schedule]\nkind = random-delay\n"
      "parallelism_list = 1, 4,16\n[seeds]\ncount=5\n",
      {"noise.M=10", "stop.threshold=0.05"});
  EXPECT_EQ(c.base.noise.M, 10.0);
  EXPECT_EQ(c.base.noise.sigma2, 0.5);
  EXPECT_EQ(c.base.schedule.kind, ScheduleKind::RandomCoordinateDelay);
  EXPECT_EQ(c.parallelism_list, (std::vector<std::size_t>{1, 4, 16}));
  EXPECT_EQ(c.tune.seeds, 5u);
  EXPECT_EQ(c.base.stop.threshold, 0.05);
}

TEST(Config, OverrideOnlyChangesOneField) {
  const ExperimentConfig a = parse_config(""), b = parse_config("", {"noise.M=10"});
  EXPECT_EQ(b.base.noise.M, 10.0);
  EXPECT_EQ(row_key(b.base), row_key([&] {
              RunConfig r = a.base;
              r.noise.M = 10.0;
              return r;
            }()));
}

TEST(Config, Rejections) {
  EXPECT_NE(error_of("[schedule]\nkind = bogus\n").find("schedule.kind"), std::string::npos);
  EXPECT_NE(error_of("[noise]\nfoo = 1\n").find("noise.foo"), std::string::npos);
  EXPECT_NE(error_of("[bogus]\nx = 1\n").find("bogus"), std::string::npos);
  EXPECT_NE(error_of("[noise]\nM = ten\n").find("noise.M"), std::string::npos);
  EXPECT_NE(error_of("[noise]\nM = -1\n").find("noise.M"), std::string::npos);
  EXPECT_NE(error_of("[problem]\nd = 20\nd = 30\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("[problem\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("", {"noise.M"}).find("override"), std::string::npos);
  EXPECT_NE(error_of("", {"verify.fault=maybe"}).find("verify.fault"), std::string::npos);
  EXPECT_NE(error_of("", {"schedule.parallelism=0"}).find("parallelism"), std::string::npos);
  EXPECT_NE(error_of("", {"seeds.count=0"}).find("seeds.count"), std::string::npos);
}

TEST(Config, DeclaredNoise) {
  RunConfig c;
  c.noise = {10.0, 2.0, std::nullopt};
  EXPECT_EQ(declared_noise(c), (std::pair<double, double>{10.0, 2.0}));
  c.noise.mask_alpha = 2.0;
  EXPECT_EQ(declared_noise(c), (std::pair<double, double>{21.0, 4.0}));
  c.oracle = OracleKind::BlockSparse;
  c.blocks = 8;
  c.noise.mask_alpha.reset();
  EXPECT_EQ(declared_noise(c), (std::pair<double, double>{7.0, 0.0}));
}

TEST(Csv, RealsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 2.175e-3, 1e300, -0.0}) EXPECT_EQ(std::stod(format_real(v)), v);
  EXPECT_EQ(format_real(0.5), "0.5");
}

TEST(Csv, EmptyTableIsHeaderOnly) {
  std::ostringstream out;
  write_csv(speedup_csv(SpeedupTable{}), out);
  EXPECT_EQ(out.str(),
            "algorithm,M,sigma2,parallelism,gamma,seed_count,grad_evals_mean,grad_evals_sd,"
            "model_updates_mean,converged,normalized_parallel_time\n");
}

TEST(Csv, SpeedupRowHasElevenFields) {
  RunConfig c;
  c.noise.M = 10.0;
  const SpeedupTable t = speedup_sweep(c, {1}, {{3, 0, 20, std::nullopt, true}, 1});
  std::ostringstream out;
  write_csv(speedup_csv(t), out);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 10);
  EXPECT_EQ(row.rfind("minibatch,10,0,1,", 0), 0u);
}

TEST(Csv, UnwritablePathThrows) {
  EXPECT_THROW(emit_csv(CsvTable{{"a"}, {}}, "/nonexistent-dir/x.csv"), std::runtime_error);
}

TEST(Commands, RejectsUnknownSubcommand) {
  CommandOptions o;
  o.subcommand = "plot";
  std::ostringstream out, log;
  EXPECT_THROW(run_command(o, out, log), InputError);
}

TEST(Commands, RepeatedSpeedupIsByteIdentical) {
  const auto p1 = temp_path("a.csv"), p2 = temp_path("b.csv");
  CommandOptions o;
  o.subcommand = "speedup";
  o.overrides = {"noise.M=10", "schedule.parallelism_list=1,2,4,8", "schedule.kind=random-delay"};
  o.seed = 17;
  std::ostringstream out, log;
  o.out_path = p1.string();
  ASSERT_EQ(run_command(o, out, log), 0);
  o.out_path = p2.string();
  o.overrides.push_back("tuning.threads=2");
  ASSERT_EQ(run_command(o, out, log), 0);
  const std::string a = read_file(p1);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read_file(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST(Commands, CliBinaryIsDeterministic) {
  const auto p1 = temp_path("cli1.csv"), p2 = temp_path("cli2.csv");
  const std::string base = std::string(CRITPAR_CLI_PATH) +
                           " speedup --seed 3 --set noise.M=100 --set schedule.parallelism_list=1,4,16 --out ";
  ASSERT_EQ(std::system((base + p1.string() + " 2>/dev/null").c_str()), 0);
  ASSERT_EQ(std::system((base + p2.string() + " 2>/dev/null").c_str()), 0);
  EXPECT_EQ(read_file(p1), read_file(p2));
  const std::string bad = std::string(CRITPAR_CLI_PATH) + " run --set schedule.kind=bogus 2>/dev/null";
  EXPECT_NE(std::system(bad.c_str()), 0);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST(Commands, SubcommandsProduceCsv) {
  for (const char* cmd : {"run", "tune", "rt-verify", "estimate"}) {
    CommandOptions o;
    o.subcommand = cmd;
    o.overrides = {"noise.M=10", "schedule.parallelism=4", "schedule.kind=exact-delay"};
    std::ostringstream out, log;
    EXPECT_EQ(run_command(o, out, log), 0) << cmd << ": " << log.str();
    const std::string csv = out.str();
    EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 1) << cmd;
  }
}

TEST(VerifyTheory, DefaultConfigPasses) {
  const TheoryReport r = verify_theory(parse_config(""));
  EXPECT_GE(r.checks.size(), 4u);
  for (const CheckResult& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  std::ostringstream out;
  print_report(r, out);
  EXPECT_NE(out.str().find("block-variance"), std::string::npos);
  EXPECT_NE(out.str().find("lemma-sparsity"), std::string::npos);
}

TEST(VerifyTheory, InjectedFaultFailsBlockCheck) {
  CommandOptions o;
  o.subcommand = "verify-theory";
  o.overrides = {"verify.fault=scaled-block", "verify.lemma_trials=10"};
  std::ostringstream out, log;
  EXPECT_NE(run_command(o, out, log), 0);
  EXPECT_NE(out.str().find("FAIL block-variance"), std::string::npos);
  EXPECT_EQ(out.str().find("FAIL lemma"), std::string::npos);
}

TEST(ScaledOracle, HalvesVariance) {
  const Problem p = Problem::block_separable({{20, 0.2}, 8});
  const Oracle o = make_scaled_deviation_oracle(make_block_oracle(p), 1.0 / std::sqrt(2.0));
  Vector x(160, 3.0);
  RandomStream rng(5);
  const double ratio = mean_noise_norm2(o, x, 20000, rng) / squared_norm(p.gradient(x));
  EXPECT_NEAR(ratio, 3.5, 0.1);
}

TEST(LemmaSampler, RespectsDelta) {
  RandomStream rng(6);
  for (int i = 0; i < 200; ++i) {
    const double delta = 1.0 - rng.uniform01();
    const DiscreteDistribution d = random_sparse_distribution(delta, rng);
    double nz = 0.0, total = 0.0;
    for (const auto& [v, p] : d.atoms) {
      total += p;
      if (v != 0.0) nz += p;
    }
    EXPECT_LE(nz, delta * (1 + 1e-12));
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}
