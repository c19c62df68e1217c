#include "critpar/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace critpar {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem", {"d", "lambda", "blocks", "x0"}},
      {"noise", {"oracle", "M", "sigma2", "mask_alpha"}},
      {"schedule", {"kind", "parallelism", "gamma", "parallelism_list"}},
      {"stop", {"kind", "threshold", "max_updates", "grad_eval_budget"}},
      {"tuning", {"grid_base", "grid_size", "prune", "threads"}},
      {"seeds", {"count", "master", "rt_count"}},
      {"recording", {"stats_every", "snapshot_every", "horizon", "bhat_samples", "checkpoints"}},
      {"verify", {"lemma_trials", "corollary_blocks", "corollary_samples", "sandwich_M", "fault"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& field, const std::string& text, const char* want) {
  throw ConfigError("invalid value '" + text + "' for " + field + " (expected " + want + ")");
}

double to_real(const std::string& field, const std::string& text) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) bad_value(field, text, "a number");
  return v;
}

std::uint64_t to_uint(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    bad_value(field, text, "a nonnegative integer");
  }
  return v;
}

bool to_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  bad_value(field, text, "true or false");
}

std::vector<std::size_t> to_uint_list(const std::string& field, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_uint(field, trim(item)));
  if (out.empty()) bad_value(field, text, "a comma-separated list of integers");
  return out;
}

/// Converts library validation failures into errors naming the offending field.
template <class F>
void checked(const std::string& field, const std::string& text, F&& apply) {
  try {
    apply();
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    throw ConfigError("invalid value '" + text + "' for " + field + ": " + e.what());
  }
}

void apply_key(ExperimentConfig& c, const std::string& section, const std::string& key,
               const std::string& text) {
  const std::string field = section + "." + key;
  RunConfig& r = c.base;
  checked(field, text, [&] {
    if (section == "problem") {
      if (key == "d") r.problem.d = to_uint(field, text);
      else if (key == "lambda") r.problem.lambda = to_real(field, text);
      else if (key == "blocks") r.blocks = to_uint(field, text);
      else if (key == "x0") r.x0_fill = to_real(field, text);
    } else if (section == "noise") {
      if (key == "oracle") r.oracle = parse_oracle_kind(text);
      else if (key == "M") r.noise.M = to_real(field, text);
      else if (key == "sigma2") r.noise.sigma2 = to_real(field, text);
      else if (key == "mask_alpha") r.noise.mask_alpha = to_real(field, text);
    } else if (section == "schedule") {
      if (key == "kind") r.schedule.kind = parse_schedule_kind(text);
      else if (key == "parallelism") r.schedule.parallelism = to_uint(field, text);
      else if (key == "gamma") c.gamma = to_real(field, text);
      else if (key == "parallelism_list") c.parallelism_list = to_uint_list(field, text);
    } else if (section == "stop") {
      if (key == "kind") r.stop.kind = parse_stop_kind(text);
      else if (key == "threshold") r.stop.threshold = to_real(field, text);
      else if (key == "max_updates") r.max_updates = to_uint(field, text);
      else if (key == "grad_eval_budget") r.grad_eval_budget = to_uint(field, text);
    } else if (section == "tuning") {
      if (key == "grid_base") c.tune.grid_base = to_real(field, text);
      else if (key == "grid_size") c.tune.grid_size = to_uint(field, text);
      else if (key == "prune") c.tune.prune = to_bool(field, text);
      else if (key == "threads") c.threads = to_uint(field, text);
    } else if (section == "seeds") {
      if (key == "count") c.tune.seeds = to_uint(field, text);
      else if (key == "master") c.tune.master_seed = to_uint(field, text);
      else if (key == "rt_count") c.rt_seeds = to_uint(field, text);
    } else if (section == "recording") {
      if (key == "stats_every") r.record.stats_every = to_uint(field, text);
      else if (key == "snapshot_every") r.record.snapshot_every = to_uint(field, text);
      else if (key == "horizon") c.rt_horizon = to_uint(field, text);
      else if (key == "bhat_samples") c.bhat.samples = to_uint(field, text);
      else if (key == "checkpoints") c.bhat.checkpoints = to_uint(field, text);
    } else if (section == "verify") {
      if (key == "lemma_trials") c.verify.lemma_trials = to_uint(field, text);
      else if (key == "corollary_blocks") c.verify.corollary_blocks = to_uint_list(field, text);
      else if (key == "corollary_samples") c.verify.corollary_samples = to_uint(field, text);
      else if (key == "sandwich_M") c.verify.sandwich_M = to_real(field, text);
      else if (key == "fault") {
        if (text != "none" && text != "scaled-block") bad_value(field, text, "none or scaled-block");
        c.verify.fault = text;
      }
    }
  });
}

void validate(const ExperimentConfig& c) {
  auto field_check = [](const char* field, bool ok, const char* want) {
    if (!ok) throw ConfigError(std::string(field) + " must be " + want);
  };
  try {
    c.base.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  if (c.gamma) field_check("schedule.gamma", *c.gamma > 0.0, "positive");
  field_check("schedule.parallelism_list", !c.parallelism_list.empty(), "nonempty");
  for (std::size_t p : c.parallelism_list) field_check("schedule.parallelism_list", p >= 1, ">= 1");
  if (c.tune.grid_base) field_check("tuning.grid_base", *c.tune.grid_base > 0.0, "positive");
  field_check("tuning.grid_size", c.tune.grid_size >= 1, ">= 1");
  field_check("seeds.count", c.tune.seeds >= 1, ">= 1");
  field_check("seeds.rt_count", c.rt_seeds >= 1, ">= 1");
  field_check("recording.horizon", c.rt_horizon >= 1, ">= 1");
  field_check("recording.bhat_samples", c.bhat.samples >= 2, ">= 2");
  field_check("recording.checkpoints", c.bhat.checkpoints >= 10, ">= 10");
  field_check("verify.corollary_samples", c.verify.corollary_samples >= 2, ">= 2");
  for (std::size_t b : c.verify.corollary_blocks) field_check("verify.corollary_blocks", b >= 1, ">= 1");
  field_check("verify.sandwich_M", c.verify.sandwich_M >= 0.0, "nonnegative");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("malformed config at line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    const std::string key = trim(ov.substr(0, eq));
    const auto dot = key.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
      throw ConfigError("override '" + ov + "' is not of the form section.key=value");
    }
    tree.put(pt::ptree::path_type(key, '.'), trim(ov.substr(eq + 1)));
  }

  ExperimentConfig c;
  for (std::size_t p = 1; p <= 1024; p *= 2) c.parallelism_list.push_back(p);

  for (const auto& [section, body] : tree) {
    const auto known = allowed_keys().find(section);
    if (!body.data().empty()) throw ConfigError("key '" + section + "' must appear inside a section");
    if (known == allowed_keys().end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
      apply_key(c, section, key, trim(value.data()));
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return parse_config("", overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::pair<double, double> declared_noise(const RunConfig& config) {
  double M = config.noise.M;
  double sigma2 = config.noise.sigma2;
  if (config.oracle == OracleKind::BlockSparse) {
    M = static_cast<double>(config.blocks) - 1.0;
    sigma2 = 0.0;
  }
  if (config.noise.mask_alpha) {
    // E|mask(g)|^2 = alpha E|g|^2 for an unbiased keep-with-probability-1/alpha mask.
    const double a = *config.noise.mask_alpha;
    M = a * (1.0 + M) - 1.0;
    sigma2 *= a;
  }
  return {M, sigma2};
}

}  // namespace critpar
