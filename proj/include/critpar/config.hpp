#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "critpar/estimators.hpp"
#include "critpar/harness.hpp"

namespace critpar {

/// Malformed text, unknown key or invalid value. The message names the line or
/// the `section.key` field at fault.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct VerifyOptions {
  std::size_t lemma_trials = 1000;
  std::vector<std::size_t> corollary_blocks{2, 8, 32};
  std::size_t corollary_samples = 100000;
  double sandwich_M = 10.0;
  /// Fault injection: "none" or "scaled-block" (block oracle whose deviation is
  /// shrunk by 1/sqrt 2, i.e. half the variance, while still claiming B - 1).
  std::string fault = "none";
};

struct ExperimentConfig {
  RunConfig base;
  std::optional<double> gamma;  ///< per-gradient stepsize for run/estimate/rt-verify
  std::vector<std::size_t> parallelism_list;
  TuneOptions tune;
  std::size_t threads = 0;
  std::size_t rt_seeds = 20;
  std::uint64_t rt_horizon = 200;
  BhatOptions bhat;
  VerifyOptions verify;
};

/// Parses INI-style text:
///
///   [section]
///   key = value
///   ; full-line comment
///
/// Sections and keys (defaults in brackets):
///   problem:   d [20], lambda [0.2], blocks [1], x0 [10]
///   noise:     oracle [gaussian|block], M [0], sigma2 [0], mask_alpha [unset]
///   schedule:  kind [minibatch|exact-delay|random-delay], parallelism [1],
///              gamma [unset], parallelism_list [1,2,4,...,1024]
///   stop:      kind [iterate-norm|grad-norm2], threshold [0.1],
///              max_updates [1000000], grad_eval_budget [0]
///   tuning:    grid_base [1.1/(1+M)], grid_size [20], prune [true], threads [0]
///   seeds:     count [3], master [0], rt_count [20]
///   recording: stats_every [0], snapshot_every [0], horizon [200],
///              bhat_samples [10000], checkpoints [100]
///   verify:    lemma_trials [1000], corollary_blocks [2,8,32],
///              corollary_samples [100000], sandwich_M [10], fault [none]
///
/// `overrides` are `section.key=value` strings applied on top of the text.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

/// Reads and parses a file; an empty path yields the defaults.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Noise constants (M, sigma_*^2) implied by the configured oracle.
std::pair<double, double> declared_noise(const RunConfig& config);

}  // namespace critpar
