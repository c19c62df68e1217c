#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "critpar/common.hpp"
#include "critpar/oracles.hpp"
#include "critpar/rng.hpp"

namespace critpar {

enum class ScheduleKind { MiniBatch, ExactDelay, RandomCoordinateDelay };

std::string_view to_string(ScheduleKind kind);
/// Accepts "minibatch", "exact-delay", "random-delay".
ScheduleKind parse_schedule_kind(std::string_view name);

/// `parallelism` is the batch size b for MiniBatch and the delay bound tau
/// otherwise. `effective_lr` is the per-gradient stepsize gamma; the
/// algorithm-level rate (gamma_mb, gamma_d, gamma_HW) is parallelism * gamma.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::MiniBatch;
  std::size_t parallelism = 1;
  double effective_lr = 0.1;

  double algorithm_lr() const { return effective_lr * static_cast<double>(parallelism); }
  void validate() const;
};

/// Coordinates of gradient `gradient` written during the transition from
/// iterate `apply_step` to `apply_step + 1`. In the x_t = x_0 - gamma sum J g
/// form, (J_k^t)_vv = 1 iff an event for k covering v has apply_step < t.
struct WriteEvent {
  std::uint64_t gradient;
  std::uint64_t apply_step;
  std::vector<std::uint32_t> coords;
};

struct WriteTrace {
  std::vector<WriteEvent> events;
};

struct LoggedGradient {
  std::uint64_t index;
  GradientSample sample;
};

/// Verification-mode record of a run: write trace plus the gradients it
/// refers to. With a nonzero capacity, fully applied old gradients are folded
/// into `base` so memory stays bounded.
struct Recorder {
  WriteTrace trace;
  std::vector<LoggedGradient> gradients;
  Vector base;  ///< x_0 minus every folded contribution
  std::size_t capacity = 0;  ///< 0 keeps everything
  std::size_t max_staleness = 0;  ///< running degree of parallelism, survives folding
};

struct PendingWrite {
  std::uint32_t coord;
  double value;  ///< already multiplied by the effective stepsize
};

/// Sequential state machine for one simulated run.
struct SimState {
  Vector x;        ///< shared iterate, committed writes only
  Vector x_ghost;  ///< every gradient applied immediately
  std::vector<std::vector<PendingWrite>> pending;  ///< ring indexed by apply_step mod tau
  std::size_t pending_writes = 0;
  std::uint64_t step = 0;  ///< virtual iteration counter t
  std::uint64_t grad_evals = 0;
  std::uint64_t model_updates = 0;
  bool diverged = false;
  std::optional<Recorder> recorder;

  GradientSample scratch;
  Vector batch_sum;
};

/// Oracle noise and coordinate delays use separate streams, so schedulers
/// that differ only in their delay draws see identical gradient noise.
struct SimStreams {
  RandomStream oracle;
  RandomStream delays;

  static SimStreams from_seed(std::uint64_t seed) {
    return {RandomStream(seed, 0), RandomStream(seed, 1)};
  }
};

/// `log_capacity` only matters when `verification` is set.
SimState make_state(Vector x0, const ScheduleSpec& spec, bool verification = false,
                    std::size_t log_capacity = 0);

/// b samples at the current iterate, averaged and applied as one model update;
/// the step counter advances by b.
void minibatch_update(SimState& state, const ScheduleSpec& spec, const Oracle& oracle,
                      SimStreams& streams);
/// Gradient sampled at x_t lands in x_{t+tau}; x_1..x_{tau-1} equal x_0.
void exact_delay_update(SimState& state, const ScheduleSpec& spec, const Oracle& oracle,
                        SimStreams& streams);
/// Each support coordinate of g_t lands in x_{t+delta}, delta uniform on {1..tau}.
void random_coordinate_delay_update(SimState& state, const ScheduleSpec& spec,
                                    const Oracle& oracle, SimStreams& streams);
/// Dispatches on spec.kind; one model update.
void advance(SimState& state, const ScheduleSpec& spec, const Oracle& oracle, SimStreams& streams);

/// Applies every pending write in due order without sampling new gradients.
/// Only used by conservation checks; the stopping rule never sees it.
void drain_pending(SimState& state, const ScheduleSpec& spec);

/// max over events of (apply_step - gradient) + 1; 0 for an empty trace.
std::size_t degree_of_parallelism(const WriteTrace& trace);

/// Rebuilds iterate x_step = x0 - gamma * sum_k J_k^step g_k from the trace.
Vector reconstruct_iterate(const WriteTrace& trace, std::span<const LoggedGradient> gradients,
                           std::span<const double> x0, double gamma, std::uint64_t step);
/// Reconstruction of the live iterate from the state's own recorder.
Vector reconstruct_iterate(const SimState& state, double gamma);

/// |x_t - ghost_t|^2 for the current step.
double ghost_deviation(const SimState& state);

}  // namespace critpar
