#include "critpar/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace critpar {

namespace {

constexpr double kDivergenceScale = 1e6;

void require_kind(const ScheduleSpec& spec, ScheduleKind kind) {
  if (spec.kind != kind) {
    throw InputError(std::string("schedule kind mismatch: expected ") +
                     std::string(to_string(kind)) + ", got " + std::string(to_string(spec.kind)));
  }
}

void check_divergence(SimState& state) {
  const double norm2 = squared_norm(state.x);
  const double d = static_cast<double>(state.x.size());
  // (1/d)|x| > 1e6, or anything non-finite (NaN fails the comparison).
  if (!(std::sqrt(norm2) / d <= kDivergenceScale)) state.diverged = true;
}

void log_gradient(SimState& state, std::uint64_t index, const GradientSample& g) {
  if (state.recorder) state.recorder->gradients.push_back({index, g});
}

void log_event(SimState& state, std::uint64_t gradient, std::uint64_t apply_step,
               std::vector<std::uint32_t> coords) {
  if (!state.recorder) return;
  Recorder& rec = *state.recorder;
  rec.max_staleness = std::max<std::size_t>(rec.max_staleness, apply_step - gradient + 1);
  rec.trace.events.push_back({gradient, apply_step, std::move(coords)});
}

// Folds the oldest fully applied gradients into the recorder base once the
// log holds twice its capacity.
void compact_recorder(SimState& state, double gamma) {
  if (!state.recorder || state.recorder->capacity == 0) return;
  Recorder& rec = *state.recorder;
  if (rec.gradients.size() <= 2 * rec.capacity) return;

  std::size_t drop_grads = 0;
  std::size_t drop_events = 0;
  while (rec.gradients.size() - drop_grads > rec.capacity) {
    const LoggedGradient& lg = rec.gradients[drop_grads];
    std::size_t e = drop_events;
    bool applied = true;
    while (e < rec.trace.events.size() && rec.trace.events[e].gradient == lg.index) {
      if (rec.trace.events[e].apply_step >= state.step) applied = false;
      ++e;
    }
    if (!applied) break;
    for (std::size_t i = drop_events; i < e; ++i) {
      for (std::uint32_t v : rec.trace.events[i].coords) rec.base[v] -= gamma * lg.sample.values[v];
    }
    drop_events = e;
    ++drop_grads;
  }
  rec.gradients.erase(rec.gradients.begin(), rec.gradients.begin() + static_cast<long>(drop_grads));
  rec.trace.events.erase(rec.trace.events.begin(),
                         rec.trace.events.begin() + static_cast<long>(drop_events));
}

void apply_due_writes(SimState& state) {
  auto& bucket = state.pending[state.step % state.pending.size()];
  for (const PendingWrite& w : bucket) state.x[w.coord] -= w.value;
  state.pending_writes -= bucket.size();
  bucket.clear();
}

// Shared body of the two delay schedulers; `draw_delay` returns delta in {1..tau}.
template <typename DelayFn>
void delayed_step(SimState& state, const ScheduleSpec& spec, const Oracle& oracle,
                  SimStreams& streams, DelayFn&& draw_delay) {
  const double gamma = spec.effective_lr;
  const std::size_t tau = spec.parallelism;
  const std::uint64_t t = state.step;
  GradientSample& g = state.scratch;
  oracle.sample(state.x, streams.oracle, g);

  for (std::uint32_t v : g.support) state.x_ghost[v] -= gamma * g.values[v];

  if (state.recorder) {
    // Group coordinates by their apply step so each event is one (k, t) pair.
    std::vector<std::vector<std::uint32_t>> by_delay(tau);
    for (std::uint32_t v : g.support) {
      const std::size_t delta = draw_delay();
      by_delay[delta - 1].push_back(v);
      state.pending[(t + delta - 1) % tau].push_back({v, gamma * g.values[v]});
    }
    for (std::size_t delta = 1; delta <= tau; ++delta) {
      if (!by_delay[delta - 1].empty()) log_event(state, t, t + delta - 1, std::move(by_delay[delta - 1]));
    }
    log_gradient(state, t, g);
  } else {
    for (std::uint32_t v : g.support) {
      const std::size_t delta = draw_delay();
      state.pending[(t + delta - 1) % tau].push_back({v, gamma * g.values[v]});
    }
  }
  state.pending_writes += g.support.size();

  apply_due_writes(state);
  ++state.step;
  ++state.grad_evals;
  ++state.model_updates;
  compact_recorder(state, gamma);
  check_divergence(state);
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::MiniBatch: return "minibatch";
    case ScheduleKind::ExactDelay: return "exact-delay";
    case ScheduleKind::RandomCoordinateDelay: return "random-delay";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "minibatch") return ScheduleKind::MiniBatch;
  if (name == "exact-delay") return ScheduleKind::ExactDelay;
  if (name == "random-delay") return ScheduleKind::RandomCoordinateDelay;
  throw InputError("unknown schedule kind '" + std::string(name) +
                   "' (expected minibatch, exact-delay or random-delay)");
}

void ScheduleSpec::validate() const {
  if (parallelism < 1) throw InputError("schedule.parallelism must be >= 1");
  if (!(effective_lr > 0.0) || !std::isfinite(effective_lr)) {
    throw InputError("schedule stepsize must be positive and finite");
  }
}

SimState make_state(Vector x0, const ScheduleSpec& spec, bool verification,
                    std::size_t log_capacity) {
  spec.validate();
  SimState state;
  state.x_ghost = x0;
  if (spec.kind != ScheduleKind::MiniBatch) state.pending.resize(spec.parallelism);
  if (verification) {
    state.recorder.emplace();
    state.recorder->base = x0;
    state.recorder->capacity = log_capacity;
  }
  state.x = std::move(x0);
  state.batch_sum.resize(state.x.size());
  return state;
}

void minibatch_update(SimState& state, const ScheduleSpec& spec, const Oracle& oracle,
                      SimStreams& streams) {
  require_kind(spec, ScheduleKind::MiniBatch);
  const double gamma = spec.effective_lr;
  const std::size_t b = spec.parallelism;
  const std::uint64_t t = state.step;
  std::fill(state.batch_sum.begin(), state.batch_sum.end(), 0.0);
  GradientSample& g = state.scratch;
  for (std::size_t i = 0; i < b; ++i) {
    oracle.sample(state.x, streams.oracle, g);
    for (std::uint32_t v : g.support) {
      state.batch_sum[v] += g.values[v];
      state.x_ghost[v] -= gamma * g.values[v];
    }
    if (state.recorder) {
      if (!g.support.empty()) log_event(state, t + i, t + b - 1, g.support);
      log_gradient(state, t + i, g);
    }
  }
  // gamma_mb / b * sum g  ==  gamma * sum g
  for (std::size_t v = 0; v < state.x.size(); ++v) state.x[v] -= gamma * state.batch_sum[v];
  state.step += b;
  state.grad_evals += b;
  ++state.model_updates;
  compact_recorder(state, gamma);
  check_divergence(state);
}

void exact_delay_update(SimState& state, const ScheduleSpec& spec, const Oracle& oracle,
                        SimStreams& streams) {
  require_kind(spec, ScheduleKind::ExactDelay);
  const std::size_t tau = spec.parallelism;
  delayed_step(state, spec, oracle, streams, [tau] { return tau; });
}

void random_coordinate_delay_update(SimState& state, const ScheduleSpec& spec,
                                    const Oracle& oracle, SimStreams& streams) {
  require_kind(spec, ScheduleKind::RandomCoordinateDelay);
  const std::size_t tau = spec.parallelism;
  delayed_step(state, spec, oracle, streams,
               [tau, &streams] { return 1 + streams.delays.uniform_index(tau); });
}

void advance(SimState& state, const ScheduleSpec& spec, const Oracle& oracle, SimStreams& streams) {
  switch (spec.kind) {
    case ScheduleKind::MiniBatch: minibatch_update(state, spec, oracle, streams); return;
    case ScheduleKind::ExactDelay: exact_delay_update(state, spec, oracle, streams); return;
    case ScheduleKind::RandomCoordinateDelay:
      random_coordinate_delay_update(state, spec, oracle, streams);
      return;
  }
}

void drain_pending(SimState& state, const ScheduleSpec& spec) {
  if (state.pending.empty()) return;
  for (std::size_t i = 1; i < spec.parallelism; ++i) {
    apply_due_writes(state);
    ++state.step;
  }
}

std::size_t degree_of_parallelism(const WriteTrace& trace) {
  std::size_t tau = 0;
  for (const WriteEvent& e : trace.events) {
    tau = std::max<std::size_t>(tau, e.apply_step - e.gradient + 1);
  }
  return tau;
}

Vector reconstruct_iterate(const WriteTrace& trace, std::span<const LoggedGradient> gradients,
                           std::span<const double> x0, double gamma, std::uint64_t step) {
  Vector x(x0.begin(), x0.end());
  if (trace.events.empty()) return x;
  if (gradients.empty()) throw InputError("trace refers to gradients but the log is empty");

  const std::uint64_t first = gradients.front().index;
  std::size_t referenced = 0;
  std::uint64_t last_seen = 0;
  bool any = false;
  for (const WriteEvent& e : trace.events) {
    if (e.gradient < first || e.gradient - first >= gradients.size() ||
        gradients[e.gradient - first].index != e.gradient) {
      throw InputError("trace event refers to gradient " + std::to_string(e.gradient) +
                       " missing from the log");
    }
    if (!any || e.gradient != last_seen) {
      ++referenced;
      last_seen = e.gradient;
      any = true;
    }
    if (e.apply_step >= step) continue;
    const Vector& g = gradients[e.gradient - first].sample.values;
    if (g.size() != x.size()) throw InputError("logged gradient has the wrong dimension");
    for (std::uint32_t v : e.coords) x[v] -= gamma * g[v];
  }
  const auto nonempty = std::count_if(gradients.begin(), gradients.end(), [](const LoggedGradient& lg) {
    return !lg.sample.support.empty();
  });
  if (referenced != static_cast<std::size_t>(nonempty)) {
    throw InputError("gradient log length does not match the trace");
  }
  return x;
}

Vector reconstruct_iterate(const SimState& state, double gamma) {
  if (!state.recorder) throw InputError("state was not created in verification mode");
  const Recorder& rec = *state.recorder;
  return reconstruct_iterate(rec.trace, rec.gradients, rec.base, gamma, state.step);
}

double ghost_deviation(const SimState& state) { return squared_distance(state.x, state.x_ghost); }

}  // namespace critpar
