#pragma once

#include <deque>
#include <iosfwd>

#include "motsc/core/rng.hpp"
#include "motsc/sim/types.hpp"

namespace motsc::sim {

// Running totals used by the conservation invariant and by tests that reason
// about vehicle-seconds per state.
struct ConservationCounters {
  long long generated = 0;      // vehicles that arrived at the boundary
  long long exited = 0;         // vehicles that crossed the stop line
  long long boundary_held = 0;  // currently waiting outside a full lane
  double idle_veh_s = 0.0;
  double discharge_veh_s = 0.0;
  double cruise_veh_s = 0.0;
};

// Single four-way intersection: Poisson arrivals per lane, fixed travel time
// to the stop line, queue discharge at saturation headway under the active
// phase, three-state surrogate emissions. Fully deterministic given the seed
// and the action sequence. See docs/simulator.md for the tick-level rules.
class Intersection {
 public:
  explicit Intersection(const SimConfig& cfg);

  Observation reset();  // reseeds from cfg.seed
  Observation reset(uint64_t seed);

  struct StepResult {
    Observation obs;
    StepMetrics metrics;
    bool done = false;
  };

  // Advances step_seconds. If action differs from the active phase and
  // min-green has elapsed, the step opens with yellow_seconds of all-red
  // (no discharge), then the new phase turns green for the remainder. If
  // min-green has not elapsed the action is ignored.
  StepResult step(int action);

  Observation observe() const;
  bool done() const { return done_; }
  double sim_time() const { return time_; }
  int phase() const { return phase_; }
  bool min_green_elapsed() const { return green_ticks_ >= cfg_.min_green_seconds; }
  const SimConfig& config() const { return cfg_; }
  const ConservationCounters& counters() const { return counters_; }

  // Test support: place vehicles directly into a stop-line queue (they count
  // as generated so conservation still holds).
  void inject_queued(int lane, int n);

  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);
  bool state_equals(const Intersection& other) const;

 private:
  void micro_tick(int serving_phase, StepMetrics& metrics);
  long long on_network() const;

  SimConfig cfg_;
  core::Rng rng_;
  int phase_ = 0;
  int green_ticks_ = 0;  // green seconds served by the active phase
  double time_ = 0.0;
  bool done_ = false;
  std::array<std::deque<int>, kNumLanes> pipeline_;  // counts per remaining travel tick
  std::array<int, kNumLanes> queue_{};
  std::array<double, kNumLanes> credit_{};
  std::array<long long, kNumLanes> held_{};
  ConservationCounters counters_;
};

}  // namespace motsc::sim
