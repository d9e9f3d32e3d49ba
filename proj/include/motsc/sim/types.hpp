#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "motsc/core/error.hpp"

namespace motsc::sim {

// Lane layout: two lanes per approach, index = approach*2 + movement.
//   0 N-left   1 N-through/right
//   2 S-left   3 S-through/right
//   4 E-left   5 E-through/right
//   6 W-left   7 W-through/right
inline constexpr int kNumLanes = 8;
inline constexpr int kNumPhases = 4;

// Phase -> served lanes: {NS left, NS through, EW left, EW through}.
inline constexpr std::array<std::array<int, 2>, kNumPhases> kPhaseLanes = {{
    {{0, 2}},
    {{1, 3}},
    {{4, 6}},
    {{5, 7}},
}};

constexpr int lane_phase(int lane) {
  // N/S lanes (0..3): left lanes are 0,2 -> phase 0; through 1,3 -> phase 1.
  // E/W lanes (4..7): left 4,6 -> phase 2; through 5,7 -> phase 3.
  return (lane < 4 ? 0 : 2) + (lane % 2);
}

constexpr bool lane_is_ns(int lane) { return lane < 4; }

struct SimConfig {
  std::array<double, kNumLanes> arrival_rates_vph{};  // vehicles/hour, >= 0
  double episode_seconds = 10000.0;
  int step_seconds = 5;
  int yellow_seconds = 2;
  int min_green_seconds = 10;
  double saturation_headway_s = 2.0;
  int travel_time_s = 20;
  int lane_capacity = 40;
  double idle_gps = 1.5;       // g CO2 per queued vehicle-second
  double discharge_gps = 4.0;  // per discharging vehicle-second
  double cruise_gps = 2.5;     // per approaching vehicle-second
  uint64_t seed = 0;

  void validate() const;
};

// Observation layout: [phase one-hot (4) | min-green flag (1) |
// per-lane density (8) | per-lane queue (8)], all in [0,1].
// The min-green flag is 1 once the active phase has been green for at least
// min_green_seconds, i.e. when a switch request would be honored.
inline constexpr int kObsDim = 21;
using Observation = std::array<double, kObsDim>;

struct StepMetrics {
  int throughput = 0;  // vehicles that crossed the stop line this step
  double co2_g = 0.0;
  double co2_rate = 0.0;  // co2_g / step_seconds
  int ns_throughput = 0;
  int ew_throughput = 0;
  int total_queue = 0;  // queued vehicles at the end of the step
  double sim_time = 0.0;
};

// Means/shares over the trailing `window` entries of a metrics history.
struct WindowMetrics {
  double mean_throughput = 0.0;
  double mean_co2_rate = 0.0;
  double mean_queue = 0.0;
  double ns_share = 0.5;  // fraction of exits that were N/S (0.5 when no exits)
  double ew_share = 0.5;
};

WindowMetrics metrics_window(std::span<const StepMetrics> history, size_t window);

}  // namespace motsc::sim
