#pragma once

#include <array>
#include <string>
#include <vector>

#include "motsc/orchestrator/scenario.hpp"
#include "motsc/pref/segment.hpp"

namespace motsc::translate {

// Natural-language rendering of a segment plus a structured echo of every
// quantity that appears in the text (tests verify the text round-trips).
struct SegmentDescription {
  std::string text;
  int total_throughput = 0;
  int ns_throughput = 0;
  int ew_throughput = 0;
  double total_co2_g = 0.0;
  double mean_co2_rate = 0.0;
  std::vector<std::array<double, sim::kNumLanes>> densities;  // per step, as printed
  std::vector<std::array<double, sim::kNumLanes>> queues;
};

extern const std::array<const char*, sim::kNumLanes> kLaneNames;
extern const std::array<const char*, sim::kNumPhases> kPhaseNames;

// Rule-based template: names the active phase and min-green status, walks the
// per-lane density/queue entries with semantic lane names, and reports step
// outcomes. Emission totals appear when the scenario tracks emissions;
// per-direction totals appear when it tracks directional throughput.
SegmentDescription describe_segment(const pref::SegmentData& segment,
                                    const orchestrator::ScenarioSpec& scenario);

}  // namespace motsc::translate
