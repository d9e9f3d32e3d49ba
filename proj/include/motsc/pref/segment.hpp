#pragma once

#include <cstdint>
#include <vector>

#include "motsc/agent/replay_buffer.hpp"
#include "motsc/sim/types.hpp"

namespace motsc::pref {

// A length-H run of consecutive transitions copied out of ℬ. Values are
// materialized (not views) so stored preferences stay valid independently of
// later buffer growth and survive serialization.
struct SegmentData {
  uint64_t start = 0;  // index of the first transition in ℬ
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
  std::vector<std::vector<double>> next_obs;
  std::vector<sim::StepMetrics> metrics;

  int length() const { return static_cast<int>(actions.size()); }
  bool operator==(const SegmentData& other) const;
};

SegmentData extract_segment(const agent::ReplayBuffer& buffer, size_t start, int h);

// Starts i such that [i, i+H) fits in the buffer and no episode terminates
// strictly inside the segment (a done at the final transition is fine).
std::vector<size_t> eligible_segment_starts(const agent::ReplayBuffer& buffer, int h);

}  // namespace motsc::pref
