#include "motsc/pref/segment.hpp"

namespace motsc::pref {

bool SegmentData::operator==(const SegmentData& other) const {
  auto metrics_eq = [](const sim::StepMetrics& a, const sim::StepMetrics& b) {
    return a.throughput == b.throughput && a.co2_g == b.co2_g && a.co2_rate == b.co2_rate &&
           a.ns_throughput == b.ns_throughput && a.ew_throughput == b.ew_throughput &&
           a.total_queue == b.total_queue && a.sim_time == b.sim_time;
  };
  if (start != other.start || obs != other.obs || actions != other.actions ||
      next_obs != other.next_obs || metrics.size() != other.metrics.size())
    return false;
  for (size_t i = 0; i < metrics.size(); ++i) {
    if (!metrics_eq(metrics[i], other.metrics[i])) return false;
  }
  return true;
}

SegmentData extract_segment(const agent::ReplayBuffer& buffer, size_t start, int h) {
  if (h < 1) throw contract_error("segment: length must be >= 1");
  if (start + static_cast<size_t>(h) > buffer.size())
    throw contract_error("segment: range exceeds buffer");
  SegmentData seg;
  seg.start = start;
  for (int t = 0; t < h; ++t) {
    const size_t i = start + static_cast<size_t>(t);
    const auto o = buffer.obs_at(i);
    const auto n = buffer.next_obs_at(i);
    seg.obs.emplace_back(o.begin(), o.end());
    seg.actions.push_back(buffer.action_at(i));
    seg.next_obs.emplace_back(n.begin(), n.end());
    seg.metrics.push_back(buffer.metrics_at(i));
  }
  return seg;
}

std::vector<size_t> eligible_segment_starts(const agent::ReplayBuffer& buffer, int h) {
  if (h < 1) throw contract_error("segment: length must be >= 1");
  std::vector<size_t> out;
  if (buffer.size() < static_cast<size_t>(h)) return out;
  for (size_t i = 0; i + static_cast<size_t>(h) <= buffer.size(); ++i) {
    bool ok = true;
    for (int t = 0; t + 1 < h; ++t) {
      if (buffer.done_at(i + static_cast<size_t>(t))) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(i);
  }
  return out;
}

}  // namespace motsc::pref
