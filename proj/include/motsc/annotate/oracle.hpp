#pragma once

#include "motsc/annotate/annotator.hpp"
#include "motsc/orchestrator/scenario.hpp"

namespace motsc::annotate {

// Deterministic scripted teacher: scores each segment with the scenario's
// weighted metric sum g(σ) and prefers the higher score. Metrics are
// optionally z-scored across all segments of the batch first, and scores
// within ε = tie_epsilon_frac · std(g) of each other are ties. No network,
// no randomness; CI and the fast profile run on this.
class OracleAnnotator : public Annotator {
 public:
  explicit OracleAnnotator(orchestrator::ScenarioSpec scenario);

  std::vector<AnnotationResult> annotate_batch(
      const std::vector<SegmentPairQuery>& queries) override;
  std::string name() const override { return "oracle"; }
  bool deterministic() const override { return true; }

  // Raw (un-z-scored) per-segment metric totals used by the score.
  struct MetricTotals {
    double throughput = 0.0;
    double co2_rate = 0.0;
    double ns = 0.0;
    double ew = 0.0;
  };
  static MetricTotals totals(const pref::SegmentData& segment);

 private:
  orchestrator::ScenarioSpec scenario_;
};

}  // namespace motsc::annotate
