#include "motsc/annotate/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace motsc::annotate {

OracleAnnotator::OracleAnnotator(orchestrator::ScenarioSpec scenario)
    : scenario_(std::move(scenario)) {
  scenario_.oracle.validate();
}

OracleAnnotator::MetricTotals OracleAnnotator::totals(const pref::SegmentData& segment) {
  MetricTotals t;
  for (const auto& m : segment.metrics) {
    t.throughput += m.throughput;
    t.co2_rate += m.co2_rate;
    t.ns += m.ns_throughput;
    t.ew += m.ew_throughput;
  }
  return t;
}

std::vector<AnnotationResult> OracleAnnotator::annotate_batch(
    const std::vector<SegmentPairQuery>& queries) {
  const size_t n = queries.size();
  std::vector<AnnotationResult> results(n);
  if (n == 0) return results;

  // Per-segment metric totals over both sides of every pair.
  std::vector<MetricTotals> m(2 * n);
  for (size_t i = 0; i < n; ++i) {
    m[2 * i] = totals(queries[i].first);
    m[2 * i + 1] = totals(queries[i].second);
  }

  // Optional z-scoring puts metrics with different units on one scale.
  if (scenario_.oracle.zscore_metrics) {
    auto zscore = [&](double MetricTotals::* field) {
      double mean = 0.0;
      for (const auto& t : m) mean += t.*field;
      mean /= static_cast<double>(m.size());
      double var = 0.0;
      for (const auto& t : m) var += (t.*field - mean) * (t.*field - mean);
      const double stdev = std::sqrt(var / static_cast<double>(m.size()));
      for (auto& t : m) t.*field = stdev < 1e-12 ? 0.0 : (t.*field - mean) / stdev;
    };
    zscore(&MetricTotals::throughput);
    zscore(&MetricTotals::co2_rate);
    zscore(&MetricTotals::ns);
    zscore(&MetricTotals::ew);
  }

  const auto& w = scenario_.oracle;
  std::vector<double> g(2 * n);
  for (size_t i = 0; i < 2 * n; ++i)
    g[i] = w.w_throughput * m[i].throughput + w.w_co2_rate * m[i].co2_rate +
           w.w_ns * m[i].ns + w.w_ew * m[i].ew;

  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= static_cast<double>(g.size());
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  const double eps = w.tie_epsilon_frac * std::sqrt(var / static_cast<double>(g.size()));

  for (size_t i = 0; i < n; ++i) {
    const double g1 = g[2 * i], g2 = g[2 * i + 1];
    auto& r = results[i];
    if (std::fabs(g1 - g2) <= eps) {
      r.label = 0;
    } else {
      r.label = g1 > g2 ? 1 : 2;
    }
    char trace[96];
    std::snprintf(trace, sizeof(trace), "g1=%.6f g2=%.6f eps=%.6f", g1, g2, eps);
    r.response = trace;
  }
  return results;
}

FilterStats filter_and_store(const std::vector<SegmentPairQuery>& queries,
                             const std::vector<AnnotationResult>& results,
                             pref::PreferenceBuffer& out) {
  if (queries.size() != results.size())
    throw contract_error("annotate: queries/results size mismatch");
  FilterStats stats;
  stats.total = queries.size();
  for (size_t i = 0; i < queries.size(); ++i) {
    const auto& r = results[i];
    if (r.label == 0) {
      (r.error ? stats.errors : stats.ties)++;
      continue;
    }
    pref::PreferencePair p;
    p.first = queries[i].first;
    p.second = queries[i].second;
    p.label = r.label;
    p.annotation_error = false;
    out.add(std::move(p));
    ++stats.stored;
  }
  return stats;
}

}  // namespace motsc::annotate
