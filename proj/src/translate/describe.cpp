#include "motsc/translate/describe.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace motsc::translate {

const std::array<const char*, sim::kNumLanes> kLaneNames = {
    "north left-turn",  "north through/right", "south left-turn", "south through/right",
    "east left-turn",   "east through/right",  "west left-turn",  "west through/right",
};

const std::array<const char*, sim::kNumPhases> kPhaseNames = {
    "north-south left-turn",
    "north-south through/right",
    "east-west left-turn",
    "east-west through/right",
};

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

bool mentions(const std::string& text, const char* needle) {
  return text.find(needle) != std::string::npos;
}

bool tracks_emissions(const orchestrator::ScenarioSpec& sc) {
  if (sc.oracle.w_co2_rate != 0.0) return true;
  for (const auto& obj : sc.objectives)
    if (mentions(obj, "emission") || mentions(obj, "environment")) return true;
  return mentions(sc.user_specification, "emission") ||
         mentions(sc.user_specification, "environment");
}

bool tracks_directions(const orchestrator::ScenarioSpec& sc) {
  if (sc.oracle.w_ns != 0.0 || sc.oracle.w_ew != 0.0) return true;
  for (const auto& obj : sc.objectives)
    if (mentions(obj, "direction")) return true;
  return mentions(sc.user_specification, "direction");
}

int obs_phase(const std::vector<double>& obs) {
  for (int p = 0; p < sim::kNumPhases; ++p)
    if (obs[p] > 0.5) return p;
  throw contract_error("describe_segment: observation has no active phase");
}

void append_lane_block(std::string& out, const char* title, const std::vector<double>& obs,
                       int offset, std::array<double, sim::kNumLanes>& echo) {
  out += title;
  for (int l = 0; l < sim::kNumLanes; ++l) {
    echo[l] = round2(obs[offset + l]);
    out += ' ';
    out += kLaneNames[l];
    out += ' ';
    out += fmt2(echo[l]);
    out += (l + 1 < sim::kNumLanes) ? ',' : '.';
  }
}

}  // namespace

SegmentDescription describe_segment(const pref::SegmentData& segment,
                                    const orchestrator::ScenarioSpec& scenario) {
  if (segment.length() == 0) throw contract_error("describe_segment: empty segment");
  const bool emissions = tracks_emissions(scenario);
  const bool directions = tracks_directions(scenario);
  const size_t H = segment.length();

  SegmentDescription d;
  d.densities.resize(H);
  d.queues.resize(H);
  std::string& out = d.text;

  for (size_t t = 0; t < H; ++t) {
    const auto& obs = segment.obs[t];
    const auto& m = segment.metrics[t];
    if (H > 1) out += "Step " + std::to_string(t + 1) + " of " + std::to_string(H) + ". ";

    const int phase = obs_phase(obs);
    out += "The active green phase is ";
    out += kPhaseNames[phase];
    out += obs[4] > 0.5
               ? ". The minimum green time has elapsed, so a phase switch would take effect"
                 " immediately."
               : ". The minimum green time has not yet elapsed, so a phase switch request"
                 " would be ignored.";

    append_lane_block(out, " Occupancy per lane as a fraction of capacity:", obs, 5,
                      d.densities[t]);
    append_lane_block(out, " Queued vehicles per lane as a fraction of capacity:", obs, 13,
                      d.queues[t]);

    const int action = segment.actions[t];
    if (action == phase) {
      out += " The controller kept the current phase.";
    } else {
      out += " The controller requested a switch to the ";
      out += kPhaseNames[action];
      out += " phase.";
    }

    out += " During this step " + std::to_string(m.throughput) +
           (m.throughput == 1 ? " vehicle" : " vehicles") + " crossed the junction";
    if (directions) {
      out += " (" + std::to_string(m.ns_throughput) + " north-south, " +
             std::to_string(m.ew_throughput) + " east-west)";
    }
    if (emissions) {
      out += " and carbon emissions totalled " + fmt2(round2(m.co2_g)) + " grams (" +
             fmt2(round2(m.co2_rate)) + " g/s)";
    }
    out += ".";

    d.total_throughput += m.throughput;
    d.ns_throughput += m.ns_throughput;
    d.ew_throughput += m.ew_throughput;
    d.total_co2_g += m.co2_g;
    d.mean_co2_rate += m.co2_rate;
    if (t + 1 < H) out += "\n";
  }
  d.mean_co2_rate /= static_cast<double>(H);
  d.total_co2_g = round2(d.total_co2_g);
  d.mean_co2_rate = round2(d.mean_co2_rate);

  if (H > 1) {
    out += "\nOver the whole segment " + std::to_string(d.total_throughput) +
           (d.total_throughput == 1 ? " vehicle" : " vehicles") + " crossed the junction";
    if (directions) {
      out += " (" + std::to_string(d.ns_throughput) + " north-south, " +
             std::to_string(d.ew_throughput) + " east-west)";
    }
    if (emissions) {
      out += " and carbon emissions totalled " + fmt2(d.total_co2_g) + " grams (" +
             fmt2(d.mean_co2_rate) + " g/s on average)";
    }
    out += ".";
  }
  return d;
}

}  // namespace motsc::translate
