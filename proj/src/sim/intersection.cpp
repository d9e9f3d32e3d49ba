#include "motsc/sim/intersection.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

namespace motsc::sim {

void SimConfig::validate() const {
  for (double r : arrival_rates_vph) {
    if (!(r >= 0.0) || !std::isfinite(r))
      throw config_error("sim: arrival rates must be finite and non-negative");
  }
  if (!(episode_seconds > 0.0)) throw config_error("sim: episode_seconds must be positive");
  if (step_seconds <= 0) throw config_error("sim: step_seconds must be positive");
  if (yellow_seconds <= 0 || yellow_seconds >= step_seconds)
    throw config_error("sim: yellow_seconds must be in (0, step_seconds)");
  if (min_green_seconds <= 0) throw config_error("sim: min_green_seconds must be positive");
  if (!(saturation_headway_s > 0.0))
    throw config_error("sim: saturation_headway_s must be positive");
  if (travel_time_s <= 0) throw config_error("sim: travel_time_s must be positive");
  if (lane_capacity <= 0) throw config_error("sim: lane_capacity must be positive");
  if (!(idle_gps > 0.0) || !(discharge_gps > 0.0) || !(cruise_gps > 0.0))
    throw config_error("sim: emission rates must be positive");
  const double steps = episode_seconds / step_seconds;
  if (std::fabs(steps - std::round(steps)) > 1e-9)
    throw config_error("sim: step_seconds must divide episode_seconds");
}

Intersection::Intersection(const SimConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  reset();
}

Observation Intersection::reset() { return reset(cfg_.seed); }

Observation Intersection::reset(uint64_t seed) {
  rng_ = core::Rng(seed);
  phase_ = 0;
  green_ticks_ = 0;
  time_ = 0.0;
  done_ = false;
  for (auto& p : pipeline_) p.assign(static_cast<size_t>(cfg_.travel_time_s), 0);
  queue_.fill(0);
  credit_.fill(0.0);
  held_.fill(0);
  counters_ = ConservationCounters{};
  return observe();
}

long long Intersection::on_network() const {
  long long n = 0;
  for (int lane = 0; lane < kNumLanes; ++lane) {
    n += queue_[lane];
    n += std::accumulate(pipeline_[lane].begin(), pipeline_[lane].end(), 0LL);
  }
  return n;
}

void Intersection::micro_tick(int serving_phase, StepMetrics& metrics) {
  for (int lane = 0; lane < kNumLanes; ++lane) {
    // Admission: vehicles held at the boundary re-try before new arrivals.
    long long on_lane = queue_[lane] +
                        std::accumulate(pipeline_[lane].begin(), pipeline_[lane].end(), 0LL);
    long long room = cfg_.lane_capacity - on_lane;
    int admitted = 0;
    if (held_[lane] > 0 && room > 0) {
      const long long take = std::min(held_[lane], room);
      held_[lane] -= take;
      counters_.boundary_held -= take;
      admitted += static_cast<int>(take);
      room -= take;
    }
    const int arrivals = rng_.poisson(cfg_.arrival_rates_vph[lane] / 3600.0);
    counters_.generated += arrivals;
    const int enter = static_cast<int>(std::min<long long>(arrivals, std::max(room, 0LL)));
    admitted += enter;
    const int spilled = arrivals - enter;
    held_[lane] += spilled;
    counters_.boundary_held += spilled;

    // Travel: the front pipeline slot joins the queue, new admits enter at
    // the back, so each vehicle cruises exactly travel_time_s ticks.
    queue_[lane] += pipeline_[lane].front();
    pipeline_[lane].pop_front();
    pipeline_[lane].push_back(admitted);

    // Discharge under green (yellow passes serving_phase = -1).
    int released = 0;
    if (serving_phase >= 0 && lane_phase(lane) == serving_phase && queue_[lane] > 0) {
      credit_[lane] += 1.0 / cfg_.saturation_headway_s;
      released = static_cast<int>(std::min<double>(std::floor(credit_[lane]),
                                                   static_cast<double>(queue_[lane])));
      queue_[lane] -= released;
      credit_[lane] -= released;
      if (queue_[lane] == 0) credit_[lane] = 0.0;
    } else {
      credit_[lane] = 0.0;
    }
    counters_.exited += released;
    metrics.throughput += released;
    if (lane_is_ns(lane)) {
      metrics.ns_throughput += released;
    } else {
      metrics.ew_throughput += released;
    }

    // Emissions for this vehicle-second, by state after movement.
    const long long cruising =
        std::accumulate(pipeline_[lane].begin(), pipeline_[lane].end(), 0LL);
    metrics.co2_g += released * cfg_.discharge_gps + queue_[lane] * cfg_.idle_gps +
                     cruising * cfg_.cruise_gps;
    counters_.idle_veh_s += queue_[lane];
    counters_.discharge_veh_s += released;
    counters_.cruise_veh_s += static_cast<double>(cruising);
  }
}

Intersection::StepResult Intersection::step(int action) {
  if (done_) throw contract_error("sim: step() called on a finished episode");
  if (action < 0 || action >= kNumPhases)
    throw contract_error("sim: action out of range");

  const bool switching = action != phase_ && min_green_elapsed();
  StepMetrics metrics;
  for (int tick = 0; tick < cfg_.step_seconds; ++tick) {
    if (switching && tick < cfg_.yellow_seconds) {
      micro_tick(-1, metrics);  // yellow: nobody discharges
      if (tick + 1 == cfg_.yellow_seconds) {
        phase_ = action;
        green_ticks_ = 0;
      }
    } else {
      micro_tick(phase_, metrics);
      ++green_ticks_;
    }
  }
  time_ += cfg_.step_seconds;
  done_ = time_ >= cfg_.episode_seconds - 1e-9;

  metrics.co2_rate = metrics.co2_g / cfg_.step_seconds;
  metrics.total_queue = std::accumulate(queue_.begin(), queue_.end(), 0);
  metrics.sim_time = time_;

  if (counters_.generated != counters_.exited + on_network() + counters_.boundary_held)
    throw contract_error("sim: vehicle conservation violated");

  return {observe(), metrics, done_};
}

Observation Intersection::observe() const {
  Observation obs{};
  obs[phase_] = 1.0;
  obs[4] = min_green_elapsed() ? 1.0 : 0.0;
  for (int lane = 0; lane < kNumLanes; ++lane) {
    const long long cruising =
        std::accumulate(pipeline_[lane].begin(), pipeline_[lane].end(), 0LL);
    obs[5 + lane] =
        static_cast<double>(queue_[lane] + cruising) / cfg_.lane_capacity;
    obs[13 + lane] = static_cast<double>(queue_[lane]) / cfg_.lane_capacity;
  }
  return obs;
}

void Intersection::inject_queued(int lane, int n) {
  if (lane < 0 || lane >= kNumLanes || n < 0)
    throw contract_error("sim: bad inject_queued arguments");
  queue_[lane] += n;
  counters_.generated += n;
}

void Intersection::save_state(std::ostream& os) const {
  // Text archive; 17 significant digits round-trip doubles exactly.
  const auto old_precision = os.precision(17);
  os << phase_ << ' ' << green_ticks_ << ' ' << time_ << ' ' << done_ << '\n';
  for (int lane = 0; lane < kNumLanes; ++lane) {
    os << queue_[lane] << ' ' << credit_[lane] << ' ' << held_[lane];
    for (int v : pipeline_[lane]) os << ' ' << v;
    os << '\n';
  }
  os << counters_.generated << ' ' << counters_.exited << ' ' << counters_.boundary_held
     << ' ' << counters_.idle_veh_s << ' ' << counters_.discharge_veh_s << ' '
     << counters_.cruise_veh_s << '\n';
  rng_.save(os);
  os << '\n';
  os.precision(old_precision);
}

void Intersection::load_state(std::istream& is) {
  is >> phase_ >> green_ticks_ >> time_ >> done_;
  for (int lane = 0; lane < kNumLanes; ++lane) {
    is >> queue_[lane] >> credit_[lane] >> held_[lane];
    for (auto& v : pipeline_[lane]) is >> v;
  }
  is >> counters_.generated >> counters_.exited >> counters_.boundary_held >>
      counters_.idle_veh_s >> counters_.discharge_veh_s >> counters_.cruise_veh_s;
  rng_.load(is);
  is.get();  // newline terminating the rng line, so binary data may follow
  if (!is) throw config_error("sim: truncated state");
}

bool Intersection::state_equals(const Intersection& other) const {
  return phase_ == other.phase_ && green_ticks_ == other.green_ticks_ &&
         time_ == other.time_ && done_ == other.done_ && queue_ == other.queue_ &&
         credit_ == other.credit_ && held_ == other.held_ && pipeline_ == other.pipeline_ &&
         rng_ == other.rng_;
}

WindowMetrics metrics_window(std::span<const StepMetrics> history, size_t window) {
  if (history.empty() || window == 0)
    throw contract_error("metrics_window: empty history or window");
  if (window > history.size())
    throw contract_error("metrics_window: window exceeds history");
  WindowMetrics out;
  double thr = 0.0, co2 = 0.0, queue = 0.0;
  long long ns = 0, ew = 0;
  for (size_t i = history.size() - window; i < history.size(); ++i) {
    thr += history[i].throughput;
    co2 += history[i].co2_rate;
    queue += history[i].total_queue;
    ns += history[i].ns_throughput;
    ew += history[i].ew_throughput;
  }
  const double n = static_cast<double>(window);
  out.mean_throughput = thr / n;
  out.mean_co2_rate = co2 / n;
  out.mean_queue = queue / n;
  if (ns + ew > 0) {
    out.ns_share = static_cast<double>(ns) / static_cast<double>(ns + ew);
    out.ew_share = static_cast<double>(ew) / static_cast<double>(ns + ew);
  }
  return out;
}

}  // namespace motsc::sim
