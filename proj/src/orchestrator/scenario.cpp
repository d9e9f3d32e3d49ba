#include "motsc/orchestrator/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motsc/core/error.hpp"

namespace motsc::orchestrator {

using nlohmann::json;

void OracleSpec::validate() const {
  if (w_throughput == 0.0 && w_co2_rate == 0.0 && w_ns == 0.0 && w_ew == 0.0)
    throw config_error("scenario: oracle needs at least one nonzero weight");
  if (!(tie_epsilon_frac >= 0.0))
    throw config_error("scenario: oracle tie_epsilon_frac must be >= 0");
}

void RunSchedule::validate() const {
  if (run_steps <= 0) throw config_error("scenario: run_steps must be positive");
  if (feedback_period <= 0 || feedback_period > run_steps)
    throw config_error("scenario: feedback_period must be in [1, run_steps]");
  if (annotation_batch <= 0) throw config_error("scenario: annotation_batch must be positive");
  if (oversample < 1) throw config_error("scenario: oversample must be >= 1");
  if (bootstrap_steps < 0 || bootstrap_steps > run_steps)
    throw config_error("scenario: bootstrap_steps must be in [0, run_steps]");
  if (segment_len < 1) throw config_error("scenario: segment_len must be >= 1");
}

std::vector<long long> RunSchedule::session_steps() const {
  std::vector<long long> out;
  if (run_steps <= bootstrap_steps) return out;
  for (long long s = feedback_period; s <= run_steps; s += feedback_period) {
    if (s >= bootstrap_steps) out.push_back(s);
  }
  return out;
}

void ScenarioSpec::validate() const {
  if (name.empty()) throw config_error("scenario: missing name");
  if (objectives.empty()) throw config_error("scenario: missing objectives");
  if (user_specification.empty()) throw config_error("scenario: missing user_specification");
  sim_config.validate();
  oracle.validate();
  schedule.validate();
}

namespace {

OracleSpec parse_oracle(const json& j) {
  OracleSpec o;
  o.w_throughput = j.value("w_throughput", 0.0);
  o.w_co2_rate = j.value("w_co2_rate", 0.0);
  o.w_ns = j.value("w_ns", 0.0);
  o.w_ew = j.value("w_ew", 0.0);
  o.zscore_metrics = j.value("zscore_metrics", false);
  o.tie_epsilon_frac = j.value("tie_epsilon_frac", 0.02);
  return o;
}

ScenarioSpec parse_json(const json& j, const std::string& variant) {
  ScenarioSpec spec;
  spec.name = j.value("name", "");

  const auto& js = j.at("sim");
  auto& cfg = spec.sim_config;
  const auto rates = js.at("arrival_rates_vph");
  if (!rates.is_array() || rates.size() != sim::kNumLanes)
    throw config_error("scenario: arrival_rates_vph must list 8 lanes");
  for (int i = 0; i < sim::kNumLanes; ++i) cfg.arrival_rates_vph[i] = rates[i].get<double>();
  cfg.episode_seconds = js.value("episode_seconds", cfg.episode_seconds);
  cfg.step_seconds = js.value("step_seconds", cfg.step_seconds);
  cfg.yellow_seconds = js.value("yellow_seconds", cfg.yellow_seconds);
  cfg.min_green_seconds = js.value("min_green_seconds", cfg.min_green_seconds);
  cfg.saturation_headway_s = js.value("saturation_headway_s", cfg.saturation_headway_s);
  cfg.travel_time_s = js.value("travel_time_s", cfg.travel_time_s);
  cfg.lane_capacity = js.value("lane_capacity", cfg.lane_capacity);
  cfg.idle_gps = js.value("idle_gps", cfg.idle_gps);
  cfg.discharge_gps = js.value("discharge_gps", cfg.discharge_gps);
  cfg.cruise_gps = js.value("cruise_gps", cfg.cruise_gps);

  for (const auto& obj : j.at("objectives")) spec.objectives.push_back(obj.get<std::string>());

  if (j.contains("schedule")) {
    const auto& sch = j.at("schedule");
    spec.schedule.run_steps = sch.value("run_steps", spec.schedule.run_steps);
    spec.schedule.feedback_period = sch.value("feedback_period", spec.schedule.feedback_period);
    spec.schedule.annotation_batch =
        sch.value("annotation_batch", spec.schedule.annotation_batch);
    spec.schedule.oversample = sch.value("oversample", spec.schedule.oversample);
    spec.schedule.bootstrap_steps = sch.value("bootstrap_steps", spec.schedule.bootstrap_steps);
    spec.schedule.segment_len = sch.value("segment_len", spec.schedule.segment_len);
  }

  if (j.contains("variants")) {
    const auto& variants = j.at("variants");
    const std::string pick = variant.empty() ? j.value("default_variant", "") : variant;
    if (pick.empty() || !variants.contains(pick)) {
      std::ostringstream msg;
      msg << "scenario: variant required; available:";
      for (const auto& [k, v] : variants.items()) msg << ' ' << k;
      throw config_error(msg.str());
    }
    spec.variant = pick;
    const auto& v = variants.at(pick);
    spec.user_specification = v.at("user_specification").get<std::string>();
    spec.oracle = parse_oracle(v.at("oracle"));
  } else {
    if (!variant.empty())
      throw config_error("scenario: '" + spec.name + "' has no variants");
    spec.user_specification = j.at("user_specification").get<std::string>();
    spec.oracle = parse_oracle(j.at("oracle"));
  }

  spec.validate();
  return spec;
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("scenario: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw config_error("scenario: bad JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& json_text, const std::string& variant) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("scenario: bad JSON: ") + e.what());
  }
  try {
    return parse_json(j, variant);
  } catch (const json::exception& e) {
    throw config_error(std::string("scenario: missing/invalid field: ") + e.what());
  }
}

ScenarioSpec load_scenario_file(const std::string& path, const std::string& variant) {
  try {
    return parse_json(read_json_file(path), variant);
  } catch (const json::exception& e) {
    throw config_error("scenario: missing/invalid field in " + path + ": " + e.what());
  }
}

std::vector<std::string> scenario_variants(const std::string& path) {
  const json j = read_json_file(path);
  std::vector<std::string> out;
  if (j.contains("variants")) {
    for (const auto& [k, v] : j.at("variants").items()) out.push_back(k);
  }
  return out;
}

}  // namespace motsc::orchestrator
