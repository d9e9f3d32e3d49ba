#include "motsc/pref/preference.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motsc/core/error.hpp"

namespace motsc::pref {

using nlohmann::json;

namespace {

json metrics_to_json(const sim::StepMetrics& m) {
  return json{{"throughput", m.throughput}, {"co2_g", m.co2_g},
              {"co2_rate", m.co2_rate},     {"ns", m.ns_throughput},
              {"ew", m.ew_throughput},      {"queue", m.total_queue},
              {"sim_time", m.sim_time}};
}

sim::StepMetrics metrics_from_json(const json& j) {
  sim::StepMetrics m;
  m.throughput = j.at("throughput").get<int>();
  m.co2_g = j.at("co2_g").get<double>();
  m.co2_rate = j.at("co2_rate").get<double>();
  m.ns_throughput = j.at("ns").get<int>();
  m.ew_throughput = j.at("ew").get<int>();
  m.total_queue = j.at("queue").get<int>();
  m.sim_time = j.at("sim_time").get<double>();
  return m;
}

json segment_to_json(const SegmentData& s) {
  json j;
  j["start"] = s.start;
  j["obs"] = s.obs;
  j["actions"] = s.actions;
  j["next_obs"] = s.next_obs;
  json ms = json::array();
  for (const auto& m : s.metrics) ms.push_back(metrics_to_json(m));
  j["metrics"] = std::move(ms);
  return j;
}

SegmentData segment_from_json(const json& j) {
  SegmentData s;
  s.start = j.at("start").get<uint64_t>();
  s.obs = j.at("obs").get<std::vector<std::vector<double>>>();
  s.actions = j.at("actions").get<std::vector<int>>();
  s.next_obs = j.at("next_obs").get<std::vector<std::vector<double>>>();
  for (const auto& m : j.at("metrics")) s.metrics.push_back(metrics_from_json(m));
  if (s.obs.size() != s.actions.size() || s.next_obs.size() != s.actions.size() ||
      s.metrics.size() != s.actions.size())
    throw config_error("preference: ragged segment record");
  return s;
}

}  // namespace

void PreferenceBuffer::add(PreferencePair pair) {
  if (pair.label < 0 || pair.label > 2)
    throw contract_error("preference: label must be 0, 1 or 2");
  if (pair.first.length() == 0 || pair.first.length() != pair.second.length())
    throw contract_error("preference: segments must be non-empty and equal length");
  pairs_.push_back(std::move(pair));
}

std::string preference_to_json(const PreferencePair& pair) {
  json j;
  j["first"] = segment_to_json(pair.first);
  j["second"] = segment_to_json(pair.second);
  j["label"] = pair.label;
  j["error"] = pair.annotation_error;
  return j.dump();
}

PreferencePair preference_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw config_error(std::string("preference: bad JSONL line: ") + e.what());
  }
  try {
    PreferencePair p;
    p.first = segment_from_json(j.at("first"));
    p.second = segment_from_json(j.at("second"));
    p.label = j.at("label").get<int>();
    p.annotation_error = j.value("error", false);
    return p;
  } catch (const json::exception& e) {
    throw config_error(std::string("preference: missing field: ") + e.what());
  }
}

void PreferenceBuffer::save_jsonl(std::ostream& os) const {
  for (const auto& p : pairs_) os << preference_to_json(p) << '\n';
  if (!os) throw config_error("preference: write failed");
}

void PreferenceBuffer::load_jsonl(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    add(preference_from_json(line));
  }
}

void PreferenceBuffer::save_jsonl_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw config_error("preference: cannot open " + path + " for writing");
  save_jsonl(os);
}

void PreferenceBuffer::load_jsonl_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("preference: cannot open " + path);
  load_jsonl(is);
}

}  // namespace motsc::pref
