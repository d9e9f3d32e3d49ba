#include "motsc/annotate/log.hpp"

#include <fstream>

#include <json.hpp>

#include "motsc/core/error.hpp"

namespace motsc::annotate {

using nlohmann::json;

AnnotationLog::AnnotationLog(std::string path) : path_(std::move(path)) {
  std::ifstream is(path_);
  if (!is) return;  // fresh run, file appears on first append
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      AnnotationRecord rec;
      rec.session = j.at("session").get<int>();
      rec.index = j.at("i").get<int>();
      rec.start1 = j.at("s1").get<int64_t>();
      rec.start2 = j.at("s2").get<int64_t>();
      rec.label = j.at("label").get<int>();
      rec.error = j.at("error").get<bool>();
      rec.response = j.at("response").get<std::string>();
      records_.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw config_error("annotation log " + path_ + " line " + std::to_string(lineno) +
                         ": " + e.what());
    }
  }
}

void AnnotationLog::append(const AnnotationRecord& rec) {
  if (rec.label < 0 || rec.label > 2)
    throw contract_error("annotation log: label out of range");
  records_.push_back(rec);
  if (path_.empty()) return;
  json j{{"session", rec.session}, {"i", rec.index},       {"s1", rec.start1},
         {"s2", rec.start2},       {"label", rec.label},   {"error", rec.error},
         {"response", rec.response}};
  std::ofstream os(path_, std::ios::app);
  if (!os) throw config_error("annotation log: cannot open " + path_ + " for append");
  os << j.dump() << '\n';
  os.flush();
  if (!os) throw config_error("annotation log: write to " + path_ + " failed");
}

std::vector<AnnotationRecord> AnnotationLog::session_records(int session) const {
  std::vector<AnnotationRecord> out;
  for (const auto& rec : records_)
    if (rec.session == session) out.push_back(rec);
  return out;
}

}  // namespace motsc::annotate
