#include "motsc/annotate/llm.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "motsc/core/error.hpp"
#include "motsc/translate/describe.hpp"

namespace motsc::annotate {

void LlmConfig::validate() const {
  chat.validate();
  if (prompt_path.empty()) throw config_error("llm: prompt_path must be set");
  if (max_attempts < 1) throw config_error("llm: max_attempts must be >= 1");
  if (parallel_requests < 1) throw config_error("llm: parallel_requests must be >= 1");
}

namespace {

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i];
    if (i + 1 < items.size()) out += '\n';
  }
  return out;
}

}  // namespace

LlmAnnotator::LlmAnnotator(orchestrator::ScenarioSpec scenario, LlmConfig cfg)
    : scenario_(std::move(scenario)), cfg_(std::move(cfg)), client_((cfg_.validate(), cfg_.chat)) {
  std::ifstream is(cfg_.prompt_path);
  if (!is) throw config_error("llm: cannot open prompt template " + cfg_.prompt_path);
  std::string line;
  std::string* target = &system_template_;
  bool saw_split = false;
  while (std::getline(is, line)) {
    if (!saw_split && line == "---") {
      saw_split = true;
      target = &user_template_;
      continue;
    }
    *target += line;
    *target += '\n';
  }
  if (!saw_split) {  // no split marker: the whole file is the user prompt
    user_template_ = std::move(system_template_);
    system_template_.clear();
  }
  for (const char* ph : {"{objectives}", "{user_specification}", "{description_1}",
                         "{description_2}"}) {
    if (user_template_.find(ph) == std::string::npos)
      throw config_error(std::string("llm: prompt template is missing ") + ph);
  }
}

std::vector<ChatMessage> LlmAnnotator::build_messages(const SegmentPairQuery& query) const {
  std::string user = user_template_;
  replace_all(user, "{objectives}", numbered(scenario_.objectives));
  replace_all(user, "{user_specification}", scenario_.user_specification);
  replace_all(user, "{description_1}",
              translate::describe_segment(query.first, scenario_).text);
  replace_all(user, "{description_2}",
              translate::describe_segment(query.second, scenario_).text);

  std::vector<ChatMessage> messages;
  if (!system_template_.empty()) messages.push_back({"system", system_template_});
  messages.push_back({"user", std::move(user)});
  return messages;
}

int LlmAnnotator::parse_label(const std::string& response) {
  // The contract is a final line "LABEL: <digit>"; only that line is read.
  size_t end = response.size();
  while (end > 0 && std::isspace(static_cast<unsigned char>(response[end - 1]))) --end;
  if (end == 0) throw annotation_error("llm: empty response");
  size_t begin = response.rfind('\n', end - 1);
  begin = begin == std::string::npos ? 0 : begin + 1;
  std::string lastline = response.substr(begin, end - begin);

  size_t i = 0;
  while (i < lastline.size() && std::isspace(static_cast<unsigned char>(lastline[i]))) ++i;
  static const std::string kTag = "LABEL:";
  if (lastline.compare(i, kTag.size(), kTag) != 0)
    throw annotation_error("llm: final line is not a LABEL: line: '" + lastline + "'");
  i += kTag.size();
  while (i < lastline.size() && std::isspace(static_cast<unsigned char>(lastline[i]))) ++i;
  if (i >= lastline.size() || lastline[i] < '0' || lastline[i] > '2')
    throw annotation_error("llm: LABEL value is not 0, 1 or 2: '" + lastline + "'");
  const int label = lastline[i] - '0';
  ++i;
  while (i < lastline.size() && std::isspace(static_cast<unsigned char>(lastline[i]))) ++i;
  if (i != lastline.size())
    throw annotation_error("llm: trailing content after LABEL digit: '" + lastline + "'");
  return label;
}

AnnotationResult LlmAnnotator::annotate_one(const SegmentPairQuery& query) const {
  const auto messages = build_messages(query);
  std::string last_note;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    try {
      std::string response = client_.complete(messages);
      const int label = parse_label(response);
      return AnnotationResult{label, false, std::move(response)};
    } catch (const annotation_error& e) {
      last_note = e.what();
    }
  }
  return AnnotationResult{0, true, last_note};
}

std::vector<AnnotationResult> LlmAnnotator::annotate_batch(
    const std::vector<SegmentPairQuery>& queries) {
  std::vector<AnnotationResult> results(queries.size());
  if (queries.empty()) return results;

  const int workers =
      std::min<int>(cfg_.parallel_requests, static_cast<int>(queries.size()));
  std::atomic<size_t> next{0};
  auto run = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= queries.size()) return;
      results[i] = annotate_one(queries[i]);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace motsc::annotate
