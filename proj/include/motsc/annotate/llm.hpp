#pragma once

#include "motsc/annotate/annotator.hpp"
#include "motsc/annotate/chat_client.hpp"
#include "motsc/orchestrator/scenario.hpp"

namespace motsc::annotate {

struct LlmConfig {
  ChatConfig chat;
  std::string prompt_path;  // template with {objectives} etc., "---" splits system/user
  int max_attempts = 3;
  int parallel_requests = 8;

  void validate() const;
};

// LLM preference teacher. Each query renders both segments to text, fills
// the staged prompt template and asks for a completion at temperature 0; the
// final line of the reply must read "LABEL: <0|1|2>". Transport or parse
// failures retry up to max_attempts, then the pair is marked as an error
// with label 0 (dropped downstream). Requests run on a bounded worker pool;
// results keep query order.
class LlmAnnotator : public Annotator {
 public:
  LlmAnnotator(orchestrator::ScenarioSpec scenario, LlmConfig cfg);

  std::vector<AnnotationResult> annotate_batch(
      const std::vector<SegmentPairQuery>& queries) override;
  std::string name() const override { return "llm"; }
  bool deterministic() const override { return false; }

  std::vector<ChatMessage> build_messages(const SegmentPairQuery& query) const;
  AnnotationResult annotate_one(const SegmentPairQuery& query) const;
  static int parse_label(const std::string& response);  // throws annotation_error

 private:
  orchestrator::ScenarioSpec scenario_;
  LlmConfig cfg_;
  ChatClient client_;
  std::string system_template_;
  std::string user_template_;
};

}  // namespace motsc::annotate
