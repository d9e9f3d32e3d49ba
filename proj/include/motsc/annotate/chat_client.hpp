#pragma once

#include <string>
#include <vector>

#include "motsc/annotate/annotator.hpp"

namespace motsc::annotate {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatConfig {
  std::string endpoint = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";  // header omitted if unset/empty
  double temperature = 0.0;
  int timeout_seconds = 60;

  void validate() const;
};

// Minimal chat-completions client (POST {endpoint}/v1/chat/completions).
// Stateless: each call opens its own connection, so instances are safe to
// share across annotation worker threads. Failures of any kind raise
// annotation_error with the transport/HTTP/parse detail.
class ChatClient {
 public:
  explicit ChatClient(ChatConfig cfg);

  const ChatConfig& config() const { return cfg_; }
  std::string complete(const std::vector<ChatMessage>& messages) const;

  static std::string build_request_body(const ChatConfig& cfg,
                                        const std::vector<ChatMessage>& messages);
  static std::string parse_response_body(const std::string& body);

 private:
  ChatConfig cfg_;
};

}  // namespace motsc::annotate
