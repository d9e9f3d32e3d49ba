#include "motsc/annotate/chat_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "motsc/core/error.hpp"

namespace motsc::annotate {

using nlohmann::json;

void ChatConfig::validate() const {
  if (endpoint.empty()) throw config_error("chat: endpoint must not be empty");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0)
    throw config_error("chat: endpoint must start with http:// or https://");
  if (model.empty()) throw config_error("chat: model must not be empty");
  if (timeout_seconds < 1) throw config_error("chat: timeout must be >= 1s");
}

ChatClient::ChatClient(ChatConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::string ChatClient::build_request_body(const ChatConfig& cfg,
                                           const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = std::move(msgs);
  return body.dump();
}

std::string ChatClient::parse_response_body(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw annotation_error(std::string("chat: response is not JSON: ") + e.what());
  }
  try {
    const auto& choices = j.at("choices");
    if (!choices.is_array() || choices.empty())
      throw annotation_error("chat: response has no choices");
    return choices[0].at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw annotation_error(std::string("chat: malformed response: ") + e.what());
  }
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
  httplib::Client cli(cfg_.endpoint);
  cli.set_connection_timeout(cfg_.timeout_seconds, 0);
  cli.set_read_timeout(cfg_.timeout_seconds, 0);
  cli.set_write_timeout(cfg_.timeout_seconds, 0);

  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key != '\0')
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string body = build_request_body(cfg_, messages);
  auto res = cli.Post("/v1/chat/completions", headers, body, "application/json");
  if (!res)
    throw annotation_error("chat: transport failure: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw annotation_error("chat: HTTP " + std::to_string(res->status) + ": " + res->body);
  return parse_response_body(res->body);
}

}  // namespace motsc::annotate
