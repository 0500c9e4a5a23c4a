#include <httplib.h>

#include <regex>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/llm/backend.hpp"

namespace smc {

using nlohmann::json;

HttpChatBackend::HttpChatBackend(HttpChatConfig cfg) : cfg_(std::move(cfg)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.endpoint, m, kUrl)) {
    throw Error(ErrorKind::Config, "invalid LLM endpoint URL '" + cfg_.endpoint + "'");
  }
  scheme_host_port_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/v1/chat/completions";
  if (cfg_.model.empty()) throw Error(ErrorKind::Config, "LLM model name is empty");
}

LlmReply HttpChatBackend::complete(const LlmRequest& req) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", req.system}});
  for (const auto& t : req.turns) messages.push_back({{"role", t.role}, {"content", t.content}});
  messages.push_back({{"role", "user"}, {"content", req.prompt}});
  const json body = {{"model", cfg_.model},
                     {"messages", std::move(messages)},
                     {"temperature", cfg_.temperature}};

  httplib::Client cli(scheme_host_port_);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  const auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::Transport,
                "LLM request failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 408 || res->status == 429 || res->status >= 500) {
    throw Error(ErrorKind::Transport, fmt::format("LLM endpoint returned HTTP {}", res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::Config,
                fmt::format("LLM endpoint rejected the request (HTTP {}): {}", res->status,
                            res->body.substr(0, 300)));
  }
  LlmReply reply;
  try {
    const json j = json::parse(res->body);
    reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    reply.model = j.value("model", cfg_.model);
    if (j.contains("usage")) {
      reply.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      reply.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    }
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Transport, std::string("malformed LLM response: ") + e.what());
  }
  reply.cost_usd = reply.usage.prompt_tokens / 1000.0 * cfg_.usd_per_1k_prompt +
                   reply.usage.completion_tokens / 1000.0 * cfg_.usd_per_1k_completion;
  return reply;
}

}  // namespace smc
