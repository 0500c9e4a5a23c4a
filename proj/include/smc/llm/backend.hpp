#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace smc {

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::string content;
};

/// One completion request: the conversation so far plus the new prompt.
struct LlmRequest {
  std::string system;
  std::vector<ChatTurn> turns;
  std::string prompt;
  std::string template_name;  // for scripting and diagnostics; not part of the digest
};

/// SHA-256 of the canonical JSON {system, turns, prompt}.
std::string llm_digest(const LlmRequest& req);
nlohmann::json llm_request_to_json(const LlmRequest& req);

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct LlmReply {
  std::string text;
  Usage usage;
  double cost_usd = 0.0;
  std::string model;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  /// Reply text or a thrown Error (Transport, MissingFixture, ...).
  virtual LlmReply complete(const LlmRequest& req) = 0;
  virtual std::string model() const = 0;
  virtual double temperature() const { return 0.0; }
};

/// Recorded replies in <dir>/<digest>.json ({"reply": text, ...}).
class ReplayBackend final : public LlmBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir);
  LlmReply complete(const LlmRequest& req) override;
  std::string model() const override { return "replay"; }

 private:
  std::filesystem::path dir_;
};

/// Forwards to `inner` and stores each exchange as a replay fixture.
class RecordingBackend final : public LlmBackend {
 public:
  RecordingBackend(std::shared_ptr<LlmBackend> inner, std::filesystem::path dir);
  LlmReply complete(const LlmRequest& req) override;
  std::string model() const override { return inner_->model(); }
  double temperature() const override { return inner_->temperature(); }

 private:
  std::shared_ptr<LlmBackend> inner_;
  std::filesystem::path dir_;
};

/// Replies served from per-template queues:
///     {"replies": {"classify": ["stack"], "optimize_lowlevel": ["...", "..."]}}
/// Each request pops the next reply queued under its template name.
class ScriptedBackend final : public LlmBackend {
 public:
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& script);
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  void push(const std::string& template_name, std::string reply);
  LlmReply complete(const LlmRequest& req) override;
  std::string model() const override { return "scripted"; }
  /// Template names requested so far, in order.
  std::vector<std::string> requested() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::deque<std::string>> queues_;
  std::vector<std::string> requested_;
};

struct HttpChatConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4-turbo";
  std::string api_key;
  double temperature = 0.0;
  double timeout_s = 120.0;
  double usd_per_1k_prompt = 0.01;
  double usd_per_1k_completion = 0.03;
};

/// OpenAI-style chat-completions client.
class HttpChatBackend final : public LlmBackend {
 public:
  explicit HttpChatBackend(HttpChatConfig cfg);
  LlmReply complete(const LlmRequest& req) override;
  std::string model() const override { return cfg_.model; }
  double temperature() const override { return cfg_.temperature; }

 private:
  HttpChatConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

struct RetryPolicy {
  int max_attempts = 3;
  double initial_backoff_s = 1.0;
  double backoff_factor = 2.0;
};

/// Retries Transport errors with exponential backoff.
LlmReply complete_with_retry(LlmBackend& backend, const LlmRequest& req,
                             const RetryPolicy& policy = {});

/// Spend shared by every session of a run.
class CostLedger {
 public:
  explicit CostLedger(double limit_usd = -1.0) : limit_usd_(limit_usd) {}

  /// Throws BudgetExceeded once the spend has reached the limit.
  void check() const;
  void charge(const LlmReply& reply);

  double spent_usd() const;
  Usage usage() const;
  int calls() const;

 private:
  mutable std::mutex mu_;
  double limit_usd_;
  double spent_usd_ = 0.0;
  Usage usage_;
  int calls_ = 0;
};

}  // namespace smc
