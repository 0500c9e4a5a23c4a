#include "smc/llm/backend.hpp"

#include <chrono>
#include <thread>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/io.hpp"

namespace smc {

namespace fs = std::filesystem;
using nlohmann::json;

json llm_request_to_json(const LlmRequest& req) {
  json turns = json::array();
  for (const auto& t : req.turns) turns.push_back({{"role", t.role}, {"content", t.content}});
  return {{"system", req.system}, {"turns", std::move(turns)}, {"prompt", req.prompt}};
}

std::string llm_digest(const LlmRequest& req) { return sha256_hex(llm_request_to_json(req).dump()); }

ReplayBackend::ReplayBackend(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) {
    throw Error(ErrorKind::Config, "replay fixture directory not found: " + dir_.string());
  }
}

LlmReply ReplayBackend::complete(const LlmRequest& req) {
  const std::string digest = llm_digest(req);
  const fs::path file = dir_ / (digest + ".json");
  if (!fs::exists(file)) {
    throw Error(ErrorKind::MissingFixture,
                fmt::format("no replay fixture {} for template '{}' in {}", digest,
                            req.template_name, dir_.string()));
  }
  const json doc = read_json_file(file);
  LlmReply r;
  r.text = doc.at("reply").get<std::string>();
  r.model = doc.value("model", "replay");
  return r;
}

RecordingBackend::RecordingBackend(std::shared_ptr<LlmBackend> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (!inner_) throw Error(ErrorKind::InvalidArgument, "recording backend needs an inner backend");
}

LlmReply RecordingBackend::complete(const LlmRequest& req) {
  LlmReply r = inner_->complete(req);
  const json doc = {{"template", req.template_name},
                    {"model", r.model},
                    {"request", llm_request_to_json(req)},
                    {"reply", r.text}};
  write_file_atomic(dir_ / (llm_digest(req) + ".json"), doc.dump(2) + "\n");
  return r;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& script) {
  auto b = std::make_shared<ScriptedBackend>();
  if (!script.contains("replies") || !script["replies"].is_object()) {
    throw Error(ErrorKind::Parse, "script must contain a 'replies' object");
  }
  for (const auto& [name, replies] : script["replies"].items()) {
    if (replies.is_string()) {
      b->push(name, replies.get<std::string>());
      continue;
    }
    for (const auto& r : replies) b->push(name, r.get<std::string>());
  }
  return b;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const fs::path& path) {
  return from_json(read_json_file(path));
}

void ScriptedBackend::push(const std::string& template_name, std::string reply) {
  const std::lock_guard lock(mu_);
  queues_[template_name].push_back(std::move(reply));
}

LlmReply ScriptedBackend::complete(const LlmRequest& req) {
  const std::lock_guard lock(mu_);
  requested_.push_back(req.template_name);
  auto it = queues_.find(req.template_name);
  if (it == queues_.end() || it->second.empty()) {
    throw Error(ErrorKind::MissingFixture,
                "script has no reply left for template '" + req.template_name + "'");
  }
  LlmReply r;
  r.text = std::move(it->second.front());
  it->second.pop_front();
  r.model = "scripted";
  return r;
}

std::vector<std::string> ScriptedBackend::requested() const {
  const std::lock_guard lock(mu_);
  return requested_;
}

LlmReply complete_with_retry(LlmBackend& backend, const LlmRequest& req,
                             const RetryPolicy& policy) {
  double backoff = policy.initial_backoff_s;
  for (int attempt = 1;; ++attempt) {
    try {
      return backend.complete(req);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Transport || attempt >= policy.max_attempts) throw;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= policy.backoff_factor;
  }
}

void CostLedger::check() const {
  const std::lock_guard lock(mu_);
  if (limit_usd_ >= 0 && spent_usd_ >= limit_usd_) {
    throw Error(ErrorKind::BudgetExceeded,
                fmt::format("LLM budget of ${:.2f} exhausted (spent ${:.4f})", limit_usd_,
                            spent_usd_));
  }
}

void CostLedger::charge(const LlmReply& reply) {
  const std::lock_guard lock(mu_);
  spent_usd_ += std::max(0.0, reply.cost_usd);
  usage_.prompt_tokens += reply.usage.prompt_tokens;
  usage_.completion_tokens += reply.usage.completion_tokens;
  ++calls_;
}

double CostLedger::spent_usd() const {
  const std::lock_guard lock(mu_);
  return spent_usd_;
}

Usage CostLedger::usage() const {
  const std::lock_guard lock(mu_);
  return usage_;
}

int CostLedger::calls() const {
  const std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace smc
