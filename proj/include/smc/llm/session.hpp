#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smc/llm/backend.hpp"
#include "smc/llm/prompts.hpp"

namespace smc {

/// Writes one JSON transcript per session into a directory, numbered in
/// session-creation order.
class TranscriptSink {
 public:
  explicit TranscriptSink(std::filesystem::path dir);
  std::filesystem::path allocate(const std::string& session_name);

 private:
  std::filesystem::path dir_;
  std::atomic<int> next_{1};
};

/// Everything a session needs besides its name.
struct LlmContext {
  std::shared_ptr<LlmBackend> backend;
  PromptCatalog prompts = PromptCatalog::builtin();
  std::shared_ptr<CostLedger> ledger = std::make_shared<CostLedger>();
  std::shared_ptr<TranscriptSink> transcripts;  // optional
  RetryPolicy retry;
};

/// A multi-turn conversation that starts from the catalog's system prompt.
/// Turns are append-only; every exchange is logged with its template name
/// and bindings.
class ChatSession {
 public:
  struct Entry {
    std::string template_name;
    Bindings bindings;
    std::string prompt;
    std::string reply;
    Usage usage;
    double cost_usd = 0.0;
  };

  ChatSession(std::string name, const LlmContext& ctx);

  /// Renders `template_name` with `bindings`, sends it with the history and
  /// appends the exchange. Throws on transport, budget or fixture errors.
  std::string ask(const std::string& template_name, const Bindings& bindings = {});

  const std::string& name() const { return name_; }
  const std::string& system() const { return system_; }
  const std::vector<ChatTurn>& turns() const { return turns_; }
  const std::vector<Entry>& entries() const { return entries_; }
  double cost_usd() const { return cost_usd_; }

  nlohmann::json transcript() const;

 private:
  void flush() const;

  std::string name_;
  const LlmContext& ctx_;
  std::string system_;
  std::vector<ChatTurn> turns_;
  std::vector<Entry> entries_;
  double cost_usd_ = 0.0;
  std::optional<std::filesystem::path> transcript_path_;
};

}  // namespace smc
