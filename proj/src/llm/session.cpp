#include "smc/llm/session.hpp"

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/io.hpp"

namespace smc {

namespace fs = std::filesystem;
using nlohmann::json;

TranscriptSink::TranscriptSink(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create transcript directory " + dir_.string());
}

fs::path TranscriptSink::allocate(const std::string& session_name) {
  return dir_ / fmt::format("{:03d}_{}.json", next_++, session_name);
}

ChatSession::ChatSession(std::string name, const LlmContext& ctx)
    : name_(std::move(name)), ctx_(ctx), system_(ctx.prompts.body("system")) {
  if (!ctx_.backend) throw Error(ErrorKind::Config, "no LLM backend configured");
  if (ctx_.transcripts) transcript_path_ = ctx_.transcripts->allocate(name_);
}

std::string ChatSession::ask(const std::string& template_name, const Bindings& bindings) {
  LlmRequest req;
  req.system = system_;
  req.turns = turns_;
  req.prompt = ctx_.prompts.render(template_name, bindings);
  req.template_name = template_name;

  if (ctx_.ledger) ctx_.ledger->check();
  const LlmReply reply = complete_with_retry(*ctx_.backend, req, ctx_.retry);
  if (ctx_.ledger) ctx_.ledger->charge(reply);

  turns_.push_back({"user", req.prompt});
  turns_.push_back({"assistant", reply.text});
  entries_.push_back({template_name, bindings, req.prompt, reply.text, reply.usage, reply.cost_usd});
  cost_usd_ += reply.cost_usd;
  flush();
  return reply.text;
}

json ChatSession::transcript() const {
  json entries = json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"template", e.template_name},
                       {"bindings", e.bindings},
                       {"prompt", e.prompt},
                       {"reply", e.reply},
                       {"usage",
                        {{"prompt_tokens", e.usage.prompt_tokens},
                         {"completion_tokens", e.usage.completion_tokens}}},
                       {"cost_usd", e.cost_usd}});
  }
  return {{"session", name_},
          {"model", ctx_.backend->model()},
          {"temperature", ctx_.backend->temperature()},
          {"system", system_},
          {"entries", std::move(entries)},
          {"cost_usd", cost_usd_}};
}

void ChatSession::flush() const {
  if (transcript_path_) write_file_atomic(*transcript_path_, transcript().dump(2) + "\n");
}

}  // namespace smc
