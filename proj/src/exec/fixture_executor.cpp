#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/exec/executor.hpp"
#include "smc/io.hpp"

namespace smc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string normalize_source(std::string s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    if (ch != '\r') out += ch;
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ' || out.back() == '\t')) {
    out.pop_back();
  }
  return out;
}

}  // namespace

std::string request_digest(const ExecRequest& req, bool with_seed) {
  json key = {{"source", normalize_source(req.source)},
              {"entry", req.entry == EntryKind::Program ? "program" : "call"},
              {"call_source", req.call_source ? json(normalize_source(*req.call_source))
                                              : json(nullptr)}};
  if (with_seed) key["rng_seed"] = req.limits.rng_seed;
  return sha256_hex(key.dump());
}

FixtureExecutor::FixtureExecutor(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) {
    throw Error(ErrorKind::Io, "trace fixture directory not found: " + dir_.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) load_file(f);
}

void FixtureExecutor::load_file(const fs::path& file) {
  const json doc = read_json_file(file);
  if (!doc.contains("request") || !doc.contains("response")) {
    throw Error(ErrorKind::Parse, "trace fixture lacks request/response: " + file.string());
  }
  const json& jr = doc["request"];
  const ExecRequest req = request_from_json(jr);
  const bool has_seed = jr.contains("limits") && jr["limits"].contains("rng_seed");
  if (has_seed) exact_[request_digest(req, true)] = doc["response"];
  else any_seed_[request_digest(req, false)] = doc["response"];
}

void FixtureExecutor::add(const ExecRequest& req, const ExecOutcome& outcome, bool any_seed) {
  const std::lock_guard lock(mu_);
  if (any_seed) any_seed_[request_digest(req, false)] = response_to_json(outcome);
  else exact_[request_digest(req, true)] = response_to_json(outcome);
}

ExecOutcome FixtureExecutor::execute(const ExecRequest& req) {
  validate_request(req);
  const std::string digest = request_digest(req, true);
  {
    const std::lock_guard lock(mu_);
    const json* found = nullptr;
    if (auto it = exact_.find(digest); it != exact_.end()) {
      found = &it->second;
    } else if (auto wild = any_seed_.find(request_digest(req, false)); wild != any_seed_.end()) {
      found = &wild->second;
    }
    if (found) {
      auto outcome = decode_response(found->dump());
      if (auto* t = std::get_if<ObjectTrace>(&outcome);
          t && static_cast<int>(t->objects.size()) > req.limits.max_objects) {
        return ExecError{ExecErrorKind::ObjectLimit,
                         fmt::format("program created more than {} objects",
                                     req.limits.max_objects),
                         {}};
      }
      return outcome;
    }
  }
  if (!dir_.empty()) {
    const json dump = {{"request", request_to_json(req)}};
    try {
      write_file_atomic(dir_ / "missing" / (digest + ".request.json"), dump.dump(2) + "\n");
    } catch (const Error&) {
      // The fixture directory may be read-only; the error below still names the digest.
    }
  }
  throw Error(ErrorKind::MissingFixture, "no trace fixture for request " + digest, "execute");
}

}  // namespace smc
