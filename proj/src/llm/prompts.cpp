#include "smc/llm/prompts.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <yaml-cpp/yaml.h>

#include "smc/error.hpp"
#include "smc/io.hpp"

namespace smc {

extern const std::string_view kEmbeddedPrompts;

namespace {

const std::regex& placeholder_re() {
  static const std::regex re(R"(<([A-Z][A-Z0-9_]*)>)");
  return re;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> out;
  const std::string s(body);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), placeholder_re());
       it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1];
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

PromptCatalog PromptCatalog::builtin() {
  static const PromptCatalog catalog = from_yaml(kEmbeddedPrompts);
  return catalog;
}

PromptCatalog PromptCatalog::from_yaml(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Parse, std::string("prompt catalog is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorKind::Parse, "prompt catalog must be a mapping");
  PromptCatalog c;
  for (const auto& kv : root) {
    if (!kv.second.IsScalar()) {
      throw Error(ErrorKind::Parse,
                  "prompt template '" + kv.first.as<std::string>() + "' is not a string");
    }
    c.bodies_.emplace(kv.first.as<std::string>(), kv.second.as<std::string>());
  }
  return c;
}

PromptCatalog PromptCatalog::from_file(const std::filesystem::path& path) {
  return from_yaml(read_text_file(path));
}

bool PromptCatalog::contains(std::string_view name) const { return bodies_.contains(name); }

const std::string& PromptCatalog::body(std::string_view name) const {
  const auto it = bodies_.find(name);
  if (it == bodies_.end()) {
    throw Error(ErrorKind::InvalidArgument, "unknown prompt template '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::string> PromptCatalog::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : bodies_) out.push_back(name);
  return out;
}

std::string PromptCatalog::render(std::string_view name, const Bindings& bindings) const {
  const std::string& tpl = body(name);
  std::set<std::string> used;
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(tpl.begin(), tpl.end(), placeholder_re());
       it != std::sregex_iterator(); ++it) {
    const std::string key = (*it)[1];
    const auto b = bindings.find(key);
    if (b == bindings.end()) {
      throw Error(ErrorKind::InvalidArgument,
                  "template '" + std::string(name) + "' needs a value for <" + key + ">");
    }
    out.append(tpl, last, static_cast<std::size_t>(it->position()) - last);
    out += b->second;
    last = static_cast<std::size_t>(it->position() + it->length());
    used.insert(key);
  }
  out.append(tpl, last);
  for (const auto& [key, _] : bindings) {
    if (!used.contains(key)) {
      throw Error(ErrorKind::InvalidArgument,
                  "template '" + std::string(name) + "' has no placeholder <" + key + ">");
    }
  }
  return out;
}

}  // namespace smc
