#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace smc {

using Bindings = std::map<std::string, std::string>;

/// Named prompt templates with <PLACEHOLDER> slots (upper-case letters,
/// digits and underscores).
class PromptCatalog {
 public:
  /// The catalog compiled into the library.
  static PromptCatalog builtin();
  static PromptCatalog from_yaml(std::string_view yaml_text);
  static PromptCatalog from_file(const std::filesystem::path& path);

  bool contains(std::string_view name) const;
  /// Throws InvalidArgument for an unknown template.
  const std::string& body(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Substitutes every placeholder in one pass (substituted text is never
  /// rescanned). Throws InvalidArgument when a placeholder has no binding
  /// or a binding names no placeholder of the template.
  std::string render(std::string_view name, const Bindings& bindings) const;

 private:
  std::map<std::string, std::string, std::less<>> bodies_;
};

/// Placeholder names appearing in `body`, in first-appearance order.
std::vector<std::string> placeholders(std::string_view body);

}  // namespace smc
