#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smc/motif_type.hpp"

namespace smc {

/// Body of the last fenced code block (python-tagged blocks preferred), or
/// the trimmed reply when it has no fences.
std::string extract_code(std::string_view reply);

/// The last brace-balanced {...} block that parses as JSON, either directly
/// or after Python-literal normalization (quotes, True/False/None, trailing
/// commas).
std::optional<nlohmann::json> extract_json_object(std::string_view reply);

/// Converts a Python dict/list literal into JSON text.
std::string python_literal_to_json(std::string_view text);

/// {label: count}; all counts non-negative integers, at least one label.
std::optional<std::map<std::string, int>> parse_counts(std::string_view reply);

struct HardcodeVerdict {
  bool valid = false;
  std::vector<std::string> variable_names;
};
std::optional<HardcodeVerdict> parse_hardcode_verdict(std::string_view reply);

/// Motif type named by a classification reply: the whole reply when it is a
/// type name, else the single distinct type mentioned.
std::optional<MotifType> parse_motif_reply(std::string_view reply);

/// {"1": "call(...)", ...} keyed by 1-based example ordinal.
std::optional<std::map<int, std::string>> parse_call_map(std::string_view reply);

/// A probability in [0, 1]; values in (1, 100] and "NN%" strings are read as
/// percentages.
std::optional<double> parse_probability(const nlohmann::json& value);

/// Per key, a distribution over outcomes, e.g. {"plate": {"correct": 0.8,
/// "incorrect": 0.2}} or {"motif": {"touch": 0.9, "no_touch": 0.1}}.
struct CommonsenseVerdict {
  std::map<std::string, std::map<std::string, double>> probabilities;
  std::string explanation;
  bool defaulted = false;  // true when the conservative default was used
};

inline constexpr double kProbabilitySumTolerance = 0.01;

/// Orientation reply for `labels`; nullopt unless every label has a valid
/// correct/incorrect pair summing to 1.
std::optional<CommonsenseVerdict> parse_orientation_verdict(std::string_view reply,
                                                            const std::vector<std::string>& labels);
std::optional<CommonsenseVerdict> parse_touch_verdict(std::string_view reply);

}  // namespace smc
