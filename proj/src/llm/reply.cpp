#include "smc/llm/reply.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace smc {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Block {
  std::string lang;
  std::string body;
};

std::vector<Block> fenced_blocks(std::string_view text) {
  std::vector<Block> out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    const auto eol = text.find('\n', open + 3);
    if (eol == std::string_view::npos) break;
    const auto close = text.find("```", eol + 1);
    if (close == std::string_view::npos) break;
    Block b;
    b.lang = lower(trim(text.substr(open + 3, eol - open - 3)));
    b.body = std::string(text.substr(eol + 1, close - eol - 1));
    out.push_back(std::move(b));
    pos = close + 3;
  }
  return out;
}

// Top-level {...} spans, respecting quoted strings.
std::vector<std::string_view> balanced_objects(std::string_view text) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (depth > 0 && quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (depth > 0 && (c == '"' || c == '\'')) {
      quote = c;
    } else if (c == '{') {
      if (depth++ == 0) start = i;
    } else if (c == '}' && depth > 0) {
      if (--depth == 0) out.push_back(text.substr(start, i - start + 1));
    }
  }
  return out;
}

std::optional<json> parse_lenient(std::string_view block) {
  try {
    return json::parse(block);
  } catch (const json::parse_error&) {
  }
  try {
    return json::parse(python_literal_to_json(block));
  } catch (const json::parse_error&) {
  }
  return std::nullopt;
}

const json* find_key_ci(const json& obj, const std::string& key) {
  const std::string want = lower(key);
  for (const auto& [k, v] : obj.items()) {
    if (lower(trim(k)) == want) return &v;
  }
  return nullptr;
}

std::optional<std::map<std::string, double>> pair_distribution(const json& obj, const char* a,
                                                               const char* b) {
  if (!obj.is_object()) return std::nullopt;
  const json* ja = find_key_ci(obj, a);
  const json* jb = find_key_ci(obj, b);
  if (!ja || !jb) return std::nullopt;
  const auto pa = parse_probability(*ja);
  const auto pb = parse_probability(*jb);
  if (!pa || !pb || std::abs(*pa + *pb - 1.0) > kProbabilitySumTolerance) return std::nullopt;
  return std::map<std::string, double>{{a, *pa}, {b, *pb}};
}

std::string text_after_json(std::string_view reply) {
  const auto objs = balanced_objects(reply);
  if (objs.empty()) return trim(reply);
  const auto end = static_cast<std::size_t>(objs.back().data() - reply.data()) + objs.back().size();
  std::string rest = trim(reply.substr(end));
  if (rest.rfind("```", 0) == 0) rest = trim(std::string_view(rest).substr(3));
  return rest;
}

}  // namespace

std::string extract_code(std::string_view reply) {
  const auto blocks = fenced_blocks(reply);
  if (blocks.empty()) return trim(reply);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (it->lang == "python" || it->lang == "py") return trim(it->body);
  }
  return trim(blocks.back().body);
}

std::string python_literal_to_json(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '"' || c == '\'') {
      const char q = c;
      out += '"';
      for (++i; i < text.size() && text[i] != q; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) {
          const char n = text[++i];
          if (n == '\'') out += '\'';
          else out += std::string{'\\', n};
        } else if (text[i] == '"') {
          out += "\\\"";
        } else if (text[i] == '\n') {
          out += "\\n";
        } else {
          out += text[i];
        }
      }
      out += '"';
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      const std::string_view word = text.substr(i, j - i);
      if (word == "True") out += "true";
      else if (word == "False") out += "false";
      else if (word == "None") out += "null";
      else out += word;
      i = j - 1;
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

std::optional<json> extract_json_object(std::string_view reply) {
  const auto blocks = balanced_objects(reply);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (auto j = parse_lenient(*it); j && j->is_object()) return j;
  }
  return std::nullopt;
}

std::optional<std::map<std::string, int>> parse_counts(std::string_view reply) {
  const auto j = extract_json_object(reply);
  if (!j || j->empty()) return std::nullopt;
  std::map<std::string, int> out;
  for (const auto& [k, v] : j->items()) {
    double n = 0;
    if (v.is_number()) {
      n = v.get<double>();
    } else if (v.is_string()) {
      try {
        std::size_t used = 0;
        const std::string s = trim(v.get<std::string>());
        n = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    } else {
      return std::nullopt;
    }
    if (n < 0 || n != std::floor(n)) return std::nullopt;
    out[trim(k)] = static_cast<int>(n);
  }
  return out;
}

std::optional<HardcodeVerdict> parse_hardcode_verdict(std::string_view reply) {
  const auto j = extract_json_object(reply);
  if (!j) return std::nullopt;
  const json* valid = find_key_ci(*j, "valid");
  if (!valid) return std::nullopt;
  HardcodeVerdict v;
  if (valid->is_boolean()) {
    v.valid = valid->get<bool>();
  } else if (valid->is_string()) {
    const std::string s = lower(trim(valid->get<std::string>()));
    if (s == "yes" || s == "true") v.valid = true;
    else if (s == "no" || s == "false") v.valid = false;
    else return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (const json* names = find_key_ci(*j, "variable_names"); names && names->is_array()) {
    for (const auto& n : *names) {
      if (n.is_string()) v.variable_names.push_back(n.get<std::string>());
    }
  }
  return v;
}

std::optional<MotifType> parse_motif_reply(std::string_view reply) {
  std::string s = trim(reply);
  while (!s.empty() && std::string_view("`'\".*").find(s.front()) != std::string_view::npos) s.erase(0, 1);
  while (!s.empty() && std::string_view("`'\".*").find(s.back()) != std::string_view::npos) s.pop_back();
  s = trim(s);
  if (auto t = MotifType::parse(s)) return t;
  std::string underscored = s;
  std::replace(underscored.begin(), underscored.end(), ' ', '_');
  if (auto t = MotifType::parse(underscored)) return t;

  std::set<std::string> found;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!(std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
    if (auto t = MotifType::parse(s.substr(i, j - i))) found.insert(t->name());
    i = j;
  }
  if (found.size() != 1) return std::nullopt;
  return MotifType::parse(*found.begin());
}

std::optional<std::map<int, std::string>> parse_call_map(std::string_view reply) {
  const auto j = extract_json_object(reply);
  if (!j || j->empty()) return std::nullopt;
  std::map<int, std::string> out;
  for (const auto& [k, v] : j->items()) {
    if (!v.is_string()) return std::nullopt;
    try {
      std::size_t used = 0;
      const std::string key = trim(k);
      const int n = std::stoi(key, &used);
      if (used != key.size() || n < 1) return std::nullopt;
      out[n] = trim(v.get<std::string>());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

std::optional<double> parse_probability(const json& value) {
  double p = 0;
  if (value.is_number()) {
    p = value.get<double>();
  } else if (value.is_string()) {
    std::string s = trim(value.get<std::string>());
    bool percent = false;
    if (!s.empty() && s.back() == '%') {
      percent = true;
      s.pop_back();
    }
    try {
      std::size_t used = 0;
      p = std::stod(s, &used);
      if (used != s.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (percent) p /= 100.0;
  } else {
    return std::nullopt;
  }
  if (!std::isfinite(p) || p < 0) return std::nullopt;
  if (p > 1.0) {
    if (p > 100.0) return std::nullopt;
    p /= 100.0;
  }
  return p;
}

std::optional<CommonsenseVerdict> parse_orientation_verdict(
    std::string_view reply, const std::vector<std::string>& labels) {
  const auto j = extract_json_object(reply);
  if (!j || labels.empty()) return std::nullopt;
  CommonsenseVerdict v;
  for (const auto& label : labels) {
    const json* entry = find_key_ci(*j, label);
    if (!entry) return std::nullopt;
    auto dist = pair_distribution(*entry, "correct", "incorrect");
    if (!dist) return std::nullopt;
    v.probabilities[label] = std::move(*dist);
  }
  v.explanation = text_after_json(reply);
  return v;
}

std::optional<CommonsenseVerdict> parse_touch_verdict(std::string_view reply) {
  const auto j = extract_json_object(reply);
  if (!j) return std::nullopt;
  auto dist = pair_distribution(*j, "touch", "no_touch");
  if (!dist) return std::nullopt;
  CommonsenseVerdict v;
  v.probabilities["motif"] = std::move(*dist);
  v.explanation = text_after_json(reply);
  return v;
}

}  // namespace smc
