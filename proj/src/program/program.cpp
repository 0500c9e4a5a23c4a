#include "smc/program/program.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/scene/geometry.hpp"

namespace smc {

std::string_view to_string(Provenance p) {
  return p == Provenance::Naive ? "naive" : "motif";
}

std::string format_number(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::InvalidArgument, "cannot format a non-finite number");
  }
  // printf rounds the exact binary value, as Python's round() does.
  char fixed[64];
  std::snprintf(fixed, sizeof fixed, "%.5f", value);
  const double rounded = std::strtod(fixed, nullptr);

  char sci[64];
  const auto res = std::to_chars(sci, sci + sizeof sci, rounded, std::chars_format::scientific);
  std::string s(sci, res.ptr);  // e.g. "-8.909e-02"
  const bool negative = s.front() == '-';
  if (negative) s.erase(0, 1);
  const auto epos = s.find('e');
  std::string digits = s.substr(0, epos);
  const int exponent = std::stoi(s.substr(epos + 1));
  digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());

  std::string out = negative ? "-" : "";
  if (exponent >= -4 && exponent < 16) {
    if (exponent < 0) {
      out += "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
    } else {
      const auto int_len = static_cast<std::size_t>(exponent + 1);
      if (digits.size() <= int_len) {
        out += digits + std::string(int_len - digits.size(), '0') + ".0";
      } else {
        out += digits.substr(0, int_len) + "." + digits.substr(int_len);
      }
    }
  } else {
    out += digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    out += fmt::format("e{}{:02d}", exponent < 0 ? '-' : '+', std::abs(exponent));
  }
  return out;
}

Vec3 decompose_zyx_degrees(const Rotation& r) {
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  const double sb = std::clamp(-r(2, 0), -1.0, 1.0);
  const double b = std::asin(sb);
  double a = 0.0;
  double c = 0.0;
  if (std::abs(std::cos(b)) > 1e-9) {
    a = std::atan2(r(1, 0), r(0, 0));
    c = std::atan2(r(2, 1), r(2, 2));
  } else {
    a = std::atan2(-r(0, 1), r(1, 1));
  }
  return {a * kRadToDeg, b * kRadToDeg, c * kRadToDeg};
}

namespace {

std::string python_string_literal(std::string_view s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\\' || ch == '\'') out += '\\';
    if (ch == '\n') {
      out += "\\n";
      continue;
    }
    out += ch;
  }
  return out + "'";
}

std::string list3(const Vec3& v) {
  return fmt::format("[{}, {}, {}]", format_number(v.x()), format_number(v.y()),
                     format_number(v.z()));
}

bool is_zero_literal(const std::string& s) { return s == "0.0" || s == "-0.0"; }

}  // namespace

ProgramText extract_naive_program(const Arrangement& arrangement) {
  if (arrangement.objects.empty()) {
    throw Error(ErrorKind::InvalidArgument, "cannot extract a program from an empty arrangement");
  }
  std::string description = arrangement.description;
  std::replace(description.begin(), description.end(), '\n', ' ');

  std::ostringstream out;
  out << "# Description: " << description << "\n";
  out << "# Naive program extracted from input arrangement\n";
  out << "objs = []\n";
  int n = 0;
  for (const auto& obj : arrangement.objects) {
    ++n;
    if (!obj.position.allFinite() || !obj.half_size.allFinite() || !obj.rotation.allFinite()) {
      throw Error(ErrorKind::InvalidArgument, "object '" + obj.id + "' has a non-finite pose");
    }
    const std::string var = fmt::format("obj_{}", n);
    out << var << "_half_size = " << list3(obj.half_size) << "\n";
    out << var << "_centroid = " << list3(obj.position) << "\n";
    out << var << " = create(" << python_string_literal(obj.label) << ", " << var << "_half_size)\n";
    out << "move(" << var << ", " << var << "_centroid[0], " << var << "_centroid[1], " << var
        << "_centroid[2])\n";
    if (!obj.rotation.isIdentity(1e-12)) {
      const Vec3 zyx = decompose_zyx_degrees(obj.rotation);
      const std::pair<char, double> steps[] = {{'z', zyx[0]}, {'y', zyx[1]}, {'x', zyx[2]}};
      for (const auto& [axis, angle] : steps) {
        const std::string lit = format_number(angle);
        if (is_zero_literal(lit)) continue;
        out << "rotate(" << var << ", '" << axis << "', " << lit << ")\n";
      }
    }
    out << "objs.append(" << var << ")\n";
  }

  ProgramText p;
  p.source = out.str();
  p.description = arrangement.description;
  p.provenance = Provenance::Naive;
  p.motif_type = arrangement.motif_type;
  return p;
}

std::vector<std::string> top_level_functions(std::string_view source) {
  static const std::regex kDef(R"(^def\s+([A-Za-z_][A-Za-z0-9_]*)\s*\()");
  std::vector<std::string> names;
  std::istringstream in{std::string(source)};
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_search(line, m, kDef)) names.push_back(m[1]);
  }
  return names;
}

std::string documentation_block(std::string_view source) {
  std::string doc;
  const std::string src(source);
  const auto def = src.find("def ");
  if (def != std::string::npos) {
    for (const char* q : {"\"\"\"", "'''"}) {
      const auto open = src.find(q, def);
      if (open == std::string::npos) continue;
      const auto close = src.find(q, open + 3);
      if (close == std::string::npos) continue;
      doc += src.substr(open + 3, close - open - 3);
      doc += "\n";
      break;
    }
  }
  std::istringstream in(src);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') doc += line.substr(first) + "\n";
  }
  return doc;
}

bool documents_example_call(std::string_view source, std::string_view function_name) {
  const std::regex call("\\b" + std::string(function_name) + R"(\s*\()");
  const std::string doc = documentation_block(source);
  return std::regex_search(doc, call);
}

MetaProgram make_meta_program(std::string source, MotifType type,
                              std::vector<std::string> example_calls,
                              std::vector<std::string> validated_against) {
  const auto fns = top_level_functions(source);
  if (fns.size() != 1) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("a meta-program must define exactly one top-level function, found {}",
                            fns.size()));
  }
  if (!documents_example_call(source, fns.front())) {
    throw Error(ErrorKind::InvalidArgument,
                "the meta-program documentation must contain at least one example call of " +
                    fns.front());
  }
  MetaProgram m;
  m.source = std::move(source);
  m.function_name = fns.front();
  m.motif_type = type;
  m.example_calls = std::move(example_calls);
  m.validated_against = std::move(validated_against);
  return m;
}

}  // namespace smc
