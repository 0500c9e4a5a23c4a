#include "support/naive_interpreter.hpp"

#include <map>
#include <numbers>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

namespace smc::testing {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

struct State {
  std::map<std::string, std::vector<double>> lists;
  std::map<std::string, std::size_t> objects;  // variable -> trace index
  ObjectTrace trace;

  double number(const std::string& expr) const {
    static const std::regex kIndex(R"(([A-Za-z_]\w*)\[(\d+)\])");
    std::smatch m;
    if (std::regex_match(expr, m, kIndex)) return lists.at(m[1]).at(std::stoul(m[2]));
    return std::stod(expr);
  }

  std::vector<double> list(const std::string& expr) const {
    if (expr.front() == '[') {
      std::vector<double> out;
      for (const auto& a : split_args(expr.substr(1, expr.size() - 2))) out.push_back(number(a));
      return out;
    }
    return lists.at(expr);
  }
};

}  // namespace

ObjectTrace interpret_straight_line(const std::string& source) {
  static const std::regex kAssignList(R"(([A-Za-z_]\w*)\s*=\s*(\[.*\]))");
  static const std::regex kCreate(R"(([A-Za-z_]\w*)\s*=\s*create\('([^']*)',\s*(.+)\))");
  static const std::regex kCall(R"((move|rotate)\((.*)\))");
  static const std::regex kIgnore(R"(objs\s*=\s*\[\]|objs\.append\(.*\))");

  State st;
  std::istringstream in(source);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::smatch m;
    if (std::regex_match(line, kIgnore)) continue;
    if (std::regex_match(line, m, kCreate)) {
      const auto hs = st.list(trim(m[3]));
      TraceObject o;
      o.label = m[2];
      o.half_size = Vec3(hs.at(0), hs.at(1), hs.at(2));
      st.objects[m[1]] = st.trace.objects.size();
      st.trace.objects.push_back(o);
      st.trace.events.push_back({"create", {o.label, hs}});
    } else if (std::regex_match(line, m, kAssignList)) {
      st.lists[m[1]] = st.list(m[2]);
    } else if (std::regex_match(line, m, kCall)) {
      const auto args = split_args(m[2]);
      TraceObject& o = st.trace.objects.at(st.objects.at(args.at(0)));
      if (m[1] == "move") {
        o.position = Vec3(st.number(args.at(1)), st.number(args.at(2)), st.number(args.at(3)));
        st.trace.events.push_back({"move", {args[0], o.position.x(), o.position.y(),
                                            o.position.z()}});
      } else {
        const char axis = args.at(1).at(1);
        const double deg = st.number(args.at(2));
        const Vec3 unit = axis == 'x' ? Vec3::UnitX() : axis == 'y' ? Vec3::UnitY() : Vec3::UnitZ();
        const Eigen::AngleAxisd aa(deg * std::numbers::pi / 180.0, unit);
        o.rotation = o.rotation * aa.toRotationMatrix();
        st.trace.events.push_back({"rotate", {args[0], std::string(1, axis), deg}});
      }
    } else {
      throw std::runtime_error("unsupported statement: " + line);
    }
  }
  return st.trace;
}

}  // namespace smc::testing
