#include "smc/motif_type.hpp"

#include <algorithm>
#include <cctype>

#include "smc/error.hpp"

namespace smc {

std::string_view kind_name(MotifKind kind) {
  switch (kind) {
    case MotifKind::Stack: return "stack";
    case MotifKind::Pile: return "pile";
    case MotifKind::Row: return "row";
    case MotifKind::Grid: return "grid";
    case MotifKind::LeftOf: return "left_of";
    case MotifKind::InFrontOf: return "in_front_of";
    case MotifKind::OnTop: return "on_top";
    case MotifKind::Surround: return "surround";
    case MotifKind::WallVerticalColumn: return "wall_vertical_column";
    case MotifKind::WallHorizontalRow: return "wall_horizontal_row";
    case MotifKind::WallGrid: return "wall_grid";
    case MotifKind::RectangularPerimeter: return "rectangular_perimeter";
    case MotifKind::Letter: return "letter";
  }
  return "";
}

MotifType::MotifType(MotifKind kind) : kind_(kind) {
  if (kind == MotifKind::Letter) {
    throw Error(ErrorKind::InvalidArgument, "letter motif types need a letter");
  }
}

MotifType MotifType::letter(char c) {
  if (!std::isalpha(static_cast<unsigned char>(c))) {
    throw Error(ErrorKind::InvalidArgument, std::string("not a letter: ") + c);
  }
  return MotifType(MotifKind::Letter,
                   static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
}

std::string MotifType::name() const {
  std::string n(kind_name(kind_));
  if (letter_) {
    n += '_';
    n += *letter_;
  }
  return n;
}

std::optional<MotifType> MotifType::parse(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "in_front") s = "in_front_of";
  if (s == "wall_column") s = "wall_vertical_column";
  if (s == "wall_row") s = "wall_horizontal_row";
  for (MotifKind k : kAllMotifKinds) {
    if (k == MotifKind::Letter) continue;
    if (s == kind_name(k)) return MotifType(k);
  }
  if (s.size() == 8 && s.rfind("letter_", 0) == 0 &&
      std::isalpha(static_cast<unsigned char>(s[7]))) {
    return MotifType::letter(s[7]);
  }
  return std::nullopt;
}

}  // namespace smc
