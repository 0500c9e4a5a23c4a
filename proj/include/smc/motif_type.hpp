#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace smc {

enum class MotifKind {
  Stack,
  Pile,
  Row,
  Grid,
  LeftOf,
  InFrontOf,
  OnTop,
  Surround,
  WallVerticalColumn,
  WallHorizontalRow,
  WallGrid,
  RectangularPerimeter,
  Letter,
};

inline constexpr std::array<MotifKind, 13> kAllMotifKinds = {
    MotifKind::Stack,       MotifKind::Pile,
    MotifKind::Row,         MotifKind::Grid,
    MotifKind::LeftOf,      MotifKind::InFrontOf,
    MotifKind::OnTop,       MotifKind::Surround,
    MotifKind::WallVerticalColumn, MotifKind::WallHorizontalRow,
    MotifKind::WallGrid,    MotifKind::RectangularPerimeter,
    MotifKind::Letter,
};

/// A motif category. Letter-shaped motifs carry their (upper-case) letter and
/// are distinct types, e.g. letter_A and letter_S.
class MotifType {
 public:
  /// Throws InvalidArgument for MotifKind::Letter (use letter()).
  explicit MotifType(MotifKind kind);
  static MotifType letter(char c);

  MotifKind kind() const noexcept { return kind_; }
  std::optional<char> letter_char() const noexcept { return letter_; }

  /// Canonical name: "stack", "in_front_of", "letter_A", ...
  std::string name() const;

  /// Case-insensitive parse of a canonical name; accepts the short aliases
  /// in_front, wall_column and wall_row. Returns nullopt when unknown.
  static std::optional<MotifType> parse(std::string_view text);

  friend bool operator==(const MotifType&, const MotifType&) = default;
  friend auto operator<=>(const MotifType& a, const MotifType& b) {
    return a.name() <=> b.name();
  }

 private:
  MotifType(MotifKind kind, std::optional<char> letter) : kind_(kind), letter_(letter) {}

  MotifKind kind_;
  std::optional<char> letter_;
};

std::string_view kind_name(MotifKind kind);

}  // namespace smc
