#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smc/motif_type.hpp"
#include "smc/scene/types.hpp"

namespace smc {

enum class Provenance { Naive, Motif };

std::string_view to_string(Provenance p);

/// Source of a motif-DSL program. Motif programs keep every created object in
/// a list named `objs`.
struct ProgramText {
  std::string source;
  std::optional<MotifType> motif_type;  // unset until classified
  std::string description;
  Provenance provenance = Provenance::Naive;
  std::optional<std::string> created_from;
};

/// A generalized, documented function for one motif type.
struct MetaProgram {
  std::string source;
  std::string function_name;
  MotifType motif_type{MotifKind::Stack};
  std::vector<std::string> example_calls;
  std::vector<std::string> validated_against;

  friend bool operator==(const MetaProgram&, const MetaProgram&) = default;
};

/// Checks the meta-program invariants (one top-level function, documentation
/// with at least one example call) and fills function_name. Throws
/// InvalidArgument with the violated invariant.
MetaProgram make_meta_program(std::string source, MotifType type,
                              std::vector<std::string> example_calls,
                              std::vector<std::string> validated_against);

/// Names of functions defined at column 0 (`def name(`).
std::vector<std::string> top_level_functions(std::string_view source);

/// The function's docstring plus every comment line, or empty.
std::string documentation_block(std::string_view source);

/// True when the documentation block contains a call to `function_name`.
bool documents_example_call(std::string_view source, std::string_view function_name);

/// Python `repr(round(value, 5))`: shortest round-trip digits of the value
/// rounded to five decimals, e.g. 0.08909, 0.0143, 0.0, -0.0, 90.0, 1e-05.
std::string format_number(double value);

/// Intrinsic z-y-x angles in degrees: R = Rz(a) * Ry(b) * Rx(c).
Vec3 decompose_zyx_degrees(const Rotation& r);

/// Flat program creating and posing each object in input order: a half-size
/// binding, a centroid binding, create, move, and local-axis rotate calls
/// for non-identity rotations. Throws InvalidArgument on an empty
/// arrangement or non-finite pose.
ProgramText extract_naive_program(const Arrangement& arrangement);

}  // namespace smc
