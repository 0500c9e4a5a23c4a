#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "smc/scene/types.hpp"

namespace smc {

/// Final state of one created object.
struct TraceObject {
  std::string label;
  Vec3 half_size = Vec3::Ones();
  Vec3 position = Vec3::Zero();
  Rotation rotation = Rotation::Identity();
};

/// One construct invocation (create/move/rotate) with its arguments.
struct TraceEvent {
  std::string op;
  nlohmann::json args;
};

/// Objects produced by executing a DSL program, in creation order.
struct ObjectTrace {
  std::vector<TraceObject> objects;
  std::vector<TraceEvent> events;
};

/// Scene objects for a trace; ids are "trace_<n>" (1-based).
std::vector<SceneObject> to_scene_objects(const ObjectTrace& trace);
/// Trace whose objects mirror an arrangement's objects.
ObjectTrace trace_from_arrangement(const Arrangement& arrangement);

enum class EntryKind { Program, Call };

struct ExecLimits {
  double timeout_s = 10.0;
  int max_objects = 256;
  std::int64_t rng_seed = 0;
};

struct ExecRequest {
  std::string source;
  EntryKind entry = EntryKind::Program;
  std::optional<std::string> call_source;  // required iff entry == Call
  ExecLimits limits;
};

enum class ExecErrorKind { Syntax, Runtime, ForbiddenImport, Timeout, ObjectLimit, Protocol };

std::string_view to_string(ExecErrorKind kind);
std::optional<ExecErrorKind> parse_exec_error_kind(std::string_view s);

struct ExecError {
  ExecErrorKind kind = ExecErrorKind::Runtime;
  std::string message;
  std::optional<int> line;

  /// Human-readable text used as LLM feedback.
  std::string describe() const;
};

using ExecOutcome = std::variant<ObjectTrace, ExecError>;

// Wire protocol: one JSON object per line in each direction.
//   request:  {"source", "entry": "program"|"call", "call_source"?,
//              "limits": {"timeout_s", "max_objects", "rng_seed"}}
//   response: {"ok": true, "trace": {"objects": [...], "events": [...]}}
//           | {"ok": false, "error": {"kind", "message", "line"?}}

/// Throws InvalidArgument when the request breaks its invariants.
void validate_request(const ExecRequest& req);

nlohmann::json request_to_json(const ExecRequest& req);
ExecRequest request_from_json(const nlohmann::json& j);
std::string encode_request(const ExecRequest& req);

nlohmann::json trace_to_json(const ObjectTrace& trace);
/// Throws Parse on malformed traces (bad arrays, non-orthonormal rotation).
ObjectTrace trace_from_json(const nlohmann::json& j);

nlohmann::json response_to_json(const ExecOutcome& outcome);
std::string encode_response(const ExecOutcome& outcome);
/// Malformed responses decode to ExecError{Protocol}.
ExecOutcome decode_response(std::string_view line);

}  // namespace smc
