#include "smc/exec/trace.hpp"

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/scene/arrangement_io.hpp"

namespace smc {

using nlohmann::json;

std::vector<SceneObject> to_scene_objects(const ObjectTrace& trace) {
  std::vector<SceneObject> out;
  out.reserve(trace.objects.size());
  for (std::size_t i = 0; i < trace.objects.size(); ++i) {
    const auto& t = trace.objects[i];
    SceneObject o;
    o.id = fmt::format("trace_{}", i + 1);
    o.label = t.label;
    o.half_size = t.half_size;
    o.position = t.position;
    o.rotation = t.rotation;
    out.push_back(std::move(o));
  }
  return out;
}

ObjectTrace trace_from_arrangement(const Arrangement& arrangement) {
  ObjectTrace t;
  for (const auto& o : arrangement.objects) {
    t.objects.push_back({o.label, o.half_size, o.position, o.rotation});
  }
  return t;
}

std::string_view to_string(ExecErrorKind kind) {
  switch (kind) {
    case ExecErrorKind::Syntax: return "syntax";
    case ExecErrorKind::Runtime: return "runtime";
    case ExecErrorKind::ForbiddenImport: return "forbidden-import";
    case ExecErrorKind::Timeout: return "timeout";
    case ExecErrorKind::ObjectLimit: return "object-limit";
    case ExecErrorKind::Protocol: return "protocol";
  }
  return "runtime";
}

std::optional<ExecErrorKind> parse_exec_error_kind(std::string_view s) {
  for (auto k : {ExecErrorKind::Syntax, ExecErrorKind::Runtime, ExecErrorKind::ForbiddenImport,
                 ExecErrorKind::Timeout, ExecErrorKind::ObjectLimit, ExecErrorKind::Protocol}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string ExecError::describe() const {
  std::string out = fmt::format("{} error", to_string(kind));
  if (line) out += fmt::format(" at line {}", *line);
  return out + ": " + message;
}

void validate_request(const ExecRequest& req) {
  if (!(req.limits.timeout_s > 0)) {
    throw Error(ErrorKind::InvalidArgument, "timeout_s must be positive");
  }
  if (req.limits.max_objects < 1) {
    throw Error(ErrorKind::InvalidArgument, "max_objects must be at least 1");
  }
  if ((req.entry == EntryKind::Call) != req.call_source.has_value()) {
    throw Error(ErrorKind::InvalidArgument, "call_source is required exactly for call requests");
  }
}

json request_to_json(const ExecRequest& req) {
  json j = {{"source", req.source},
            {"entry", req.entry == EntryKind::Program ? "program" : "call"},
            {"limits",
             {{"timeout_s", req.limits.timeout_s},
              {"max_objects", req.limits.max_objects},
              {"rng_seed", req.limits.rng_seed}}}};
  if (req.call_source) j["call_source"] = *req.call_source;
  return j;
}

ExecRequest request_from_json(const json& j) {
  ExecRequest req;
  req.source = j.at("source").get<std::string>();
  const auto entry = j.at("entry").get<std::string>();
  if (entry == "program") req.entry = EntryKind::Program;
  else if (entry == "call") req.entry = EntryKind::Call;
  else throw Error(ErrorKind::Parse, "unknown entry kind '" + entry + "'");
  if (j.contains("call_source") && !j["call_source"].is_null()) {
    req.call_source = j["call_source"].get<std::string>();
  }
  if (j.contains("limits")) {
    const json& l = j["limits"];
    req.limits.timeout_s = l.value("timeout_s", req.limits.timeout_s);
    req.limits.max_objects = l.value("max_objects", req.limits.max_objects);
    req.limits.rng_seed = l.value("rng_seed", req.limits.rng_seed);
  }
  return req;
}

std::string encode_request(const ExecRequest& req) {
  validate_request(req);
  return request_to_json(req).dump() + "\n";
}

json trace_to_json(const ObjectTrace& trace) {
  json objs = json::array();
  for (const auto& o : trace.objects) {
    objs.push_back({{"label", o.label},
                    {"half_size", vec3_to_json(o.half_size)},
                    {"position", vec3_to_json(o.position)},
                    {"rotation", rotation_to_json(o.rotation)}});
  }
  json events = json::array();
  for (const auto& e : trace.events) events.push_back({{"op", e.op}, {"args", e.args}});
  return {{"objects", std::move(objs)}, {"events", std::move(events)}};
}

ObjectTrace trace_from_json(const json& j) {
  if (!j.is_object() || !j.contains("objects") || !j["objects"].is_array()) {
    throw Error(ErrorKind::Parse, "trace must contain an 'objects' array");
  }
  ObjectTrace t;
  for (const auto& jo : j["objects"]) {
    TraceObject o;
    o.label = jo.at("label").get<std::string>();
    o.half_size = vec3_from_json(jo.at("half_size"), "half_size");
    o.position = vec3_from_json(jo.at("position"), "position");
    o.rotation = jo.contains("rotation") ? rotation_from_json(jo["rotation"], "rotation")
                                         : Rotation::Identity();
    t.objects.push_back(std::move(o));
  }
  if (j.contains("events")) {
    for (const auto& je : j["events"]) {
      t.events.push_back({je.at("op").get<std::string>(), je.value("args", json::array())});
    }
  }
  return t;
}

json response_to_json(const ExecOutcome& outcome) {
  if (const auto* t = std::get_if<ObjectTrace>(&outcome)) {
    return {{"ok", true}, {"trace", trace_to_json(*t)}};
  }
  const auto& e = std::get<ExecError>(outcome);
  json err = {{"kind", to_string(e.kind)}, {"message", e.message}};
  if (e.line) err["line"] = *e.line;
  return {{"ok", false}, {"error", std::move(err)}};
}

std::string encode_response(const ExecOutcome& outcome) {
  return response_to_json(outcome).dump() + "\n";
}

ExecOutcome decode_response(std::string_view line) {
  try {
    const json j = json::parse(line);
    if (!j.is_object() || !j.contains("ok") || !j["ok"].is_boolean()) {
      return ExecError{ExecErrorKind::Protocol, "response lacks a boolean 'ok' field", {}};
    }
    if (j["ok"].get<bool>()) {
      if (!j.contains("trace")) {
        return ExecError{ExecErrorKind::Protocol, "ok response lacks a trace", {}};
      }
      return trace_from_json(j["trace"]);
    }
    const json& e = j.at("error");
    ExecError err;
    const auto kind = parse_exec_error_kind(e.value("kind", ""));
    err.kind = kind.value_or(ExecErrorKind::Protocol);
    err.message = e.value("message", "");
    if (err.message.empty()) err.message = "worker reported an error without a message";
    if (e.contains("line") && e["line"].is_number_integer()) err.line = e["line"].get<int>();
    return err;
  } catch (const std::exception& ex) {
    return ExecError{ExecErrorKind::Protocol, std::string("malformed worker response: ") + ex.what(),
                     {}};
  }
}

}  // namespace smc
