#pragma once

#include <string>

#include "smc/exec/trace.hpp"

namespace smc::testing {

/// Interprets straight-line DSL programs (list bindings, create, move,
/// rotate, objs.append) without any of the library's rotation code. Used as
/// an executor stand-in when checking naive-program round trips.
ObjectTrace interpret_straight_line(const std::string& source);

}  // namespace smc::testing
