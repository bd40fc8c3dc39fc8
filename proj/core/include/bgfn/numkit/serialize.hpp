#pragma once

#include <string>

#include "bgfn/numkit/param_set.hpp"

namespace bgfn::numkit {

/// Canonical JSON text for a ParamSet: names, groups, shapes, row-major
/// values and both moment buffers, plus the step counter. Doubles are
/// written in shortest round-trip form, so load(save(p)) is bit-exact.
std::string param_set_to_json(const ParamSet& params);
ParamSet param_set_from_json(const std::string& text);

}  // namespace bgfn::numkit
