#pragma once

#include <json.hpp>

#include "bgfn/numkit/param_set.hpp"

namespace bgfn::numkit::detail {

nlohmann::json param_set_to_json_value(const ParamSet& params);
ParamSet param_set_from_json_value(const nlohmann::json& j);

}  // namespace bgfn::numkit::detail
