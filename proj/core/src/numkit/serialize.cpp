#include "bgfn/numkit/serialize.hpp"

#include "bgfn/error.hpp"
#include "json_codec.hpp"

namespace bgfn::numkit {

namespace detail {

namespace {

nlohmann::json flatten(const Matrix& m) {
  return nlohmann::json(std::vector<double>(m.data(), m.data() + m.size()));
}

void unflatten(const nlohmann::json& j, Matrix& m, const std::string& what) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(m.size())) {
    throw ConfigError("checkpoint array '" + what + "' has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(m.size()));
  }
  std::copy(values.begin(), values.end(), m.data());
}

}  // namespace

nlohmann::json param_set_to_json_value(const ParamSet& params) {
  nlohmann::json arrays = nlohmann::json::array();
  for (const Param& p : params.params()) {
    arrays.push_back({{"name", p.name},
                      {"group", p.group},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"value", flatten(p.value)},
                      {"moment1", flatten(p.moment1)},
                      {"moment2", flatten(p.moment2)}});
  }
  return {{"step", params.step}, {"arrays", std::move(arrays)}};
}

ParamSet param_set_from_json_value(const nlohmann::json& j) {
  try {
    ParamSet params;
    params.step = j.at("step").get<std::int64_t>();
    for (const auto& a : j.at("arrays")) {
      const auto name = a.at("name").get<std::string>();
      Param& p = params.add(name, a.at("group").get<std::string>(), a.at("rows").get<Index>(),
                            a.at("cols").get<Index>());
      unflatten(a.at("value"), p.value, name + ".value");
      unflatten(a.at("moment1"), p.moment1, name + ".moment1");
      unflatten(a.at("moment2"), p.moment2, name + ".moment2");
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed parameter block: ") + e.what());
  }
}

}  // namespace detail

std::string param_set_to_json(const ParamSet& params) {
  return detail::param_set_to_json_value(params).dump();
}

ParamSet param_set_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("parameter JSON does not parse: ") + e.what());
  }
  return detail::param_set_from_json_value(j);
}

}  // namespace bgfn::numkit
