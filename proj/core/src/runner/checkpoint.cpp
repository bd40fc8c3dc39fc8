#include "bgfn/runner/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../numkit/json_codec.hpp"
#include "bgfn/error.hpp"

namespace bgfn::runner {

using nlohmann::json;

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  json j;
  j["version"] = checkpoint.version;
  j["config"] = checkpoint.config;
  j["epoch"] = checkpoint.epoch;
  j["rng_state"] = checkpoint.rng_state;
  j["metrics_offset"] = checkpoint.metrics_offset;
  j["unique_sequences"] = checkpoint.unique_sequences;
  j["accumulators"] = checkpoint.accumulators;
  json stages = json::array();
  for (const auto& s : checkpoint.stages) {
    stages.push_back({{"id", s.id},
                      {"frozen", s.frozen},
                      {"start_epoch", s.start_epoch},
                      {"params", numkit::detail::param_set_to_json_value(s.params)}});
  }
  j["stages"] = std::move(stages);
  return j.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    c.version = j.at("version").get<int>();
    if (c.version != kCheckpointVersion) {
      throw ConfigError("checkpoint version " + std::to_string(c.version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    c.config = j.at("config").get<ConfigMap>();
    c.epoch = j.at("epoch").get<std::int64_t>();
    c.rng_state = j.at("rng_state").get<std::string>();
    c.metrics_offset = j.at("metrics_offset").get<std::uint64_t>();
    c.unique_sequences = j.at("unique_sequences").get<std::vector<std::string>>();
    c.accumulators = j.at("accumulators").get<std::map<std::string, double>>();
    for (const auto& s : j.at("stages")) {
      gfn::Stage stage;
      stage.id = s.at("id").get<int>();
      stage.frozen = s.at("frozen").get<bool>();
      stage.start_epoch = s.at("start_epoch").get<std::int64_t>();
      stage.params = numkit::detail::param_set_from_json_value(s.at("params"));
      c.stages.push_back(std::move(stage));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint is malformed: ") + e.what());
  }
  if (c.stages.empty()) {
    throw ConfigError("checkpoint holds no stages");
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ConfigError("cannot write checkpoint '" + tmp.string() + "'");
    }
    out << checkpoint_to_json(checkpoint);
    if (!out) {
      throw ConfigError("failed writing checkpoint '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open checkpoint '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace bgfn::runner
