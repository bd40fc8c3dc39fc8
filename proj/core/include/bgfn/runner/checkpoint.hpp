#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bgfn/gfn/train.hpp"
#include "bgfn/runner/config.hpp"

namespace bgfn::runner {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to continue a run exactly where it stopped.
struct Checkpoint {
  int version = kCheckpointVersion;
  ConfigMap config;
  std::int64_t epoch = 0;
  std::vector<gfn::Stage> stages;  // frozen stages first, active stage last
  std::string rng_state;
  std::uint64_t metrics_offset = 0;
  std::vector<std::string> unique_sequences;
  std::map<std::string, double> accumulators;  // partial sums between metric rows
};

/// Canonical JSON; written to a temporary file and renamed into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
/// Throws ConfigError on unreadable files or unsupported versions.
[[nodiscard]] Checkpoint load_checkpoint(const std::string& path);

[[nodiscard]] std::string checkpoint_to_json(const Checkpoint& checkpoint);
[[nodiscard]] Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace bgfn::runner
