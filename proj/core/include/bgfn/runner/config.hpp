#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bgfn/boosting/boosted_loss.hpp"
#include "bgfn/env/grid_env.hpp"
#include "bgfn/env/seq_env.hpp"
#include "bgfn/gfn/grid_policy.hpp"
#include "bgfn/gfn/seq_policy.hpp"
#include "bgfn/numkit/adamw.hpp"
#include "bgfn/rewards/grid_rewards.hpp"
#include "bgfn/rewards/seq_rewards.hpp"

namespace bgfn::runner {

using ConfigMap = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment. Duplicate keys and
/// malformed lines raise ConfigError naming the line.
[[nodiscard]] ConfigMap parse_config_text(std::string_view text, const std::string& origin = "<config>");
[[nodiscard]] ConfigMap read_config_file(const std::string& path);
/// Splits "key=value" as given on the command line.
[[nodiscard]] std::pair<std::string, std::string> parse_override(std::string_view assignment);
[[nodiscard]] std::string format_config(const ConfigMap& values);

enum class EnvKind { kGrid, kSequence };
enum class LossVariant { kTb, kBoosted };

/// Fully resolved run settings. `values` holds every key, defaults included,
/// in canonical text form; checkpoints store it verbatim.
struct RunConfig {
  ConfigMap values;

  std::string run_id;
  std::uint64_t seed = 10;
  std::string output_dir;

  EnvKind env = EnvKind::kGrid;
  env::GridConfig grid;
  gfn::GridArch grid_arch;
  env::SeqConfig seq;
  gfn::SeqArch seq_arch;

  rewards::GridRewardSpec grid_reward;
  rewards::SeqRewardConfig seq_reward;
  std::string scorer = "synthetic";
  std::string scorer_command;

  std::int64_t epochs = 0;
  std::size_t batch_size = 0;
  double epsilon = 0.0;
  numkit::AdamWConfig optimizer;

  LossVariant loss = LossVariant::kBoosted;
  std::vector<std::int64_t> boost_epochs;
  std::vector<double> boost_alpha;  // one per booster, or a single shared value
  boosting::BoostConfig boost;

  std::int64_t eval_every = 0;
  std::size_t eval_samples = 0;
  double eval_threshold = 0.94;
  std::int64_t checkpoint_every = 0;

  /// Alpha for the booster that becomes stage `stage_id` (2, 3, ...).
  [[nodiscard]] double alpha_for_stage(int stage_id) const;
};

/// Defaults for the given environment kind ("grid" or "sequence").
[[nodiscard]] ConfigMap default_config(std::string_view env_kind);

/// Layers defaults, file values and overrides, rejects unknown keys and
/// validates. Errors name the offending key.
[[nodiscard]] RunConfig resolve_config(const ConfigMap& file_values, const ConfigMap& overrides = {});

/// Keys that determine parameter shapes and the environment.
[[nodiscard]] bool same_environment(const ConfigMap& a, const ConfigMap& b, std::string* mismatch = nullptr);

}  // namespace bgfn::runner
