#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bgfn/eval/metrics.hpp"
#include "bgfn/runner/checkpoint.hpp"
#include "bgfn/runner/config.hpp"
#include "bgfn/runner/metrics_file.hpp"

namespace bgfn::runner {

/// Output locations of one run: $BGFN_OUTPUT_ROOT/<run.output_dir>/<run.id>.
struct RunPaths {
  std::string run_dir;
  std::string metrics;
  std::string latest_checkpoint;

  [[nodiscard]] std::string checkpoint_at(std::int64_t epoch) const;
};

[[nodiscard]] RunPaths run_paths(const RunConfig& cfg);

struct TrainOptions {
  bool resume = false;                         // continue from the run's latest checkpoint
  std::optional<std::string> from_checkpoint;  // continue from this checkpoint instead
  bool spawn_on_start = false;                 // freeze the loaded active stage and add a booster
  std::optional<std::int64_t> stop_at;         // write a checkpoint and stop at this epoch
  std::ostream* log = nullptr;
};

struct TrainSummary {
  std::int64_t epoch = 0;
  std::size_t stage_count = 1;
  std::optional<double> final_l1;
  std::optional<std::size_t> unique_count;
  std::string metrics_path;
  std::string checkpoint_path;
};

/// Runs the configured schedule: baseline, then a booster at each
/// activation epoch, with checkpoints at activations and at the end.
TrainSummary run_training(const RunConfig& cfg, const TrainOptions& options = {});

struct EvalSummary {
  std::optional<eval::L1Report> l1;
  std::optional<eval::UniqueCountReport> unique;
  std::vector<MetricRow> rows;
};

/// Evaluates a checkpoint. Refuses when its environment differs from cfg.
EvalSummary run_eval(const RunConfig& cfg, const Checkpoint& checkpoint, std::uint64_t eval_seed);

/// Writes n ensemble samples, one per line: the terminal ("x y" or a letter
/// string), a tab, and the 1-based stage index. Returns the count written.
std::size_t run_sample(const Checkpoint& checkpoint, std::size_t n, std::uint64_t seed, std::ostream& out);

}  // namespace bgfn::runner
