// Command line front end: train, boost, eval, sample, export-plotdata.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bgfn/error.hpp"
#include "bgfn/runner/checkpoint.hpp"
#include "bgfn/runner/config.hpp"
#include "bgfn/runner/metrics_file.hpp"
#include "bgfn/runner/run.hpp"

namespace {

using namespace bgfn;

runner::RunConfig load(const std::string& path, const std::vector<std::string>& sets) {
  runner::ConfigMap overrides;
  for (const auto& s : sets) {
    auto [k, v] = runner::parse_override(s);
    overrides[k] = v;
  }
  return runner::resolve_config(path.empty() ? runner::ConfigMap{} : runner::read_config_file(path), overrides);
}

void print_summary(const runner::TrainSummary& s) {
  std::cout << "finished at epoch " << s.epoch << " with " << s.stage_count << " stage(s)\n";
  if (s.final_l1) {
    std::cout << "final l1 " << runner::format_number(*s.final_l1) << "\n";
  }
  if (s.unique_count) {
    std::cout << "unique high-reward sequences " << *s.unique_count << "\n";
  }
  std::cout << "metrics " << s.metrics_path << "\ncheckpoint " << s.checkpoint_path << "\n";
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") {
    return std::cout;
  }
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw ConfigError("cannot write '" + path + "'");
  }
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boosted GFlowNet training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string checkpoint_path;
  bool resume = false;
  bool quiet = false;
  std::optional<std::int64_t> stop_at;

  auto* train = app.add_subcommand("train", "Run the configured schedule");
  train->add_option("-c,--config", config_path, "Config file")->check(CLI::ExistingFile);
  train->add_option("-s,--set", sets, "Override a config key (key=value)");
  train->add_flag("--resume", resume, "Continue from the run's latest checkpoint");
  train->add_option("--stop-at", stop_at, "Checkpoint and stop at this epoch");
  train->add_flag("-q,--quiet", quiet, "Suppress progress output");

  auto* boost = app.add_subcommand("boost", "Resume from a checkpoint and add a booster immediately");
  boost->add_option("-c,--config", config_path, "Config file")->check(CLI::ExistingFile);
  boost->add_option("-s,--set", sets, "Override a config key (key=value)");
  boost->add_option("--checkpoint", checkpoint_path, "Checkpoint to branch from")->required()->check(CLI::ExistingFile);
  boost->add_flag("-q,--quiet", quiet, "Suppress progress output");

  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_path;
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint");
  evalc->add_option("--checkpoint", checkpoint_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  evalc->add_option("-c,--config", config_path, "Config file (defaults to the checkpoint's)")->check(CLI::ExistingFile);
  evalc->add_option("-s,--set", sets, "Override a config key (key=value)");
  auto* eval_seed = evalc->add_option("--seed", seed, "Evaluation seed (defaults to run.seed)");
  evalc->add_option("--metrics", out_path, "Append metric rows to this CSV");

  std::size_t n = 0;
  auto* sample = app.add_subcommand("sample", "Draw terminals from a checkpoint's ensemble");
  sample->add_option("--checkpoint", checkpoint_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  sample->add_option("-n", n, "Number of samples")->required();
  sample->add_option("--seed", seed, "Sampling seed")->required();
  sample->add_option("-o,--out", out_path, "Output file (default stdout)");

  std::string metrics_dir;
  std::optional<std::string> metric;
  auto* exportc = app.add_subcommand("export-plotdata", "Merge metrics files into one long table");
  exportc->add_option("--metrics-dir", metrics_dir, "Directory searched for metrics.csv")->required();
  exportc->add_option("--metric", metric, "Keep only this metric");
  exportc->add_option("-o,--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train->parsed() || boost->parsed()) {
      const auto cfg = load(config_path, sets);
      runner::TrainOptions opt;
      opt.resume = resume;
      opt.stop_at = stop_at;
      opt.log = quiet ? nullptr : &std::cerr;
      if (boost->parsed()) {
        opt.from_checkpoint = checkpoint_path;
        opt.spawn_on_start = true;
      }
      print_summary(runner::run_training(cfg, opt));
    } else if (evalc->parsed()) {
      const auto ck = runner::load_checkpoint(checkpoint_path);
      runner::ConfigMap base = config_path.empty() ? ck.config : runner::read_config_file(config_path);
      runner::RunConfig cfg;
      {
        runner::ConfigMap overrides;
        for (const auto& s : sets) {
          auto [k, v] = runner::parse_override(s);
          overrides[k] = v;
        }
        cfg = runner::resolve_config(base, overrides);
      }
      seed_given = eval_seed->count() > 0;
      const auto report = runner::run_eval(cfg, ck, seed_given ? seed : cfg.seed);
      std::cout << "checkpoint epoch " << ck.epoch << ", " << ck.stages.size() << " stage(s)\n";
      for (const auto& row : report.rows) {
        std::cout << row.metric << " " << runner::format_number(row.value) << "\n";
      }
      if (!out_path.empty()) {
        std::ofstream file(out_path, std::ios::binary | std::ios::app);
        if (!file) {
          throw ConfigError("cannot append to '" + out_path + "'");
        }
        for (const auto& row : report.rows) {
          file << runner::format_row(row) << '\n';
        }
      }
    } else if (sample->parsed()) {
      const auto ck = runner::load_checkpoint(checkpoint_path);
      std::ofstream file;
      auto& out = open_out(out_path, file);
      runner::run_sample(ck, n, seed, out);
    } else if (exportc->parsed()) {
      std::ofstream file;
      auto& out = open_out(out_path, file);
      runner::export_plotdata(metrics_dir, metric, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
