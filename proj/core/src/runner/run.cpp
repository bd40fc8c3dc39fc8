#include "bgfn/runner/run.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <memory>

#include "bgfn/boosting/ensemble.hpp"
#include "bgfn/error.hpp"
#include "bgfn/rewards/external_scorer.hpp"

namespace bgfn::runner {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t { kTrainStream = 1, kEvalStream = 2 };

numkit::Rng training_rng(std::uint64_t seed) { return numkit::Rng(numkit::derive_seed(seed, kTrainStream)); }
numkit::Rng eval_rng(std::uint64_t seed, std::int64_t epoch) {
  return numkit::Rng(numkit::derive_seed(seed, kEvalStream, static_cast<std::uint64_t>(epoch)));
}

// Builds the policy and reward for cfg and hands them to f.
template <class F>
decltype(auto) with_model(const RunConfig& cfg, F&& f) {
  if (cfg.env == EnvKind::kGrid) {
    const gfn::GridPolicy policy(cfg.grid, cfg.grid_arch);
    const auto reward = rewards::GridRewardField::build(cfg.grid, cfg.grid_reward);
    return f(policy, reward);
  }
  const gfn::SeqPolicy policy(cfg.seq, cfg.seq_arch);
  std::shared_ptr<const rewards::ProxyScorer> scorer;
  if (cfg.scorer == "external") {
    scorer = std::make_shared<rewards::ExternalProcessScorer>(cfg.scorer_command);
  } else {
    scorer = std::make_shared<rewards::SyntheticScorer>();
  }
  const rewards::SeqReward reward(scorer, cfg.seq_reward);
  return f(policy, reward);
}

struct EvalContext {
  const RunConfig& cfg;
  std::int64_t epoch;
  eval::UniqueSequenceTracker* tracker;
  numkit::Rng rng;
};

MetricRow make_row(const RunConfig& cfg, const boosting::Ensemble& ensemble, std::int64_t epoch,
                   std::string metric, double value) {
  return MetricRow{cfg.run_id, epoch, std::move(metric), value, cfg.seed, cfg.epsilon,
                   ensemble.config().alpha, ensemble.stage_count()};
}

void evaluate(const gfn::GridPolicy& policy, const rewards::GridRewardField& reward,
              const boosting::Ensemble& ensemble, EvalContext& ctx, EvalSummary& out) {
  auto report = eval::evaluate_l1(ensemble, policy, reward, ctx.cfg.boost.eval_b, ctx.rng, ctx.epoch);
  out.rows.push_back(make_row(ctx.cfg, ensemble, ctx.epoch, "l1", report.l1));
  out.l1 = std::move(report);
}

void evaluate(const gfn::SeqPolicy& policy, const rewards::SeqReward& reward, const boosting::Ensemble& ensemble,
              EvalContext& ctx, EvalSummary& out) {
  const auto report = eval::unique_high_reward(ensemble, policy, reward, ctx.cfg.eval_samples,
                                               ctx.cfg.eval_threshold, *ctx.tracker, ctx.rng, ctx.epoch);
  out.rows.push_back(make_row(ctx.cfg, ensemble, ctx.epoch, "unique_count", static_cast<double>(report.cumulative)));
  out.rows.push_back(make_row(ctx.cfg, ensemble, ctx.epoch, "new_unique", static_cast<double>(report.new_unique)));
  out.unique = report;
}

template <class Policy>
void check_stages(const Policy& policy, std::span<const gfn::Stage> stages) {
  for (const auto& s : stages) {
    policy.check_params(s.params);
  }
}

boosting::BoostConfig boost_config_for(const RunConfig& cfg, int active_id) {
  boosting::BoostConfig b = cfg.boost;
  b.alpha = active_id >= 2 ? cfg.alpha_for_stage(active_id) : cfg.boost_alpha.front();
  return b;
}

template <class Policy, class Reward>
TrainSummary train_loop(const RunConfig& cfg, const Policy& policy, const Reward& reward, const TrainOptions& opt) {
  const RunPaths paths = run_paths(cfg);
  fs::create_directories(paths.run_dir);

  std::optional<boosting::Ensemble> ensemble;
  numkit::Rng rng;
  std::int64_t epoch = 0;
  eval::UniqueSequenceTracker tracker;
  MetricsWriter metrics;
  std::map<std::string, double> acc;

  if (opt.resume || opt.from_checkpoint) {
    const std::string source = opt.from_checkpoint ? *opt.from_checkpoint : paths.latest_checkpoint;
    Checkpoint ck = load_checkpoint(source);
    std::string mismatch;
    if (!same_environment(ck.config, cfg.values, &mismatch)) {
      throw ConfigError("checkpoint '" + source + "' was written for a different environment (" + mismatch + ")");
    }
    check_stages<Policy>(policy, ck.stages);
    const int active_id = ck.stages.back().id;
    ensemble.emplace(boosting::Ensemble::restore(std::move(ck.stages), boost_config_for(cfg, active_id)));
    rng = numkit::load_rng_state(ck.rng_state);
    epoch = ck.epoch;
    for (const auto& s : ck.unique_sequences) {
      tracker.insert(s);
    }
    acc = ck.accumulators;
    if (opt.from_checkpoint && !opt.resume) {
      // Branching off an existing run: keep rows up to the checkpoint.
      if (fs::exists(paths.metrics) && fs::file_size(paths.metrics) >= ck.metrics_offset && ck.metrics_offset > 0) {
        metrics.open_at(paths.metrics, ck.metrics_offset);
      } else {
        metrics.open_fresh(paths.metrics);
      }
    } else {
      metrics.open_at(paths.metrics, ck.metrics_offset);
    }
  } else {
    ensemble.emplace(gfn::Stage{policy.init_params(cfg.seed), 1, false, 0}, boost_config_for(cfg, 1));
    rng = training_rng(cfg.seed);
    metrics.open_fresh(paths.metrics);
  }

  auto snapshot = [&]() {
    Checkpoint ck;
    ck.config = cfg.values;
    ck.epoch = epoch;
    for (const auto& s : ensemble->frozen()) {
      ck.stages.push_back(s);
    }
    ck.stages.push_back(ensemble->active());
    ck.rng_state = numkit::save_rng_state(rng);
    ck.metrics_offset = metrics.offset();
    ck.unique_sequences.assign(tracker.items().begin(), tracker.items().end());
    ck.accumulators = acc;
    return ck;
  };
  auto write_checkpoint = [&](bool named) {
    const Checkpoint ck = snapshot();
    if (named) {
      save_checkpoint(ck, paths.checkpoint_at(epoch));
    }
    save_checkpoint(ck, paths.latest_checkpoint);
  };
  auto spawn = [&]() {
    write_checkpoint(true);
    boosting::freeze_and_spawn(*ensemble, policy, cfg.seed);
    ensemble->active().start_epoch = epoch;
    ensemble->set_alpha(boost_config_for(cfg, ensemble->active().id).alpha);
    rng = training_rng(cfg.seed);
    if (opt.log != nullptr) {
      *opt.log << "epoch " << epoch << ": stage " << ensemble->active().id << " active (alpha "
               << ensemble->config().alpha << ")\n";
    }
  };
  auto scheduled = [&](std::int64_t e) {
    return std::find(cfg.boost_epochs.begin(), cfg.boost_epochs.end(), e) != cfg.boost_epochs.end();
  };

  if (opt.spawn_on_start && ensemble->active().start_epoch != epoch) {
    spawn();
  }

  gfn::TrainSettings settings{cfg.batch_size, cfg.epsilon, cfg.optimizer};
  while (epoch < cfg.epochs) {
    if (opt.stop_at && epoch >= *opt.stop_at) {
      break;
    }
    if (scheduled(epoch) && ensemble->active().start_epoch != epoch) {
      spawn();
    }
    gfn::StepStats stats;
    if (ensemble->frozen().empty() || cfg.loss == LossVariant::kTb) {
      stats = gfn::train_step(ensemble->active(), policy, reward, settings, rng);
    } else {
      stats = boosting::boosted_train_step(*ensemble, policy, reward, settings, rng);
    }
    ++epoch;
    acc["loss_sum"] += stats.mean_loss;
    acc["steps"] += 1.0;
    acc["boosted"] += static_cast<double>(stats.boosted);
    acc["nabla"] += static_cast<double>(stats.nabla);
    acc["clamped"] += static_cast<double>(stats.clamped);

    const bool eval_due = (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) || epoch == cfg.epochs;
    if (eval_due) {
      const auto& e = *ensemble;
      metrics.append(make_row(cfg, e, epoch, "loss", acc["loss_sum"] / acc["steps"]));
      metrics.append(make_row(cfg, e, epoch, "log_z", e.active().log_z()));
      if (!e.frozen().empty() && cfg.loss == LossVariant::kBoosted) {
        metrics.append(make_row(cfg, e, epoch, "branch_boosted", acc["boosted"]));
        metrics.append(make_row(cfg, e, epoch, "branch_nabla", acc["nabla"]));
        metrics.append(make_row(cfg, e, epoch, "branch_clamped", acc["clamped"]));
      }
      acc.clear();
      EvalContext ctx{cfg, epoch, &tracker, eval_rng(cfg.seed, epoch)};
      EvalSummary report;
      evaluate(policy, reward, e, ctx, report);
      for (const auto& row : report.rows) {
        metrics.append(row);
      }
      if (report.l1) {
        acc["last_l1"] = report.l1->l1;
      }
      if (opt.log != nullptr) {
        *opt.log << "epoch " << epoch << ":";
        for (const auto& row : report.rows) {
          *opt.log << " " << row.metric << "=" << format_number(row.value);
        }
        *opt.log << "\n";
      }
    }
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch < cfg.epochs) {
      write_checkpoint(true);
    }
  }

  TrainSummary summary;
  summary.epoch = epoch;
  summary.stage_count = ensemble->stage_count();
  summary.metrics_path = paths.metrics;
  summary.checkpoint_path = paths.checkpoint_at(epoch);
  // Saved before the closing rows so that resuming a finished run rewrites
  // them identically.
  write_checkpoint(true);
  if (epoch == cfg.epochs) {
    if (const auto it = acc.find("last_l1"); it != acc.end()) {
      metrics.append(make_row(cfg, *ensemble, epoch, "final_l1", it->second));
      summary.final_l1 = it->second;
    }
    if (cfg.env == EnvKind::kSequence) {
      metrics.append(make_row(cfg, *ensemble, epoch, "final_unique_count", static_cast<double>(tracker.size())));
      summary.unique_count = tracker.size();
    }
    (void)metrics.offset();
  }
  return summary;
}

}  // namespace

std::string RunPaths::checkpoint_at(std::int64_t epoch) const {
  return (fs::path(run_dir) / ("checkpoint_" + std::to_string(epoch) + ".json")).string();
}

RunPaths run_paths(const RunConfig& cfg) {
  const char* root = std::getenv("BGFN_OUTPUT_ROOT");
  const fs::path dir = fs::path(root != nullptr && *root != '\0' ? root : ".") / cfg.output_dir / cfg.run_id;
  return RunPaths{dir.string(), (dir / "metrics.csv").string(), (dir / "latest.json").string()};
}

TrainSummary run_training(const RunConfig& cfg, const TrainOptions& options) {
  return with_model(cfg, [&](const auto& policy, const auto& reward) {
    return train_loop(cfg, policy, reward, options);
  });
}

EvalSummary run_eval(const RunConfig& cfg, const Checkpoint& checkpoint, std::uint64_t eval_seed) {
  std::string mismatch;
  if (!same_environment(checkpoint.config, cfg.values, &mismatch)) {
    throw ConfigError("checkpoint (version " + std::to_string(checkpoint.version) +
                      ") does not match the config environment: " + mismatch);
  }
  return with_model(cfg, [&](const auto& policy, const auto& reward) {
    check_stages(policy, std::span<const gfn::Stage>(checkpoint.stages));
    auto stages = checkpoint.stages;
    const int active_id = stages.back().id;
    const auto ensemble = boosting::Ensemble::restore(std::move(stages), boost_config_for(cfg, active_id));
    eval::UniqueSequenceTracker tracker;
    for (const auto& s : checkpoint.unique_sequences) {
      tracker.insert(s);
    }
    EvalContext ctx{cfg, checkpoint.epoch, &tracker, numkit::Rng(numkit::derive_seed(eval_seed, kEvalStream))};
    EvalSummary out;
    evaluate(policy, reward, ensemble, ctx, out);
    return out;
  });
}

std::size_t run_sample(const Checkpoint& checkpoint, std::size_t n, std::uint64_t seed, std::ostream& out) {
  const RunConfig cfg = resolve_config(checkpoint.config);
  return with_model(cfg, [&](const auto& policy, const auto&) {
    check_stages(policy, std::span<const gfn::Stage>(checkpoint.stages));
    auto stages = checkpoint.stages;
    const int active_id = stages.back().id;
    const auto ensemble = boosting::Ensemble::restore(std::move(stages), boost_config_for(cfg, active_id));
    numkit::Rng rng(seed);
    const auto samples = boosting::ensemble_sample(ensemble, policy, rng, n);
    for (const auto& s : samples) {
      if constexpr (std::is_same_v<std::decay_t<decltype(policy)>, gfn::GridPolicy>) {
        out << s.terminal.x << ' ' << s.terminal.y;
      } else {
        out << env::tokens_to_string(s.terminal);
      }
      out << '\t' << s.stage << '\n';
    }
    return samples.size();
  });
}

}  // namespace bgfn::runner
