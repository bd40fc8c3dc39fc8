#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bgfn/env/grid_env.hpp"
#include "bgfn/env/seq_env.hpp"
#include "bgfn/error.hpp"
#include "bgfn/gfn/policy_common.hpp"
#include "bgfn/gfn/tb.hpp"
#include "bgfn/gfn/trajectory.hpp"
#include "bgfn/numkit/adamw.hpp"
#include "bgfn/numkit/param_set.hpp"
#include "bgfn/numkit/rng.hpp"
#include "bgfn/numkit/scalar_tape.hpp"

namespace bgfn::gfn {

/// One ensemble member: policy parameters (including logZ) and bookkeeping.
struct Stage {
  numkit::ParamSet params;
  int id = 1;
  bool frozen = false;
  std::int64_t start_epoch = 0;  // epoch at which the stage became active

  [[nodiscard]] double log_z() const { return params.scalar(kLogZName); }
};

template <class P>
concept PolicyModel = requires(const P& p, const numkit::ParamSet& params, numkit::ParamSet& mut,
                               numkit::Rng& rng, const RolloutBatch<typename P::State>& batch,
                               std::span<const double> g, std::span<const typename P::Terminal> xs) {
  typename P::State;
  typename P::Terminal;
  { p.init_params(std::uint64_t{}) } -> std::same_as<numkit::ParamSet>;
  { p.sample_forward(params, std::size_t{}, double{}, rng, bool{}) } -> std::same_as<RolloutBatch<typename P::State>>;
  { p.log_flow_estimates(params, xs, int{}, rng) } -> std::same_as<std::vector<double>>;
  { P::terminal_of(batch.records.front()) } -> std::convertible_to<typename P::Terminal>;
  p.backprop(mut, batch, g, g);
};

template <class R, class P>
concept RewardModel = requires(const R& r, const typename P::Terminal& x) {
  { r.log_reward(x) } -> std::convertible_to<double>;
};

struct TrainSettings {
  std::size_t batch_size = 128;
  double epsilon = 0.0;
  numkit::AdamWConfig optimizer;
};

/// Loss-branch counters are only filled by the boosted objective.
struct StepStats {
  double mean_loss = 0.0;
  std::size_t boosted = 0;
  std::size_t nabla = 0;
  std::size_t clamped = 0;
};

inline std::string describe_state(const env::GridState& s) {
  return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ",t=" + std::to_string(s.t) + ")";
}

inline std::string describe_state(const env::SeqState& s) {
  const auto toks = s.tokens();
  return "\"" + env::tokens_to_string(toks) + "\"" + (s.terminated ? "#" : "");
}

template <class State>
std::string describe_trajectory(const TrajectoryRecord<State>& rec) {
  std::ostringstream out;
  out.precision(17);
  out << "log_pf=" << rec.log_pf << " log_pb=" << rec.log_pb << " log_reward=" << rec.log_reward
      << " actions=[";
  for (std::size_t i = 0; i < rec.actions.size(); ++i) {
    out << (i ? " " : "") << rec.actions[i];
  }
  out << "] states=";
  for (const auto& s : rec.states) {
    out << describe_state(s);
  }
  return out.str();
}

/// Builds the per-trajectory losses `loss(tape, index, log_rhat, record)`
/// for a scored batch, back-propagates their mean into params' gradients
/// and returns the mean. Gradients are accumulated, not reset.
template <PolicyModel Policy, class Loss>
double accumulate_gradients(numkit::ParamSet& params, const Policy& policy,
                            const RolloutBatch<typename Policy::State>& batch, Loss&& loss) {
  const std::size_t n = batch.records.size();
  numkit::ScalarTape tape;
  const Var log_z = tape.param(params, kLogZName);
  std::vector<Var> pf_leaves(n);
  std::vector<Var> pb_leaves(n);
  std::vector<Var> losses(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = batch.records[i];
    const std::string tag = "traj[" + std::to_string(i) + "]";
    pf_leaves[i] = tape.leaf(rec.log_pf, tag + ".log_pf");
    pb_leaves[i] = tape.leaf(rec.log_pb, tag + ".log_pb");
    losses[i] = loss(tape, i, log_rhat(tape, log_z, pf_leaves[i], pb_leaves[i]), rec);
    if (!std::isfinite(tape.value(losses[i]))) {
      throw NumericError("non-finite loss " + std::to_string(tape.value(losses[i])) + " at " + tag + ": " +
                         describe_trajectory(rec));
    }
  }
  const Var mean = tape.mean(losses);
  tape.backward(mean);

  std::vector<double> d_log_pf(n);
  std::vector<double> d_log_pb(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_log_pf[i] = tape.adjoint(pf_leaves[i]);
    d_log_pb[i] = tape.adjoint(pb_leaves[i]);
  }
  policy.backprop(params, batch, d_log_pf, d_log_pb);
  return tape.value(mean);
}

/// Samples a batch from `params`, scores it, accumulates the gradient of
/// the mean loss and takes one AdamW step. `prepare(records)` runs after
/// scoring and before the losses are built.
template <PolicyModel Policy, class Reward, class Prepare, class Loss>
  requires RewardModel<Reward, Policy>
double optimize_on_batch(numkit::ParamSet& params, const Policy& policy, const Reward& reward,
                         const TrainSettings& settings, numkit::Rng& rng, Prepare&& prepare, Loss&& loss) {
  if (settings.batch_size == 0) {
    throw ConfigError("train.batch_size must be positive");
  }
  auto batch = policy.sample_forward(params, settings.batch_size, settings.epsilon, rng, true);
  for (auto& rec : batch.records) {
    rec.log_reward = reward.log_reward(Policy::terminal_of(rec));
  }
  prepare(std::span<const TrajectoryRecord<typename Policy::State>>(batch.records));
  const double mean = accumulate_gradients(params, policy, batch, loss);
  numkit::adamw_step(params, settings.optimizer);
  return mean;
}

/// One trajectory-balance step on a single unfrozen stage.
template <PolicyModel Policy, class Reward>
  requires RewardModel<Reward, Policy>
StepStats train_step(Stage& stage, const Policy& policy, const Reward& reward, const TrainSettings& settings,
                     numkit::Rng& rng) {
  if (stage.frozen) {
    throw UsageError("train_step: stage " + std::to_string(stage.id) + " is frozen");
  }
  StepStats stats;
  stats.mean_loss = optimize_on_batch(
      stage.params, policy, reward, settings, rng, [](auto) {},
      [](numkit::ScalarTape& tape, std::size_t, Var lrh, const auto& rec) { return tb_loss(tape, lrh, rec.log_reward); });
  return stats;
}

}  // namespace bgfn::gfn
