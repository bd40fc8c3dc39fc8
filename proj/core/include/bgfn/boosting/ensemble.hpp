#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "bgfn/boosting/boosted_loss.hpp"
#include "bgfn/error.hpp"
#include "bgfn/gfn/train.hpp"
#include "bgfn/numkit/logspace.hpp"
#include "bgfn/numkit/rng.hpp"

namespace bgfn::boosting {

/// Frozen members in activation order followed by one trainable stage.
class Ensemble {
 public:
  Ensemble(gfn::Stage active, BoostConfig config);

  [[nodiscard]] std::span<const gfn::Stage> frozen() const { return frozen_; }
  [[nodiscard]] gfn::Stage& active() { return active_; }
  [[nodiscard]] const gfn::Stage& active() const { return active_; }
  [[nodiscard]] std::size_t stage_count() const { return frozen_.size() + 1; }
  /// Frozen stages then the active one.
  [[nodiscard]] std::vector<const gfn::Stage*> stages() const;

  [[nodiscard]] const BoostConfig& config() const { return config_; }
  void set_alpha(double alpha);

  /// Freezes the active stage and installs `fresh` as the new active stage.
  void freeze_and_spawn(numkit::ParamSet fresh);

  /// Rebuilds an ensemble from saved stages (last one is active).
  static Ensemble restore(std::vector<gfn::Stage> stages, BoostConfig config);

 private:
  std::vector<gfn::Stage> frozen_;
  gfn::Stage active_;
  BoostConfig config_;
};

/// New active stage initialized exactly like the baseline: same seed.
template <gfn::PolicyModel Policy>
void freeze_and_spawn(Ensemble& ensemble, const Policy& policy, std::uint64_t baseline_seed) {
  ensemble.freeze_and_spawn(policy.init_params(baseline_seed));
}

struct ResidualEstimate {
  double log_r_old = -std::numeric_limits<double>::infinity();
  std::vector<double> member_log_flows;
};

/// log of the K-sample mean of Z * P_F / P_B under the member's own
/// backward policy, one value per terminal.
template <gfn::PolicyModel Policy>
std::vector<double> estimate_member_reward(const gfn::Stage& member, const Policy& policy,
                                           std::span<const typename Policy::Terminal> xs, int k, numkit::Rng& rng) {
  return policy.log_flow_estimates(member.params, xs, k, rng);
}

/// log_sum_exp of the member estimates over `members`. Draws nothing from
/// rng when `members` is empty.
template <gfn::PolicyModel Policy>
std::vector<ResidualEstimate> estimate_residual(std::span<const gfn::Stage* const> members, const Policy& policy,
                                                std::span<const typename Policy::Terminal> xs, int k,
                                                numkit::Rng& rng) {
  std::vector<ResidualEstimate> out(xs.size());
  for (const gfn::Stage* member : members) {
    const auto flows = estimate_member_reward(*member, policy, xs, k, rng);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i].member_log_flows.push_back(flows[i]);
    }
  }
  for (auto& est : out) {
    if (!est.member_log_flows.empty()) {
      est.log_r_old = numkit::log_sum_exp(est.member_log_flows);
    }
  }
  return out;
}

/// R_old over the frozen members of the ensemble with the configured K.
template <gfn::PolicyModel Policy>
std::vector<ResidualEstimate> estimate_rold(const Ensemble& ensemble, const Policy& policy,
                                            std::span<const typename Policy::Terminal> xs, numkit::Rng& rng) {
  std::vector<const gfn::Stage*> members;
  for (const auto& s : ensemble.frozen()) {
    members.push_back(&s);
  }
  return estimate_residual<Policy>(members, policy, xs, ensemble.config().k, rng);
}

/// Supplies log R_old for each trajectory terminal in a batch.
template <class Policy>
using RoldProvider =
    std::function<std::vector<double>(std::span<const typename Policy::Terminal>, numkit::Rng&)>;

/// One boosted step on the active stage. `r_old` overrides the ensemble
/// estimate when set.
template <gfn::PolicyModel Policy, class Reward>
  requires gfn::RewardModel<Reward, Policy>
gfn::StepStats boosted_train_step(Ensemble& ensemble, const Policy& policy, const Reward& reward,
                                  const gfn::TrainSettings& settings, numkit::Rng& rng,
                                  const RoldProvider<Policy>& r_old = {}) {
  const BoostConfig& cfg = ensemble.config();
  std::vector<double> log_r_old;
  gfn::StepStats stats;
  auto prepare = [&](std::span<const gfn::TrajectoryRecord<typename Policy::State>> records) {
    std::vector<typename Policy::Terminal> xs;
    xs.reserve(records.size());
    for (const auto& rec : records) {
      xs.push_back(Policy::terminal_of(rec));
    }
    if (r_old) {
      log_r_old = r_old(xs, rng);
    } else {
      const auto est = estimate_rold(ensemble, policy, std::span<const typename Policy::Terminal>(xs), rng);
      log_r_old.resize(est.size());
      for (std::size_t i = 0; i < est.size(); ++i) {
        log_r_old[i] = est[i].log_r_old;
      }
    }
    if (log_r_old.size() != records.size()) {
      throw UsageError("residual provider returned the wrong number of values");
    }
  };
  auto loss = [&](numkit::ScalarTape& tape, std::size_t i, Var lrh, const auto& rec) {
    LossBranch branch{};
    const Var v = select_loss(tape, lrh, rec.log_reward, log_r_old[i], cfg, &branch);
    switch (branch) {
      case LossBranch::kBoosted: ++stats.boosted; break;
      case LossBranch::kNabla: ++stats.nabla; break;
      case LossBranch::kClamped: ++stats.clamped; break;
    }
    return v;
  };
  stats.mean_loss = gfn::optimize_on_batch(ensemble.active().params, policy, reward, settings, rng, prepare, loss);
  return stats;
}

/// Stage selection probabilities Z_i / sum_j Z_j over all stages.
[[nodiscard]] std::vector<double> stage_weights(const Ensemble& ensemble);

template <class Terminal>
struct EnsembleSample {
  Terminal terminal;
  int stage = 1;  // 1-based stage id
};

/// Two-step sampler: pick a stage with probability proportional to Z, then
/// roll out that stage's forward policy without exploration.
template <gfn::PolicyModel Policy>
std::vector<EnsembleSample<typename Policy::Terminal>> ensemble_sample(const Ensemble& ensemble,
                                                                       const Policy& policy, numkit::Rng& rng,
                                                                       std::size_t count) {
  const auto weights = stage_weights(ensemble);
  const auto stages = ensemble.stages();
  std::vector<std::size_t> picks(count);
  std::vector<std::size_t> per_stage(stages.size(), 0);
  for (auto& p : picks) {
    p = numkit::sample_categorical(weights, rng);
    ++per_stage[p];
  }
  std::vector<std::vector<typename Policy::Terminal>> drawn(stages.size());
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (per_stage[s] == 0) {
      continue;
    }
    const auto batch = policy.sample_forward(stages[s]->params, per_stage[s], 0.0, rng, false);
    for (const auto& rec : batch.records) {
      drawn[s].push_back(Policy::terminal_of(rec));
    }
  }
  std::vector<std::size_t> cursor(stages.size(), 0);
  std::vector<EnsembleSample<typename Policy::Terminal>> out;
  out.reserve(count);
  for (std::size_t p : picks) {
    out.push_back({drawn[p][cursor[p]++], stages[p]->id});
  }
  return out;
}

}  // namespace bgfn::boosting
