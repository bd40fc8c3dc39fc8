#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bgfn/env/grid_env.hpp"
#include "bgfn/gfn/trajectory.hpp"
#include "bgfn/numkit/mlp.hpp"
#include "bgfn/numkit/param_set.hpp"
#include "bgfn/numkit/rng.hpp"

namespace bgfn::gfn {

struct GridArch {
  int hidden = 128;
  int hidden_layers = 2;
  int frequencies = 8;
};

/// Forward and backward MLP policies on the lattice, plus a learned logZ.
/// Parameters live in a ParamSet with groups "pf", "pb" and "logz".
class GridPolicy {
 public:
  using State = env::GridState;
  using Terminal = env::GridPos;
  static constexpr bool kLearnedBackward = true;

  explicit GridPolicy(env::GridConfig grid, GridArch arch = {});

  [[nodiscard]] const env::GridConfig& grid() const { return grid_; }
  [[nodiscard]] const GridArch& arch() const { return arch_; }
  [[nodiscard]] const numkit::MlpShape& forward_shape() const { return pf_shape_; }
  [[nodiscard]] const numkit::MlpShape& backward_shape() const { return pb_shape_; }

  [[nodiscard]] numkit::ParamSet init_params(std::uint64_t seed) const;
  void check_params(const numkit::ParamSet& params) const;

  [[nodiscard]] static Terminal terminal_of(const TrajectoryRecord<State>& record) {
    const State& s = record.states.back();
    return {s.x, s.y};
  }

  [[nodiscard]] std::array<double, env::kGridActionCount> forward_probs(const numkit::ParamSet& params,
                                                                       State s) const;
  [[nodiscard]] std::array<double, env::kGridActionCount> backward_probs(const numkit::ParamSet& params,
                                                                        State s) const;

  /// Lockstep rollouts of n trajectories of length T. Actions come from the
  /// epsilon-mixture; recorded log-probabilities do not.
  [[nodiscard]] RolloutBatch<State> sample_forward(const numkit::ParamSet& params, std::size_t n,
                                                   double epsilon, numkit::Rng& rng,
                                                   bool keep_tapes = false) const;

  /// Backward rollouts from each terminal under the backward policy, with
  /// log_pf filled in along the reversed path.
  [[nodiscard]] std::vector<TrajectoryRecord<State>> sample_backward(const numkit::ParamSet& params,
                                                                     std::span<const Terminal> xs,
                                                                     numkit::Rng& rng) const;

  /// Recomputes log_pf and log_pb of fixed trajectories under `params`,
  /// keeping the tapes needed by backprop. Rewards are copied through.
  [[nodiscard]] RolloutBatch<State> rescore(const numkit::ParamSet& params,
                                            std::span<const TrajectoryRecord<State>> records) const;

  [[nodiscard]] double traj_log_pf(const numkit::ParamSet& params,
                                   const TrajectoryRecord<State>& record) const;
  [[nodiscard]] double traj_log_pb(const numkit::ParamSet& params,
                                   const TrajectoryRecord<State>& record) const;

  /// Per terminal: log of the mean over k backward samples of Z * PF / PB.
  [[nodiscard]] std::vector<double> log_flow_estimates(const numkit::ParamSet& params,
                                                       std::span<const Terminal> xs, int k,
                                                       numkit::Rng& rng) const;

  /// Accumulates into params' gradients the derivative of
  /// sum_i d_log_pf[i] * log_pf_i + d_log_pb[i] * log_pb_i.
  void backprop(numkit::ParamSet& params, const RolloutBatch<State>& batch,
                std::span<const double> d_log_pf, std::span<const double> d_log_pb) const;

 private:
  numkit::Matrix encode(std::span<const State> states) const;
  // Sums log pi(a_t | s_t) per trajectory, evaluating all steps in one batch.
  std::vector<double> path_log_probs(const numkit::ParamSet& params,
                                     std::span<const TrajectoryRecord<State>> records, bool backward,
                                     PolicyStepTape* tape) const;

  env::GridConfig grid_;
  GridArch arch_;
  numkit::MlpShape pf_shape_;
  numkit::MlpShape pb_shape_;
};

}  // namespace bgfn::gfn
