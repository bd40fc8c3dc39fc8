#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bgfn/env/grid_env.hpp"
#include "bgfn/env/seq_env.hpp"
#include "bgfn/gfn/grid_policy.hpp"
#include "bgfn/gfn/seq_policy.hpp"
#include "bgfn/gfn/trajectory.hpp"
#include "bgfn/numkit/param_set.hpp"

/// Brute-force ground truth on instances small enough to enumerate.
namespace bgfn::oracle {

inline constexpr std::size_t kTrajectoryCap = 1'000'000;

using GridTrajectory = gfn::TrajectoryRecord<env::GridState>;
using SeqTrajectory = gfn::TrajectoryRecord<env::SeqState>;

/// Every mask-valid trajectory from the origin; log fields left at zero.
/// Throws InstanceTooLargeError past `cap` trajectories.
[[nodiscard]] std::vector<GridTrajectory> enumerate_grid_trajectories(const env::GridConfig& cfg,
                                                                      std::size_t cap = kTrajectoryCap);
[[nodiscard]] std::vector<SeqTrajectory> enumerate_seq_trajectories(const env::SeqConfig& cfg,
                                                                    std::size_t cap = kTrajectoryCap);

/// All sequence terminals in the order enumerate_seq_trajectories visits them.
[[nodiscard]] std::vector<std::vector<int>> enumerate_seq_terminals(const env::SeqConfig& cfg,
                                                                    std::size_t cap = kTrajectoryCap);

struct ExactMarginals {
  std::vector<double> prob;          // per terminal, in enumeration order
  std::size_t trajectory_count = 0;
  std::vector<std::size_t> support;  // indices with prob > 0
};

[[nodiscard]] ExactMarginals exact_marginals(const gfn::GridPolicy& policy, const numkit::ParamSet& params,
                                             std::size_t cap = kTrajectoryCap);
[[nodiscard]] ExactMarginals exact_marginals(const gfn::SeqPolicy& policy, const numkit::ParamSet& params,
                                             std::size_t cap = kTrajectoryCap);

/// Mixture marginal sum_i (Z_i / sum_j Z_j) P_F^i(x).
[[nodiscard]] ExactMarginals exact_mixture(const gfn::GridPolicy& policy,
                                           std::span<const numkit::ParamSet* const> stages,
                                           std::size_t cap = kTrajectoryCap);
[[nodiscard]] ExactMarginals exact_mixture(const gfn::SeqPolicy& policy,
                                           std::span<const numkit::ParamSet* const> stages,
                                           std::size_t cap = kTrajectoryCap);

struct EstimatorMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t paths = 0;  // trajectories ending at x
};

/// Moments of Z * P_F(tau) / P_B(tau | x) for tau ~ P_B(. | x).
[[nodiscard]] EstimatorMoments exact_estimator_distribution(const gfn::GridPolicy& policy,
                                                            const numkit::ParamSet& params, env::GridPos x,
                                                            std::size_t cap = kTrajectoryCap);
[[nodiscard]] EstimatorMoments exact_estimator_distribution(const gfn::SeqPolicy& policy,
                                                            const numkit::ParamSet& params,
                                                            std::span<const int> x);

/// Z * P_F(x) summed over trajectories, for every grid terminal.
[[nodiscard]] std::vector<double> exact_flows(const gfn::GridPolicy& policy, const numkit::ParamSet& params,
                                              std::size_t cap = kTrajectoryCap);

}  // namespace bgfn::oracle
