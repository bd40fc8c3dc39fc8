#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bgfn/boosting/ensemble.hpp"
#include "bgfn/gfn/grid_policy.hpp"
#include "bgfn/gfn/seq_policy.hpp"
#include "bgfn/numkit/logspace.hpp"
#include "bgfn/rewards/grid_rewards.hpp"
#include "bgfn/rewards/seq_rewards.hpp"

namespace bgfn::eval {

/// log R_hat(x) = log sum_k mean_b Z_k P_F^k / P_B^k for each terminal.
/// -inf everywhere when `stages` is empty.
template <gfn::PolicyModel Policy>
std::vector<double> estimate_terminal_mass(std::span<const gfn::Stage* const> stages, const Policy& policy,
                                           std::span<const typename Policy::Terminal> xs, int b, numkit::Rng& rng) {
  if (b < 1) {
    throw ConfigError("eval.b must be at least 1");
  }
  const auto est = boosting::estimate_residual<Policy>(stages, policy, xs, b, rng);
  std::vector<double> out(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    out[i] = est[i].log_r_old;
  }
  return out;
}

/// (1/n) sum |p_a - p_b| after normalizing each table to sum 1. Inputs are
/// nonnegative unnormalized masses. Throws DegenerateModelError when a
/// table sums to zero.
[[nodiscard]] double l1_metric(std::span<const double> mass_a, std::span<const double> mass_b);
/// Same on log-masses (entries may be -inf).
[[nodiscard]] double l1_metric_log(std::span<const double> log_mass_a, std::span<const double> log_mass_b);
/// Normalizes log-masses into probabilities.
[[nodiscard]] std::vector<double> normalize_log_mass(std::span<const double> log_mass);

struct L1Report {
  std::int64_t epoch = 0;
  std::vector<double> model_prob;  // normalized, enumerate_terminals() order
  double l1 = 0.0;
  int b = 0;
  std::vector<double> member_log_z;
};

[[nodiscard]] L1Report evaluate_l1(const boosting::Ensemble& ensemble, const gfn::GridPolicy& policy,
                                   const rewards::GridRewardField& reward, int b, numkit::Rng& rng,
                                   std::int64_t epoch);

/// Persistent set of distinct high-reward sequences across evaluations.
class UniqueSequenceTracker {
 public:
  bool insert(const std::string& sequence) { return seen_.insert(sequence).second; }
  [[nodiscard]] std::size_t size() const { return seen_.size(); }
  [[nodiscard]] const std::set<std::string>& items() const { return seen_; }

 private:
  std::set<std::string> seen_;
};

struct UniqueCountReport {
  std::int64_t epoch = 0;
  std::size_t cumulative = 0;
  std::size_t new_unique = 0;
  std::size_t sampled = 0;
};

/// Samples n sequences from the ensemble, keeps lengths 1..max_length with
/// proxy probability >= threshold and adds them to the tracker.
[[nodiscard]] UniqueCountReport unique_high_reward(const boosting::Ensemble& ensemble, const gfn::SeqPolicy& policy,
                                                   const rewards::SeqReward& reward, std::size_t n, double threshold,
                                                   UniqueSequenceTracker& tracker, numkit::Rng& rng,
                                                   std::int64_t epoch);

}  // namespace bgfn::eval
