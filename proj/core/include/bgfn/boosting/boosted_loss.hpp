#pragma once

#include "bgfn/numkit/scalar_tape.hpp"

namespace bgfn::boosting {

using Var = numkit::ScalarTape::Var;

struct BoostConfig {
  double alpha = 1.0;
  double delta = 1e-12;
  int k = 1;       // backward samples per member when estimating the residual
  int eval_b = 10; // backward samples per member at evaluation

  void validate() const;
};

struct ClampedAlpha {
  double alpha = 0.0;
  bool clamped = false;  // true when alpha was raised to keep the denominator at delta
};

/// Raises alpha to the smallest value keeping R - (1 - alpha) R_old >= delta.
/// When R <= delta no alpha achieves that and the result is alpha = 1.
/// Linear-space inputs.
[[nodiscard]] ClampedAlpha clamp_alpha(double alpha, double reward, double r_old, double delta);
/// Same, with log R and log R_old (log R_old may be -inf).
[[nodiscard]] ClampedAlpha clamp_alpha_log(double alpha, double log_reward, double log_r_old, double delta);

/// log(R - (1 - alpha) R_old); -inf when that quantity is not positive.
[[nodiscard]] double log_boost_denominator(double log_reward, double log_r_old, double alpha);

enum class LossBranch { kBoosted, kNabla, kClamped };

struct LossChoice {
  LossBranch branch = LossBranch::kBoosted;
  double alpha = 1.0;           // alpha actually used
  double log_denominator = 0.0; // for the boosted and clamped branches
};

[[nodiscard]] LossChoice choose_loss(double log_reward, double log_r_old, const BoostConfig& cfg);

/// (log(R_hat + alpha R_old) - log_denominator)^2 with R_old held constant.
[[nodiscard]] Var boosted_loss(numkit::ScalarTape& tape, Var log_rhat, double log_r_old, double alpha,
                               double log_denominator);
/// (log(R_hat / (alpha R) + 1))^2, alpha > 0.
[[nodiscard]] Var nabla_loss(numkit::ScalarTape& tape, Var log_rhat, double log_reward, double alpha);

/// Dispatches on choose_loss and reports the branch taken.
[[nodiscard]] Var select_loss(numkit::ScalarTape& tape, Var log_rhat, double log_reward, double log_r_old,
                              const BoostConfig& cfg, LossBranch* taken = nullptr);

[[nodiscard]] double boosted_loss(double log_rhat, double log_reward, double log_r_old, double alpha);
[[nodiscard]] double nabla_loss(double log_rhat, double log_reward, double alpha);

}  // namespace bgfn::boosting
