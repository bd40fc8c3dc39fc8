#include "bgfn/boosting/boosted_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgfn/error.hpp"
#include "bgfn/numkit/logspace.hpp"

namespace bgfn::boosting {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void BoostConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("boost.alpha must lie in [0, 1]");
  }
  if (!(delta > 0.0)) {
    throw ConfigError("boost.delta must be positive");
  }
  if (k < 1) {
    throw ConfigError("boost.k must be at least 1");
  }
  if (eval_b < 1) {
    throw ConfigError("eval.b must be at least 1");
  }
}

ClampedAlpha clamp_alpha(double alpha, double reward, double r_old, double delta) {
  if (!(reward > 0.0) || r_old < 0.0) {
    throw DomainError("clamp_alpha: need R > 0 and R_old >= 0");
  }
  return clamp_alpha_log(alpha, std::log(reward), r_old == 0.0 ? kNegInf : std::log(r_old), delta);
}

ClampedAlpha clamp_alpha_log(double alpha, double log_reward, double log_r_old, double delta) {
  if (log_r_old == kNegInf) {
    return {std::clamp(alpha, 0.0, 1.0), false};
  }
  // Rewards at or below delta: only alpha = 1 keeps the denominator positive.
  if (log_reward <= std::log(delta)) {
    return {1.0, alpha < 1.0};
  }
  // alpha_min = 1 - (R - delta) / R_old
  const double log_slack = log_reward + numkit::log1m_exp(std::log(delta) - log_reward);
  const double alpha_min = 1.0 - std::exp(log_slack - log_r_old);
  if (alpha >= alpha_min) {
    return {std::min(alpha, 1.0), false};
  }
  return {std::min(alpha_min, 1.0), true};
}

double log_boost_denominator(double log_reward, double log_r_old, double alpha) {
  if (alpha >= 1.0 || log_r_old == kNegInf) {
    return log_reward;
  }
  const double t = std::log1p(-alpha) + log_r_old - log_reward;
  if (t >= 0.0) {
    return kNegInf;
  }
  return log_reward + numkit::log1m_exp(t);
}

LossChoice choose_loss(double log_reward, double log_r_old, const BoostConfig& cfg) {
  const double log_den = log_boost_denominator(log_reward, log_r_old, cfg.alpha);
  const double log_delta = std::log(cfg.delta);
  if (log_den > log_delta) {
    return {LossBranch::kBoosted, cfg.alpha, log_den};
  }
  if (cfg.alpha > 0.0) {
    return {LossBranch::kNabla, cfg.alpha, 0.0};
  }
  const ClampedAlpha c = clamp_alpha_log(cfg.alpha, log_reward, log_r_old, cfg.delta);
  // By construction R - (1 - alpha_t) R_old = delta, except when R itself is
  // below delta and alpha_t saturates at 1.
  return {LossBranch::kClamped, c.alpha, log_reward <= log_delta ? log_reward : log_delta};
}

Var boosted_loss(numkit::ScalarTape& tape, Var log_rhat, double log_r_old, double alpha, double log_denominator) {
  const double log_old_term = alpha > 0.0 ? std::log(alpha) + log_r_old : kNegInf;
  const Var numerator = tape.log_add_exp_const(log_rhat, log_old_term);
  return tape.square(tape.sub(numerator, tape.constant(log_denominator, "log_denominator")));
}

Var nabla_loss(numkit::ScalarTape& tape, Var log_rhat, double log_reward, double alpha) {
  if (!(alpha > 0.0)) {
    throw UsageError("nabla_loss requires alpha > 0");
  }
  return tape.square(tape.softplus(tape.add_const(log_rhat, -(std::log(alpha) + log_reward))));
}

Var select_loss(numkit::ScalarTape& tape, Var log_rhat, double log_reward, double log_r_old,
                const BoostConfig& cfg, LossBranch* taken) {
  const LossChoice choice = choose_loss(log_reward, log_r_old, cfg);
  if (taken != nullptr) {
    *taken = choice.branch;
  }
  if (choice.branch == LossBranch::kNabla) {
    return nabla_loss(tape, log_rhat, log_reward, choice.alpha);
  }
  return boosted_loss(tape, log_rhat, log_r_old, choice.alpha, choice.log_denominator);
}

double boosted_loss(double log_rhat, double log_reward, double log_r_old, double alpha) {
  numkit::ScalarTape tape;
  const Var v = boosted_loss(tape, tape.leaf(log_rhat), log_r_old, alpha,
                             log_boost_denominator(log_reward, log_r_old, alpha));
  return tape.value(v);
}

double nabla_loss(double log_rhat, double log_reward, double alpha) {
  numkit::ScalarTape tape;
  return tape.value(nabla_loss(tape, tape.leaf(log_rhat), log_reward, alpha));
}

}  // namespace bgfn::boosting
