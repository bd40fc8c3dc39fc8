#pragma once

#include "bgfn/numkit/scalar_tape.hpp"

namespace bgfn::gfn {

using Var = numkit::ScalarTape::Var;

/// log of Z * P_F(tau) / P_B(tau | x), the per-trajectory flow estimate.
[[nodiscard]] inline double log_rhat(double log_z, double log_pf, double log_pb) {
  return (log_z + log_pf) - log_pb;
}
[[nodiscard]] Var log_rhat(numkit::ScalarTape& tape, Var log_z, Var log_pf, Var log_pb);

/// Squared log-ratio trajectory balance loss.
[[nodiscard]] double tb_loss(double log_z, double log_pf, double log_pb, double log_reward);
[[nodiscard]] Var tb_loss(numkit::ScalarTape& tape, Var log_rhat, double log_reward);

}  // namespace bgfn::gfn
