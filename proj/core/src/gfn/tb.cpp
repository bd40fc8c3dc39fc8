#include "bgfn/gfn/tb.hpp"

namespace bgfn::gfn {

Var log_rhat(numkit::ScalarTape& tape, Var log_z, Var log_pf, Var log_pb) {
  return tape.sub(tape.add(log_z, log_pf), log_pb);
}

double tb_loss(double log_z, double log_pf, double log_pb, double log_reward) {
  const double d = log_rhat(log_z, log_pf, log_pb) - log_reward;
  return d * d;
}

Var tb_loss(numkit::ScalarTape& tape, Var log_rhat, double log_reward) {
  return tape.square(tape.sub(log_rhat, tape.constant(log_reward, "log_reward")));
}

}  // namespace bgfn::gfn
