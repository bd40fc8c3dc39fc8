#pragma once

#include <map>
#include <string>

#include "bgfn/numkit/param_set.hpp"

namespace bgfn::numkit {

/// Decoupled-weight-decay Adam. Learning rates are keyed by parameter group.
struct AdamWConfig {
  std::map<std::string, double> learning_rates;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  /// Throws ConfigError on negative rates or betas outside [0,1).
  void validate() const;
};

/// One AdamW update on every parameter whose group has a learning rate,
/// then increments params.step and zeroes all gradients.
/// Throws ConfigError when a group has no learning rate.
void adamw_step(ParamSet& params, const AdamWConfig& config);

}  // namespace bgfn::numkit
