#include "bgfn/numkit/adamw.hpp"

#include <cmath>

#include "bgfn/error.hpp"

namespace bgfn::numkit {

void AdamWConfig::validate() const {
  for (const auto& [group, lr] : learning_rates) {
    if (!(lr >= 0.0)) {
      throw ConfigError("learning rate for group '" + group + "' must be >= 0");
    }
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0,1)");
  }
  if (!(eps > 0.0)) {
    throw ConfigError("AdamW eps must be > 0");
  }
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("AdamW weight decay must be >= 0");
  }
}

void adamw_step(ParamSet& params, const AdamWConfig& config) {
  config.validate();
  const std::int64_t step = params.step + 1;
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (Param& p : params.params()) {
    auto it = config.learning_rates.find(p.group);
    if (it == config.learning_rates.end()) {
      throw ConfigError("no learning rate for parameter group '" + p.group + "'");
    }
    const double lr = it->second;
    p.value *= 1.0 - lr * config.weight_decay;
    p.moment1 = config.beta1 * p.moment1 + (1.0 - config.beta1) * p.grad;
    p.moment2 = config.beta2 * p.moment2 + (1.0 - config.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (p.moment1.array() / bias1) /
                       ((p.moment2.array() / bias2).sqrt() + config.eps);
  }
  params.step = step;
  params.zero_grad();
#ifndef NDEBUG
  if (!params.all_finite()) {
    throw NumericError("adamw_step produced non-finite parameters");
  }
#endif
}

}  // namespace bgfn::numkit
