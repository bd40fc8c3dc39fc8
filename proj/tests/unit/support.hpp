#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <algorithm>
#include <string>

#include "bgfn/gfn/grid_policy.hpp"
#include "bgfn/gfn/seq_policy.hpp"
#include "bgfn/gfn/train.hpp"
#include "bgfn/numkit/param_set.hpp"
#include "bgfn/rewards/grid_rewards.hpp"

namespace testsupport {

inline bgfn::gfn::TrainSettings grid_settings(std::size_t batch = 64, double lr = 0.01, double lr_z = 0.05) {
  bgfn::gfn::TrainSettings s;
  s.batch_size = batch;
  s.optimizer.learning_rates = {{"pf", lr}, {"pb", lr}, {"logz", lr_z}};
  return s;
}

inline bgfn::gfn::TrainSettings seq_settings(std::size_t batch = 64, double lr = 0.01, double lr_z = 0.05) {
  bgfn::gfn::TrainSettings s;
  s.batch_size = batch;
  s.optimizer.learning_rates = {{"pf", lr}, {"logz", lr_z}};
  return s;
}

/// Zeroes every value whose name starts with `prefix`.
inline void zero_params(bgfn::numkit::ParamSet& params, const std::string& prefix) {
  for (auto& p : params.params()) {
    if (p.name.rfind(prefix, 0) == 0) {
      p.value.setZero();
    }
  }
}

/// Cosine decay from 1 to `floor` between steps `start` and `end`; 1 before start.
inline double cosine_factor(int step, int start, int end, double floor) {
  if (step < start) {
    return 1.0;
  }
  const double u = std::min(1.0, static_cast<double>(step - start) / (end - start));
  return floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
}

/// Copy of `base` with every group rate scaled by `factor`.
inline bgfn::gfn::TrainSettings scaled(const bgfn::gfn::TrainSettings& base, double factor) {
  auto s = base;
  for (auto& [group, rate] : s.optimizer.learning_rates) {
    rate *= factor;
  }
  return s;
}

inline bgfn::gfn::GridArch small_grid_arch() { return {32, 2, 4}; }

inline bgfn::rewards::GridRewardField rings_field(int w) {
  return bgfn::rewards::GridRewardField::build(bgfn::env::GridConfig{w}, bgfn::rewards::GridRewardSpec{});
}

}  // namespace testsupport
