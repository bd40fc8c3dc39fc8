#include "bgfn/boosting/ensemble.hpp"

#include <cmath>
#include <string>

namespace bgfn::boosting {

Ensemble::Ensemble(gfn::Stage active, BoostConfig config) : active_(std::move(active)), config_(config) {
  config_.validate();
  active_.frozen = false;
}

std::vector<const gfn::Stage*> Ensemble::stages() const {
  std::vector<const gfn::Stage*> out;
  out.reserve(stage_count());
  for (const auto& s : frozen_) {
    out.push_back(&s);
  }
  out.push_back(&active_);
  return out;
}

void Ensemble::set_alpha(double alpha) {
  BoostConfig next = config_;
  next.alpha = alpha;
  next.validate();
  config_ = next;
}

void Ensemble::freeze_and_spawn(numkit::ParamSet fresh) {
  const int next_id = active_.id + 1;
  active_.frozen = true;
  frozen_.push_back(std::move(active_));
  active_ = gfn::Stage{std::move(fresh), next_id, false, 0};
}

Ensemble Ensemble::restore(std::vector<gfn::Stage> stages, BoostConfig config) {
  if (stages.empty()) {
    throw ConfigError("an ensemble needs at least one stage");
  }
  gfn::Stage last = std::move(stages.back());
  stages.pop_back();
  Ensemble ensemble(std::move(last), config);
  for (auto& s : stages) {
    s.frozen = true;
  }
  ensemble.frozen_ = std::move(stages);
  return ensemble;
}

std::vector<double> stage_weights(const Ensemble& ensemble) {
  std::vector<double> log_z;
  for (const auto* s : ensemble.stages()) {
    const double v = s->log_z();
    if (!std::isfinite(v)) {
      throw NumericError("stage " + std::to_string(s->id) + " has non-finite logZ");
    }
    log_z.push_back(v);
  }
  const double lse = numkit::log_sum_exp(log_z);
  std::vector<double> w(log_z.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_z[i] - lse);
  }
  return w;
}

}  // namespace bgfn::boosting
