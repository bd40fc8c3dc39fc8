#include "bgfn/eval/metrics.hpp"

#include <cmath>

#include "bgfn/env/grid_env.hpp"
#include "bgfn/error.hpp"

namespace bgfn::eval {

std::vector<double> normalize_log_mass(std::span<const double> log_mass) {
  const double lse = numkit::log_sum_exp(log_mass);
  if (!std::isfinite(lse)) {
    throw DegenerateModelError("model assigns no mass to any terminal");
  }
  std::vector<double> p(log_mass.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_mass[i] - lse);
  }
  return p;
}

double l1_metric_log(std::span<const double> log_mass_a, std::span<const double> log_mass_b) {
  if (log_mass_a.size() != log_mass_b.size() || log_mass_a.empty()) {
    throw UsageError("l1_metric: tables must be non-empty and the same size");
  }
  const auto pa = normalize_log_mass(log_mass_a);
  const auto pb = normalize_log_mass(log_mass_b);
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    sum += std::abs(pa[i] - pb[i]);
  }
  return sum / static_cast<double>(pa.size());
}

double l1_metric(std::span<const double> mass_a, std::span<const double> mass_b) {
  auto to_log = [](std::span<const double> m) {
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] < 0.0) {
        throw DomainError("l1_metric: masses must be nonnegative");
      }
      out[i] = std::log(m[i]);
    }
    return out;
  };
  const auto la = to_log(mass_a);
  const auto lb = to_log(mass_b);
  return l1_metric_log(la, lb);
}

L1Report evaluate_l1(const boosting::Ensemble& ensemble, const gfn::GridPolicy& policy,
                     const rewards::GridRewardField& reward, int b, numkit::Rng& rng, std::int64_t epoch) {
  const auto xs = env::enumerate_terminals(policy.grid());
  const auto stages = ensemble.stages();
  const auto log_mass = estimate_terminal_mass<gfn::GridPolicy>(stages, policy, xs, b, rng);
  L1Report report;
  report.epoch = epoch;
  report.b = b;
  report.model_prob = normalize_log_mass(log_mass);
  report.l1 = l1_metric_log(log_mass, reward.log_rewards());
  for (const auto* s : stages) {
    report.member_log_z.push_back(s->log_z());
  }
  return report;
}

UniqueCountReport unique_high_reward(const boosting::Ensemble& ensemble, const gfn::SeqPolicy& policy,
                                     const rewards::SeqReward& reward, std::size_t n, double threshold,
                                     UniqueSequenceTracker& tracker, numkit::Rng& rng, std::int64_t epoch) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("eval.threshold must lie in (0, 1)");
  }
  UniqueCountReport report;
  report.epoch = epoch;
  report.sampled = n;
  if (n > 0) {
    const auto samples = boosting::ensemble_sample(ensemble, policy, rng, n);
    std::set<std::string> batch;
    for (const auto& s : samples) {
      const auto len = s.terminal.size();
      if (len >= 1 && len <= static_cast<std::size_t>(policy.seq().max_length)) {
        batch.insert(env::tokens_to_string(s.terminal));
      }
    }
    for (const auto& seq : batch) {
      if (reward.probability(env::string_to_tokens(seq)) >= threshold && tracker.insert(seq)) {
        ++report.new_unique;
      }
    }
  }
  report.cumulative = tracker.size();
  return report;
}

}  // namespace bgfn::eval
