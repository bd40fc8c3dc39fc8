#include "bgfn/oracle/oracle.hpp"

#include <cmath>
#include <map>
#include <string>

#include "bgfn/error.hpp"
#include "bgfn/gfn/policy_common.hpp"

namespace bgfn::oracle {

namespace {

void check_cap(std::size_t count, std::size_t cap) {
  if (count > cap) {
    throw InstanceTooLargeError("instance has more than " + std::to_string(cap) + " trajectories");
  }
}

void grid_dfs(const env::GridConfig& cfg, GridTrajectory& path, std::vector<GridTrajectory>& out, std::size_t cap) {
  const env::GridState s = path.states.back();
  if (s.t == cfg.horizon()) {
    out.push_back(path);
    check_cap(out.size(), cap);
    return;
  }
  const auto mask = env::forward_mask(s, cfg);
  for (int a = 0; a < env::kGridActionCount; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) {
      continue;
    }
    path.states.push_back(env::step_forward(s, a, cfg));
    path.actions.push_back(a);
    grid_dfs(cfg, path, out, cap);
    path.states.pop_back();
    path.actions.pop_back();
  }
}

void seq_dfs(const env::SeqConfig& cfg, SeqTrajectory& path, std::vector<SeqTrajectory>& out, std::size_t cap) {
  const env::SeqState s = path.states.back();
  if (s.terminated) {
    out.push_back(path);
    check_cap(out.size(), cap);
    return;
  }
  const auto mask = env::terminal_force_mask(s, cfg);
  for (int a = 0; a < cfg.vocab_size; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) {
      continue;
    }
    path.states.push_back(env::seq_step(s, a, cfg));
    path.actions.push_back(a);
    seq_dfs(cfg, path, out, cap);
    path.states.pop_back();
    path.actions.pop_back();
  }
}

// Per-state action distributions, memoized.
class GridTables {
 public:
  GridTables(const gfn::GridPolicy& policy, const numkit::ParamSet& params) : policy_(policy), params_(params) {}

  double pf(env::GridState s, int a) { return lookup(forward_, s, false)[static_cast<std::size_t>(a)]; }
  double pb(env::GridState s, int a) { return lookup(backward_, s, true)[static_cast<std::size_t>(a)]; }

 private:
  using Row = std::array<double, env::kGridActionCount>;
  const Row& lookup(std::map<env::GridState, Row>& table, env::GridState s, bool backward) {
    auto it = table.find(s);
    if (it == table.end()) {
      it = table.emplace(s, backward ? policy_.backward_probs(params_, s) : policy_.forward_probs(params_, s)).first;
    }
    return it->second;
  }

  const gfn::GridPolicy& policy_;
  const numkit::ParamSet& params_;
  std::map<env::GridState, Row> forward_;
  std::map<env::GridState, Row> backward_;
};

double grid_path_pf(GridTables& tables, const GridTrajectory& tau) {
  double p = 1.0;
  for (std::size_t t = 0; t < tau.actions.size(); ++t) {
    p *= tables.pf(tau.states[t], tau.actions[t]);
  }
  return p;
}

double grid_path_pb(GridTables& tables, const GridTrajectory& tau) {
  double p = 1.0;
  for (std::size_t t = 0; t < tau.actions.size(); ++t) {
    p *= tables.pb(tau.states[t + 1], tau.actions[t]);
  }
  return p;
}

double seq_path_pf(const gfn::SeqPolicy& policy, const numkit::ParamSet& params, const SeqTrajectory& tau) {
  double p = 1.0;
  for (std::size_t t = 0; t < tau.actions.size(); ++t) {
    p *= policy.forward_probs(params, tau.states[t])[static_cast<std::size_t>(tau.actions[t])];
  }
  return p;
}

void fill_support(ExactMarginals& m) {
  m.support.clear();
  for (std::size_t i = 0; i < m.prob.size(); ++i) {
    if (m.prob[i] > 0.0) {
      m.support.push_back(i);
    }
  }
}

std::vector<double> mixture_weights(std::span<const numkit::ParamSet* const> stages) {
  if (stages.empty()) {
    throw UsageError("exact_mixture: no stages");
  }
  std::vector<double> log_z;
  for (const auto* p : stages) {
    log_z.push_back(p->scalar(gfn::kLogZName));
  }
  double hi = log_z.front();
  for (double v : log_z) {
    hi = std::max(hi, v);
  }
  double total = 0.0;
  std::vector<double> w(log_z.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_z[i] - hi);
    total += w[i];
  }
  for (double& v : w) {
    v /= total;
  }
  return w;
}

}  // namespace

std::vector<GridTrajectory> enumerate_grid_trajectories(const env::GridConfig& cfg, std::size_t cap) {
  cfg.validate();
  std::vector<GridTrajectory> out;
  GridTrajectory path;
  path.states.push_back(env::GridState{0, 0, 0});
  grid_dfs(cfg, path, out, cap);
  return out;
}

std::vector<SeqTrajectory> enumerate_seq_trajectories(const env::SeqConfig& cfg, std::size_t cap) {
  cfg.validate();
  std::vector<SeqTrajectory> out;
  SeqTrajectory path;
  path.states.push_back(env::SeqState{});
  seq_dfs(cfg, path, out, cap);
  return out;
}

std::vector<std::vector<int>> enumerate_seq_terminals(const env::SeqConfig& cfg, std::size_t cap) {
  std::vector<std::vector<int>> out;
  for (const auto& tau : enumerate_seq_trajectories(cfg, cap)) {
    out.push_back(tau.states.back().tokens());
  }
  return out;
}

ExactMarginals exact_marginals(const gfn::GridPolicy& policy, const numkit::ParamSet& params, std::size_t cap) {
  const auto trajectories = enumerate_grid_trajectories(policy.grid(), cap);
  GridTables tables(policy, params);
  ExactMarginals m;
  m.prob.assign(policy.grid().terminal_count(), 0.0);
  m.trajectory_count = trajectories.size();
  for (const auto& tau : trajectories) {
    const auto& last = tau.states.back();
    m.prob[env::terminal_index({last.x, last.y}, policy.grid())] += grid_path_pf(tables, tau);
  }
  fill_support(m);
  return m;
}

ExactMarginals exact_marginals(const gfn::SeqPolicy& policy, const numkit::ParamSet& params, std::size_t cap) {
  const auto trajectories = enumerate_seq_trajectories(policy.seq(), cap);
  ExactMarginals m;
  m.trajectory_count = trajectories.size();
  for (const auto& tau : trajectories) {
    m.prob.push_back(seq_path_pf(policy, params, tau));
  }
  fill_support(m);
  return m;
}

ExactMarginals exact_mixture(const gfn::GridPolicy& policy, std::span<const numkit::ParamSet* const> stages,
                             std::size_t cap) {
  const auto w = mixture_weights(stages);
  ExactMarginals mix;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto m = exact_marginals(policy, *stages[i], cap);
    mix.prob.resize(m.prob.size(), 0.0);
    mix.trajectory_count = m.trajectory_count;
    for (std::size_t j = 0; j < m.prob.size(); ++j) {
      mix.prob[j] += w[i] * m.prob[j];
    }
  }
  fill_support(mix);
  return mix;
}

ExactMarginals exact_mixture(const gfn::SeqPolicy& policy, std::span<const numkit::ParamSet* const> stages,
                             std::size_t cap) {
  const auto w = mixture_weights(stages);
  ExactMarginals mix;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto m = exact_marginals(policy, *stages[i], cap);
    mix.prob.resize(m.prob.size(), 0.0);
    mix.trajectory_count = m.trajectory_count;
    for (std::size_t j = 0; j < m.prob.size(); ++j) {
      mix.prob[j] += w[i] * m.prob[j];
    }
  }
  fill_support(mix);
  return mix;
}

EstimatorMoments exact_estimator_distribution(const gfn::GridPolicy& policy, const numkit::ParamSet& params,
                                              env::GridPos x, std::size_t cap) {
  const auto trajectories = enumerate_grid_trajectories(policy.grid(), cap);
  GridTables tables(policy, params);
  const double z = std::exp(params.scalar(gfn::kLogZName));
  std::vector<double> weights;
  std::vector<double> values;
  for (const auto& tau : trajectories) {
    const auto& last = tau.states.back();
    if (last.x != x.x || last.y != x.y) {
      continue;
    }
    const double pb = grid_path_pb(tables, tau);
    if (pb <= 0.0) {
      continue;
    }
    weights.push_back(pb);
    values.push_back(z * grid_path_pf(tables, tau) / pb);
  }
  EstimatorMoments m;
  m.paths = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    m.mean += weights[i] * values[i];
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double d = values[i] - m.mean;
    m.variance += weights[i] * d * d;
  }
  return m;
}

EstimatorMoments exact_estimator_distribution(const gfn::SeqPolicy& policy, const numkit::ParamSet& params,
                                              std::span<const int> x) {
  SeqTrajectory tau;
  env::SeqState s;
  tau.states.push_back(s);
  for (int tok : x) {
    s = env::seq_step(s, tok, policy.seq());
    tau.actions.push_back(tok);
    tau.states.push_back(s);
  }
  s = env::seq_step(s, env::kStopToken, policy.seq());
  tau.actions.push_back(env::kStopToken);
  tau.states.push_back(s);
  EstimatorMoments m;
  m.paths = 1;
  m.mean = std::exp(params.scalar(gfn::kLogZName)) * seq_path_pf(policy, params, tau);
  return m;
}

std::vector<double> exact_flows(const gfn::GridPolicy& policy, const numkit::ParamSet& params, std::size_t cap) {
  auto m = exact_marginals(policy, params, cap);
  const double z = std::exp(params.scalar(gfn::kLogZName));
  for (double& p : m.prob) {
    p *= z;
  }
  return m.prob;
}

}  // namespace bgfn::oracle
