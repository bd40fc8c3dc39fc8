#include "bgfn/gfn/grid_policy.hpp"

#include <algorithm>

#include "bgfn/error.hpp"
#include "bgfn/gfn/policy_common.hpp"
#include "bgfn/numkit/logspace.hpp"

namespace bgfn::gfn {

namespace {

using numkit::Index;
using numkit::Matrix;

numkit::MlpShape make_shape(const char* prefix, const GridArch& arch) {
  numkit::MlpShape shape{prefix, {env::observation_width(arch.frequencies)}};
  for (int l = 0; l < arch.hidden_layers; ++l) {
    shape.widths.push_back(arch.hidden);
  }
  shape.widths.push_back(env::kGridActionCount);
  return shape;
}

// std::vector<bool> has no contiguous storage, so masks use a char buffer.
using MaskBuffer = std::vector<char>;

std::span<const bool> as_bools(const MaskBuffer& buf) {
  return {reinterpret_cast<const bool*>(buf.data()), buf.size()};
}

void push_mask(MaskBuffer& buf, const env::GridMask& m) {
  for (bool b : m) {
    buf.push_back(b ? 1 : 0);
  }
}

}  // namespace

GridPolicy::GridPolicy(env::GridConfig grid, GridArch arch)
    : grid_(grid), arch_(arch), pf_shape_(make_shape("pf", arch)), pb_shape_(make_shape("pb", arch)) {
  grid_.validate();
  if (arch.hidden <= 0 || arch.hidden_layers < 0 || arch.frequencies < 0) {
    throw ConfigError("policy: hidden width, depth and frequency count must be non-negative");
  }
}

numkit::ParamSet GridPolicy::init_params(std::uint64_t seed) const {
  numkit::Rng rng(seed);
  numkit::ParamSet params;
  numkit::add_mlp_params(params, pf_shape_, "pf", rng);
  numkit::add_mlp_params(params, pb_shape_, "pb", rng);
  params.add(std::string(kLogZName), std::string(kLogZGroup), 1, 1).value.setZero();
  return params;
}

void GridPolicy::check_params(const numkit::ParamSet& params) const {
  numkit::check_mlp_params(params, pf_shape_);
  numkit::check_mlp_params(params, pb_shape_);
  if (!params.contains(kLogZName)) {
    throw ConfigError("parameters: missing logZ");
  }
}

Matrix GridPolicy::encode(std::span<const State> states) const {
  const int width = env::observation_width(arch_.frequencies);
  Matrix out(static_cast<Index>(states.size()), width);
  for (std::size_t i = 0; i < states.size(); ++i) {
    env::encode_observation(states[i], grid_, arch_.frequencies,
                            {out.row(static_cast<Index>(i)).data(), static_cast<std::size_t>(width)});
  }
  return out;
}

std::array<double, env::kGridActionCount> GridPolicy::forward_probs(const numkit::ParamSet& params,
                                                                   State s) const {
  const Matrix logits = numkit::mlp_forward(params, pf_shape_, encode({&s, 1}));
  MaskBuffer mask;
  push_mask(mask, env::forward_mask(s, grid_));
  Matrix probs;
  masked_softmax_rows(logits, as_bools(mask), probs);
  std::array<double, env::kGridActionCount> out{};
  std::copy_n(probs.data(), env::kGridActionCount, out.begin());
  return out;
}

std::array<double, env::kGridActionCount> GridPolicy::backward_probs(const numkit::ParamSet& params,
                                                                    State s) const {
  const Matrix logits = numkit::mlp_forward(params, pb_shape_, encode({&s, 1}));
  MaskBuffer mask;
  push_mask(mask, env::backward_mask(s, grid_));
  Matrix probs;
  masked_softmax_rows(logits, as_bools(mask), probs);
  std::array<double, env::kGridActionCount> out{};
  std::copy_n(probs.data(), env::kGridActionCount, out.begin());
  return out;
}

RolloutBatch<GridPolicy::State> GridPolicy::sample_forward(const numkit::ParamSet& params, std::size_t n,
                                                           double epsilon, numkit::Rng& rng,
                                                           bool keep_tapes) const {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw ConfigError("epsilon must lie in [0, 1]");
  }
  const int horizon = grid_.horizon();
  RolloutBatch<State> batch;
  batch.records.resize(n);
  std::vector<State> current(n, State{0, 0, 0});
  for (auto& rec : batch.records) {
    rec.states.reserve(static_cast<std::size_t>(horizon) + 1);
    rec.actions.reserve(static_cast<std::size_t>(horizon));
    rec.states.push_back(State{0, 0, 0});
  }
  constexpr auto kA = static_cast<std::size_t>(env::kGridActionCount);

  for (int t = 0; t < horizon; ++t) {
    PolicyStepTape step;
    const Matrix logits = numkit::mlp_forward(params, pf_shape_, encode(current), keep_tapes ? &step.mlp : nullptr);
    MaskBuffer masks;
    masks.reserve(n * kA);
    for (const State& s : current) {
      push_mask(masks, env::forward_mask(s, grid_));
    }
    const auto log_norm = masked_softmax_rows(logits, as_bools(masks), step.probs);
    step.rows.resize(n);
    step.actions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Index>(i);
      const std::span<const double> probs(step.probs.row(row).data(), kA);
      const int a = sample_mixed_action(probs, as_bools(masks).subspan(i * kA, kA), epsilon, rng);
      auto& rec = batch.records[i];
      rec.log_pf += logits(row, a) - log_norm[i];
      current[i] = env::step_forward(current[i], a, grid_);
      rec.actions.push_back(a);
      rec.states.push_back(current[i]);
      step.rows[i] = static_cast<int>(i);
      step.actions[i] = a;
    }
    if (keep_tapes) {
      batch.forward_steps.push_back(std::move(step));
    }
  }

  PolicyStepTape back_step;
  const auto log_pb = path_log_probs(params, batch.records, true, keep_tapes ? &back_step : nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    batch.records[i].log_pb = log_pb[i];
  }
  if (keep_tapes) {
    batch.backward_steps.push_back(std::move(back_step));
  }
  return batch;
}

std::vector<double> GridPolicy::path_log_probs(const numkit::ParamSet& params,
                                               std::span<const TrajectoryRecord<State>> records,
                                               bool backward, PolicyStepTape* tape) const {
  constexpr auto kA = static_cast<std::size_t>(env::kGridActionCount);
  // Without a tape nothing has to outlive the call, so bound the activation memory.
  constexpr std::size_t kChunk = 2048;
  if (tape == nullptr && records.size() > kChunk) {
    std::vector<double> totals;
    totals.reserve(records.size());
    for (std::size_t begin = 0; begin < records.size(); begin += kChunk) {
      const auto part = path_log_probs(params, records.subspan(begin, std::min(kChunk, records.size() - begin)),
                                       backward, nullptr);
      totals.insert(totals.end(), part.begin(), part.end());
    }
    return totals;
  }
  std::vector<State> states;
  std::vector<int> rows;
  std::vector<int> actions;
  MaskBuffer masks;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.states.size() != rec.actions.size() + 1) {
      throw EnvironmentLogicError("trajectory record has mismatched states and actions");
    }
    for (std::size_t t = 0; t < rec.actions.size(); ++t) {
      // The backward policy sees s_{t+1} and undoes a_t.
      const State s = backward ? rec.states[t + 1] : rec.states[t];
      states.push_back(s);
      rows.push_back(static_cast<int>(i));
      actions.push_back(rec.actions[t]);
      push_mask(masks, backward ? env::backward_mask(s, grid_) : env::forward_mask(s, grid_));
    }
  }
  std::vector<double> totals(records.size(), 0.0);
  if (states.empty()) {
    return totals;
  }
  PolicyStepTape local;
  PolicyStepTape& step = tape != nullptr ? *tape : local;
  const auto& shape = backward ? pb_shape_ : pf_shape_;
  const Matrix logits = numkit::mlp_forward(params, shape, encode(states), tape != nullptr ? &step.mlp : nullptr);
  const auto log_norm = masked_softmax_rows(logits, as_bools(masks), step.probs);
  for (std::size_t j = 0; j < states.size(); ++j) {
    const auto row = static_cast<Index>(j);
    const int a = actions[j];
    if (masks[j * kA + static_cast<std::size_t>(a)] == 0) {
      throw EnvironmentLogicError("trajectory uses a masked action");
    }
    totals[static_cast<std::size_t>(rows[j])] += logits(row, a) - log_norm[j];
  }
  step.rows = std::move(rows);
  step.actions = std::move(actions);
  return totals;
}

std::vector<TrajectoryRecord<GridPolicy::State>> GridPolicy::sample_backward(const numkit::ParamSet& params,
                                                                             std::span<const Terminal> xs,
                                                                             numkit::Rng& rng) const {
  constexpr auto kA = static_cast<std::size_t>(env::kGridActionCount);
  const int horizon = grid_.horizon();
  const std::size_t n = xs.size();
  std::vector<State> current(n);
  std::vector<TrajectoryRecord<State>> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    current[i] = State{xs[i].x, xs[i].y, horizon};
    if (!env::is_valid(current[i], grid_)) {
      throw EnvironmentLogicError("backward sampling from a terminal outside the grid");
    }
    records[i].states.push_back(current[i]);
  }
  // Step terms are summed in forward order afterwards so log_pb matches path_log_probs bit for bit.
  std::vector<std::vector<double>> step_terms(n);
  for (int t = horizon; t > 0; --t) {
    const Matrix logits = numkit::mlp_forward(params, pb_shape_, encode(current));
    MaskBuffer masks;
    masks.reserve(n * kA);
    for (const State& s : current) {
      push_mask(masks, env::backward_mask(s, grid_));
    }
    Matrix probs;
    const auto log_norm = masked_softmax_rows(logits, as_bools(masks), probs);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Index>(i);
      const int a = static_cast<int>(numkit::sample_categorical({probs.row(row).data(), kA}, rng));
      step_terms[i].push_back(logits(row, a) - log_norm[i]);
      current[i] = env::step_backward(current[i], a, grid_);
      records[i].actions.push_back(a);
      records[i].states.push_back(current[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = records[i];
    std::reverse(rec.states.begin(), rec.states.end());
    std::reverse(rec.actions.begin(), rec.actions.end());
    for (auto it = step_terms[i].rbegin(); it != step_terms[i].rend(); ++it) {
      rec.log_pb += *it;
    }
  }
  const auto log_pf = path_log_probs(params, records, false, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    records[i].log_pf = log_pf[i];
  }
  return records;
}

RolloutBatch<GridPolicy::State> GridPolicy::rescore(const numkit::ParamSet& params,
                                                    std::span<const TrajectoryRecord<State>> records) const {
  RolloutBatch<State> batch;
  batch.records.assign(records.begin(), records.end());
  PolicyStepTape forward;
  PolicyStepTape backward;
  const auto log_pf = path_log_probs(params, records, false, &forward);
  const auto log_pb = path_log_probs(params, records, true, &backward);
  for (std::size_t i = 0; i < records.size(); ++i) {
    batch.records[i].log_pf = log_pf[i];
    batch.records[i].log_pb = log_pb[i];
  }
  batch.forward_steps.push_back(std::move(forward));
  batch.backward_steps.push_back(std::move(backward));
  return batch;
}

double GridPolicy::traj_log_pf(const numkit::ParamSet& params, const TrajectoryRecord<State>& record) const {
  return path_log_probs(params, {&record, 1}, false, nullptr).front();
}

double GridPolicy::traj_log_pb(const numkit::ParamSet& params, const TrajectoryRecord<State>& record) const {
  return path_log_probs(params, {&record, 1}, true, nullptr).front();
}

std::vector<double> GridPolicy::log_flow_estimates(const numkit::ParamSet& params,
                                                   std::span<const Terminal> xs, int k,
                                                   numkit::Rng& rng) const {
  if (k < 1) {
    throw ConfigError("number of backward samples must be at least 1");
  }
  const auto kk = static_cast<std::size_t>(k);
  std::vector<Terminal> repeated;
  repeated.reserve(xs.size() * kk);
  for (const Terminal& x : xs) {
    repeated.insert(repeated.end(), kk, x);
  }
  const auto records = sample_backward(params, repeated, rng);
  const double log_z = params.scalar(kLogZName);
  std::vector<double> out(xs.size());
  std::vector<double> samples(kk);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < kk; ++j) {
      const auto& rec = records[i * kk + j];
      samples[j] = (log_z + rec.log_pf) - rec.log_pb;
    }
    out[i] = numkit::log_mean_exp(samples);
  }
  return out;
}

void GridPolicy::backprop(numkit::ParamSet& params, const RolloutBatch<State>& batch,
                          std::span<const double> d_log_pf, std::span<const double> d_log_pb) const {
  if (d_log_pf.size() != batch.records.size() || d_log_pb.size() != batch.records.size()) {
    throw UsageError("backprop: gradient vectors must match the batch size");
  }
  for (const auto& step : batch.forward_steps) {
    if (step_has_signal(step, d_log_pf)) {
      numkit::mlp_backward(params, pf_shape_, step.mlp, log_prob_logit_grad(step, d_log_pf));
    }
  }
  for (const auto& step : batch.backward_steps) {
    if (step_has_signal(step, d_log_pb)) {
      numkit::mlp_backward(params, pb_shape_, step.mlp, log_prob_logit_grad(step, d_log_pb));
    }
  }
}

}  // namespace bgfn::gfn
