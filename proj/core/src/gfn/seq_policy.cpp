#include "bgfn/gfn/seq_policy.hpp"

#include <cmath>

#include "bgfn/error.hpp"
#include "bgfn/gfn/policy_common.hpp"
#include "bgfn/numkit/features.hpp"

namespace bgfn::gfn {

namespace {

using numkit::Index;
using numkit::Matrix;

using MaskBuffer = std::vector<char>;

std::span<const bool> as_bools(const MaskBuffer& buf) {
  return {reinterpret_cast<const bool*>(buf.data()), buf.size()};
}

void push_mask(MaskBuffer& buf, const env::SeqMask& m, int vocab) {
  for (int a = 0; a < vocab; ++a) {
    buf.push_back(m[static_cast<std::size_t>(a)] ? 1 : 0);
  }
}

}  // namespace

SeqPolicy::SeqPolicy(env::SeqConfig seq, SeqArch arch) : seq_(seq), arch_(arch) {
  seq_.validate();
  if (arch.embed_dim <= 0 || arch.hidden <= 0 || arch.position_dim < 0 || arch.position_dim % 2 != 0) {
    throw ConfigError("policy: embedding and hidden widths must be positive, position width even");
  }
  pf_shape_ = numkit::MlpShape{"pf", {input_width(), arch.hidden, seq.vocab_size}};
}

int SeqPolicy::input_width() const { return seq_.window * arch_.embed_dim + arch_.position_dim; }

numkit::ParamSet SeqPolicy::init_params(std::uint64_t seed) const {
  numkit::Rng rng(seed);
  numkit::ParamSet params;
  auto& embed = params.add(kEmbeddingName, "pf", seq_.vocab_size, arch_.embed_dim).value;
  // Unit-variance uniform rows.
  const double bound = std::sqrt(3.0);
  for (Index r = 0; r < embed.rows(); ++r) {
    for (Index c = 0; c < embed.cols(); ++c) {
      embed(r, c) = r == env::kStopToken ? 0.0 : (2.0 * numkit::uniform01(rng) - 1.0) * bound;
    }
  }
  numkit::add_mlp_params(params, pf_shape_, "pf", rng);
  params.add(std::string(kLogZName), std::string(kLogZGroup), 1, 1).value.setZero();
  return params;
}

void SeqPolicy::check_params(const numkit::ParamSet& params) const {
  const auto* embed = params.find(kEmbeddingName);
  if (embed == nullptr || embed->value.rows() != seq_.vocab_size || embed->value.cols() != arch_.embed_dim) {
    throw ConfigError("parameters: embedding table missing or misshapen");
  }
  numkit::check_mlp_params(params, pf_shape_);
  if (!params.contains(kLogZName)) {
    throw ConfigError("parameters: missing logZ");
  }
}

Matrix SeqPolicy::encode(const numkit::ParamSet& params, std::span<const State> states,
                         std::vector<int>& context) const {
  const auto& embed = params.at(kEmbeddingName).value;
  const auto window = static_cast<std::size_t>(seq_.window);
  const auto e = static_cast<Index>(arch_.embed_dim);
  Matrix out(static_cast<Index>(states.size()), input_width());
  context.resize(states.size() * window);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto row = static_cast<Index>(i);
    const std::span<int> ctx(context.data() + i * window, window);
    env::context_window(states[i], seq_, ctx);
    for (std::size_t k = 0; k < window; ++k) {
      out.row(row).segment(static_cast<Index>(k) * e, e) = embed.row(ctx[k]);
    }
    if (arch_.position_dim > 0) {
      numkit::sinusoidal_position_encoding(
          states[i].length, arch_.position_dim,
          {out.row(row).data() + window * static_cast<std::size_t>(e), static_cast<std::size_t>(arch_.position_dim)});
    }
  }
  return out;
}

std::vector<double> SeqPolicy::forward_probs(const numkit::ParamSet& params, const State& s) const {
  std::vector<int> context;
  const Matrix logits = numkit::mlp_forward(params, pf_shape_, encode(params, {&s, 1}, context));
  MaskBuffer mask;
  push_mask(mask, env::terminal_force_mask(s, seq_), seq_.vocab_size);
  Matrix probs;
  masked_softmax_rows(logits, as_bools(mask), probs);
  return {probs.data(), probs.data() + probs.size()};
}

RolloutBatch<SeqPolicy::State> SeqPolicy::sample_forward(const numkit::ParamSet& params, std::size_t n,
                                                         double epsilon, numkit::Rng& rng,
                                                         bool keep_tapes) const {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw ConfigError("epsilon must lie in [0, 1]");
  }
  const auto vocab = static_cast<std::size_t>(seq_.vocab_size);
  RolloutBatch<State> batch;
  batch.records.resize(n);
  std::vector<int> active(n);
  std::vector<State> current(n);
  for (std::size_t i = 0; i < n; ++i) {
    active[i] = static_cast<int>(i);
    batch.records[i].states.push_back(State{});
  }
  while (!active.empty()) {
    PolicyStepTape step;
    const Matrix logits = numkit::mlp_forward(params, pf_shape_, encode(params, current, step.context),
                                              keep_tapes ? &step.mlp : nullptr);
    MaskBuffer masks;
    masks.reserve(current.size() * vocab);
    for (const State& s : current) {
      push_mask(masks, env::terminal_force_mask(s, seq_), seq_.vocab_size);
    }
    const auto log_norm = masked_softmax_rows(logits, as_bools(masks), step.probs);
    std::vector<int> still_active;
    std::vector<State> still_current;
    step.rows = active;
    step.actions.resize(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
      const auto row = static_cast<Index>(j);
      const int a = sample_mixed_action({step.probs.row(row).data(), vocab},
                                        as_bools(masks).subspan(j * vocab, vocab), epsilon, rng);
      auto& rec = batch.records[static_cast<std::size_t>(active[j])];
      rec.log_pf += logits(row, a) - log_norm[j];
      const State next = env::seq_step(current[j], a, seq_);
      rec.actions.push_back(a);
      rec.states.push_back(next);
      step.actions[j] = a;
      if (!next.terminated) {
        still_active.push_back(active[j]);
        still_current.push_back(next);
      }
    }
    if (keep_tapes) {
      batch.forward_steps.push_back(std::move(step));
    }
    active = std::move(still_active);
    current = std::move(still_current);
  }
  return batch;
}

std::vector<double> SeqPolicy::replay_log_pf(const numkit::ParamSet& params,
                                             std::span<const Terminal> xs) const {
  return replay(params, xs, nullptr);
}

RolloutBatch<SeqPolicy::State> SeqPolicy::rescore(const numkit::ParamSet& params,
                                                  std::span<const TrajectoryRecord<State>> records) const {
  RolloutBatch<State> batch;
  batch.records.assign(records.begin(), records.end());
  std::vector<Terminal> xs;
  for (const auto& rec : records) {
    if (rec.states.empty() || !rec.states.back().terminated) {
      throw EnvironmentLogicError("sequence trajectory does not end in a terminated state");
    }
    xs.push_back(terminal_of(rec));
  }
  const auto log_pf = replay(params, xs, &batch.forward_steps);
  for (std::size_t i = 0; i < records.size(); ++i) {
    batch.records[i].log_pf = log_pf[i];
    batch.records[i].log_pb = 0.0;
  }
  return batch;
}

std::vector<double> SeqPolicy::replay(const numkit::ParamSet& params, std::span<const Terminal> xs,
                                      std::vector<PolicyStepTape>* tapes) const {
  const auto vocab = static_cast<std::size_t>(seq_.vocab_size);
  for (const auto& x : xs) {
    if (x.size() > static_cast<std::size_t>(seq_.max_length)) {
      throw EnvironmentLogicError("terminal longer than the maximum length");
    }
    for (int tok : x) {
      if (tok <= env::kStopToken || tok >= seq_.vocab_size) {
        throw EnvironmentLogicError("terminal holds an invalid token");
      }
    }
  }
  std::vector<double> totals(xs.size(), 0.0);
  std::vector<int> active(xs.size());
  std::vector<State> current(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    active[i] = static_cast<int>(i);
  }
  while (!active.empty()) {
    PolicyStepTape step;
    const Matrix logits = numkit::mlp_forward(params, pf_shape_, encode(params, current, step.context),
                                              tapes != nullptr ? &step.mlp : nullptr);
    MaskBuffer masks;
    for (const State& s : current) {
      push_mask(masks, env::terminal_force_mask(s, seq_), seq_.vocab_size);
    }
    const auto log_norm = masked_softmax_rows(logits, as_bools(masks), step.probs);
    std::vector<int> still_active;
    std::vector<State> still_current;
    step.rows = active;
    step.actions.resize(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
      const auto i = static_cast<std::size_t>(active[j]);
      const auto& x = xs[i];
      const auto len = static_cast<std::size_t>(current[j].length);
      const int a = len < x.size() ? x[len] : env::kStopToken;
      if (masks[j * vocab + static_cast<std::size_t>(a)] == 0) {
        throw EnvironmentLogicError("replayed action is masked");
      }
      totals[i] += logits(static_cast<Index>(j), a) - log_norm[j];
      step.actions[j] = a;
      const State next = env::seq_step(current[j], a, seq_);
      if (!next.terminated) {
        still_active.push_back(active[j]);
        still_current.push_back(next);
      }
    }
    if (tapes != nullptr) {
      tapes->push_back(std::move(step));
    }
    active = std::move(still_active);
    current = std::move(still_current);
  }
  return totals;
}

std::vector<TrajectoryRecord<SeqPolicy::State>> SeqPolicy::sample_backward(const numkit::ParamSet& params,
                                                                           std::span<const Terminal> xs,
                                                                           numkit::Rng& /*rng*/) const {
  const auto log_pf = replay_log_pf(params, xs);
  std::vector<TrajectoryRecord<State>> records(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    State s;
    records[i].states.push_back(s);
    for (int tok : xs[i]) {
      s = env::seq_step(s, tok, seq_);
      records[i].actions.push_back(tok);
      records[i].states.push_back(s);
    }
    s = env::seq_step(s, env::kStopToken, seq_);
    records[i].actions.push_back(env::kStopToken);
    records[i].states.push_back(s);
    records[i].log_pf = log_pf[i];
    records[i].log_pb = 0.0;
  }
  return records;
}

double SeqPolicy::traj_log_pf(const numkit::ParamSet& params, const TrajectoryRecord<State>& record) const {
  if (record.states.empty() || !record.states.back().terminated) {
    throw EnvironmentLogicError("sequence trajectory does not end in a terminated state");
  }
  const Terminal x = terminal_of(record);
  return replay_log_pf(params, {&x, 1}).front();
}

std::vector<double> SeqPolicy::log_flow_estimates(const numkit::ParamSet& params, std::span<const Terminal> xs,
                                                  int k, numkit::Rng& /*rng*/) const {
  if (k < 1) {
    throw ConfigError("number of backward samples must be at least 1");
  }
  auto out = replay_log_pf(params, xs);
  const double log_z = params.scalar(kLogZName);
  for (double& v : out) {
    v = log_z + v;
  }
  return out;
}

void SeqPolicy::backprop(numkit::ParamSet& params, const RolloutBatch<State>& batch,
                         std::span<const double> d_log_pf, std::span<const double> /*d_log_pb*/) const {
  if (d_log_pf.size() != batch.records.size()) {
    throw UsageError("backprop: gradient vector must match the batch size");
  }
  const auto window = static_cast<std::size_t>(seq_.window);
  const auto e = static_cast<Index>(arch_.embed_dim);
  for (const auto& step : batch.forward_steps) {
    if (!step_has_signal(step, d_log_pf)) {
      continue;
    }
    const Matrix d_input = numkit::mlp_backward(params, pf_shape_, step.mlp, log_prob_logit_grad(step, d_log_pf));
    auto& embed_grad = params.at(kEmbeddingName).grad;
    for (std::size_t j = 0; j < step.rows.size(); ++j) {
      for (std::size_t k = 0; k < window; ++k) {
        const int tok = step.context[j * window + k];
        if (tok != env::kStopToken) {
          embed_grad.row(tok) += d_input.row(static_cast<Index>(j)).segment(static_cast<Index>(k) * e, e);
        }
      }
    }
  }
}

}  // namespace bgfn::gfn
