#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bgfn/env/seq_env.hpp"
#include "bgfn/gfn/trajectory.hpp"
#include "bgfn/numkit/mlp.hpp"
#include "bgfn/numkit/param_set.hpp"
#include "bgfn/numkit/rng.hpp"

namespace bgfn::gfn {

struct SeqArch {
  int embed_dim = 64;
  int position_dim = 16;
  int hidden = 128;
};

/// Autoregressive policy over token windows. The backward policy is the
/// deterministic pop, so only "pf" and "logz" groups carry parameters.
/// Row 0 of the embedding (STOP / padding) stays at zero.
class SeqPolicy {
 public:
  using State = env::SeqState;
  using Terminal = std::vector<int>;
  static constexpr bool kLearnedBackward = false;
  static constexpr const char* kEmbeddingName = "pf.embed";

  explicit SeqPolicy(env::SeqConfig seq, SeqArch arch = {});

  [[nodiscard]] const env::SeqConfig& seq() const { return seq_; }
  [[nodiscard]] const SeqArch& arch() const { return arch_; }
  [[nodiscard]] const numkit::MlpShape& forward_shape() const { return pf_shape_; }

  [[nodiscard]] numkit::ParamSet init_params(std::uint64_t seed) const;
  void check_params(const numkit::ParamSet& params) const;

  [[nodiscard]] static Terminal terminal_of(const TrajectoryRecord<State>& record) {
    return record.states.back().tokens();
  }

  [[nodiscard]] std::vector<double> forward_probs(const numkit::ParamSet& params, const State& s) const;

  /// Rolls out n sequences until STOP (forced at max length). Inactive
  /// sequences drop out of the batch as they terminate.
  [[nodiscard]] RolloutBatch<State> sample_forward(const numkit::ParamSet& params, std::size_t n,
                                                   double epsilon, numkit::Rng& rng,
                                                   bool keep_tapes = false) const;

  /// The unique pop-path to each terminal; log_pb = 0. The rng is unused.
  [[nodiscard]] std::vector<TrajectoryRecord<State>> sample_backward(const numkit::ParamSet& params,
                                                                     std::span<const Terminal> xs,
                                                                     numkit::Rng& rng) const;

  /// log P_F of each terminal, obtained by replaying its forced action path.
  [[nodiscard]] std::vector<double> replay_log_pf(const numkit::ParamSet& params,
                                                  std::span<const Terminal> xs) const;

  /// Recomputes log_pf of fixed trajectories with backprop tapes.
  [[nodiscard]] RolloutBatch<State> rescore(const numkit::ParamSet& params,
                                            std::span<const TrajectoryRecord<State>> records) const;

  [[nodiscard]] double traj_log_pf(const numkit::ParamSet& params,
                                   const TrajectoryRecord<State>& record) const;

  /// logZ + log P_F(x); exact, so k only has to be positive.
  [[nodiscard]] std::vector<double> log_flow_estimates(const numkit::ParamSet& params,
                                                       std::span<const Terminal> xs, int k,
                                                       numkit::Rng& rng) const;

  void backprop(numkit::ParamSet& params, const RolloutBatch<State>& batch,
                std::span<const double> d_log_pf, std::span<const double> d_log_pb) const;

  [[nodiscard]] int input_width() const;

 private:
  // Builds policy inputs and the window tokens for a set of states.
  numkit::Matrix encode(const numkit::ParamSet& params, std::span<const State> states,
                        std::vector<int>& context) const;

  std::vector<double> replay(const numkit::ParamSet& params, std::span<const Terminal> xs,
                             std::vector<PolicyStepTape>* tapes) const;

  env::SeqConfig seq_;
  SeqArch arch_;
  numkit::MlpShape pf_shape_;
};

}  // namespace bgfn::gfn
