#pragma once

#include <vector>

#include "bgfn/numkit/mlp.hpp"

namespace bgfn::gfn {

/// One rollout. log_pf is always the density under the unmixed forward
/// policy, even when actions were drawn from an epsilon-mixture.
template <class State>
struct TrajectoryRecord {
  std::vector<State> states;  // s_0 .. s_n
  std::vector<int> actions;   // a_t moves s_t -> s_{t+1}
  double log_pf = 0.0;
  double log_pb = 0.0;
  double log_reward = 0.0;
};

/// Activations kept from one batched policy evaluation so that gradients
/// of sum_i g_i * log pi(a_i | s_i) can be back-propagated later.
struct PolicyStepTape {
  numkit::MlpTape mlp;
  numkit::Matrix probs;       // masked softmax, one row per evaluated state
  std::vector<int> rows;      // trajectory index in the batch for each row
  std::vector<int> actions;   // action whose log-probability was taken
  std::vector<int> context;   // sequence policy: window tokens per row (row-major)
};

template <class State>
struct RolloutBatch {
  std::vector<TrajectoryRecord<State>> records;
  std::vector<PolicyStepTape> forward_steps;
  std::vector<PolicyStepTape> backward_steps;
};

}  // namespace bgfn::gfn
