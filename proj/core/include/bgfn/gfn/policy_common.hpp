#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bgfn/gfn/trajectory.hpp"
#include "bgfn/numkit/mlp.hpp"
#include "bgfn/numkit/param_set.hpp"
#include "bgfn/numkit/rng.hpp"

namespace bgfn::gfn {

inline constexpr std::string_view kLogZName = "logZ";
inline constexpr std::string_view kLogZGroup = "logz";

/// Row-wise masked softmax. `masks` holds rows * logits.cols() flags.
/// Fills probs and returns the per-row log normalizer; throws
/// EnvironmentLogicError when a row has no valid action.
std::vector<double> masked_softmax_rows(const numkit::Matrix& logits, std::span<const bool> masks,
                                        numkit::Matrix& probs);

/// Draws from (1 - eps) * probs + eps * Uniform(valid actions).
int sample_mixed_action(std::span<const double> probs, std::span<const bool> mask, double epsilon,
                        numkit::Rng& rng);

/// Gradient of sum_j g[rows[j]] * log softmax(logits_j)[actions[j]] with
/// respect to the logits.
numkit::Matrix log_prob_logit_grad(const PolicyStepTape& step, std::span<const double> g);

/// True when every g[rows[j]] is zero.
bool step_has_signal(const PolicyStepTape& step, std::span<const double> g);

}  // namespace bgfn::gfn
