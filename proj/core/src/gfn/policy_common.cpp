#include "bgfn/gfn/policy_common.hpp"

#include "bgfn/error.hpp"
#include "bgfn/numkit/logspace.hpp"

namespace bgfn::gfn {

std::vector<double> masked_softmax_rows(const numkit::Matrix& logits, std::span<const bool> masks,
                                        numkit::Matrix& probs) {
  const auto rows = static_cast<std::size_t>(logits.rows());
  const auto cols = static_cast<std::size_t>(logits.cols());
  probs.resize(logits.rows(), logits.cols());
  std::vector<double> log_norm(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto mask = masks.subspan(r * cols, cols);
    bool any = false;
    for (bool m : mask) {
      any = any || m;
    }
    if (!any) {
      throw EnvironmentLogicError("policy evaluated at a state with no valid action");
    }
    log_norm[r] = numkit::masked_softmax(
        std::span<const double>(logits.row(static_cast<numkit::Index>(r)).data(), cols), mask,
        std::span<double>(probs.row(static_cast<numkit::Index>(r)).data(), cols));
  }
  return log_norm;
}

int sample_mixed_action(std::span<const double> probs, std::span<const bool> mask, double epsilon,
                        numkit::Rng& rng) {
  if (epsilon <= 0.0) {
    return static_cast<int>(numkit::sample_categorical(probs, rng));
  }
  int valid = 0;
  for (bool m : mask) {
    valid += m ? 1 : 0;
  }
  std::vector<double> mixed(probs.size());
  for (std::size_t a = 0; a < probs.size(); ++a) {
    mixed[a] = (1.0 - epsilon) * probs[a] + (mask[a] ? epsilon / valid : 0.0);
  }
  return static_cast<int>(numkit::sample_categorical(mixed, rng));
}

numkit::Matrix log_prob_logit_grad(const PolicyStepTape& step, std::span<const double> g) {
  numkit::Matrix d = -step.probs;
  for (std::size_t j = 0; j < step.rows.size(); ++j) {
    const double gj = g[static_cast<std::size_t>(step.rows[j])];
    const auto row = static_cast<numkit::Index>(j);
    d.row(row) *= gj;
    d(row, step.actions[j]) += gj;
  }
  return d;
}

bool step_has_signal(const PolicyStepTape& step, std::span<const double> g) {
  for (int r : step.rows) {
    if (g[static_cast<std::size_t>(r)] != 0.0) {
      return true;
    }
  }
  return false;
}

}  // namespace bgfn::gfn
