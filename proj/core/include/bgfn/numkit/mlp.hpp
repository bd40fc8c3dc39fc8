#pragma once

#include <string>
#include <vector>

#include "bgfn/numkit/param_set.hpp"
#include "bgfn/numkit/rng.hpp"

namespace bgfn::numkit {

/// Fully connected ReLU network. Parameters live in a ParamSet under
/// "<prefix>.w<l>" (in x out) and "<prefix>.b<l>" (1 x out).
struct MlpShape {
  std::string prefix;
  std::vector<Index> widths;  // input, hidden..., output

  [[nodiscard]] Index input_width() const { return widths.front(); }
  [[nodiscard]] Index output_width() const { return widths.back(); }
  [[nodiscard]] std::size_t layer_count() const { return widths.size() - 1; }
  [[nodiscard]] std::string weight_name(std::size_t layer) const;
  [[nodiscard]] std::string bias_name(std::size_t layer) const;
};

/// Registers the layers of `shape` in `params` with uniform fan-in
/// initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
void add_mlp_params(ParamSet& params, const MlpShape& shape, const std::string& group, Rng& rng);

/// Throws ConfigError unless every layer of `shape` exists with matching dimensions.
void check_mlp_params(const ParamSet& params, const MlpShape& shape);

/// Inputs of every layer recorded during a forward pass (post-ReLU for l > 0).
struct MlpTape {
  std::vector<Matrix> layer_inputs;
};

/// Batched forward pass; one row per example. Each output row depends only
/// on its input row, with a fixed accumulation order, so results are
/// bit-identical regardless of batch composition.
Matrix mlp_forward(const ParamSet& params, const MlpShape& shape, const Matrix& input,
                   MlpTape* tape = nullptr);

/// Reverse pass: accumulates weight and bias gradients into `params` and
/// returns the gradient with respect to the network input.
Matrix mlp_backward(ParamSet& params, const MlpShape& shape, const MlpTape& tape,
                    const Matrix& d_output);

}  // namespace bgfn::numkit
