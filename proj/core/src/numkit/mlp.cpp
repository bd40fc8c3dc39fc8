#include "bgfn/numkit/mlp.hpp"

#include <cmath>

#include "bgfn/error.hpp"

namespace bgfn::numkit {

std::string MlpShape::weight_name(std::size_t layer) const {
  return prefix + ".w" + std::to_string(layer);
}

std::string MlpShape::bias_name(std::size_t layer) const {
  return prefix + ".b" + std::to_string(layer);
}

void add_mlp_params(ParamSet& params, const MlpShape& shape, const std::string& group, Rng& rng) {
  if (shape.widths.size() < 2) {
    throw ConfigError("mlp '" + shape.prefix + "' needs at least an input and an output width");
  }
  for (std::size_t l = 0; l < shape.layer_count(); ++l) {
    const Index fan_in = shape.widths[l];
    const Index fan_out = shape.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Param& w = params.add(shape.weight_name(l), group, fan_in, fan_out);
    for (Index i = 0; i < w.value.size(); ++i) {
      w.value.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
    }
    Param& b = params.add(shape.bias_name(l), group, 1, fan_out);
    for (Index i = 0; i < b.value.size(); ++i) {
      b.value.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
    }
  }
}

void check_mlp_params(const ParamSet& params, const MlpShape& shape) {
  for (std::size_t l = 0; l < shape.layer_count(); ++l) {
    const Param* w = params.find(shape.weight_name(l));
    const Param* b = params.find(shape.bias_name(l));
    if (w == nullptr || b == nullptr) {
      throw ConfigError("mlp '" + shape.prefix + "': missing layer " + std::to_string(l));
    }
    if (w->value.rows() != shape.widths[l] || w->value.cols() != shape.widths[l + 1] ||
        b->value.rows() != 1 || b->value.cols() != shape.widths[l + 1]) {
      throw ConfigError("mlp '" + shape.prefix + "': layer " + std::to_string(l) +
                        " does not match declared widths");
    }
  }
}

namespace {

// out = in * W + b, row by row, accumulating over k in order.
void affine_rows(const Matrix& in, const Matrix& w, const Matrix& b, Matrix& out) {
  const Index rows = in.rows();
  const Index inner = w.rows();
  const Index cols = w.cols();
  out.resize(rows, cols);
  const double* bias = b.data();
  for (Index i = 0; i < rows; ++i) {
    double* __restrict o = out.row(i).data();
    for (Index j = 0; j < cols; ++j) {
      o[j] = bias[j];
    }
    const double* x = in.row(i).data();
    for (Index k = 0; k < inner; ++k) {
      const double a = x[k];
      if (a == 0.0) {
        continue;
      }
      const double* __restrict wk = w.row(k).data();
      for (Index j = 0; j < cols; ++j) {
        o[j] += a * wk[j];
      }
    }
  }
}

}  // namespace

Matrix mlp_forward(const ParamSet& params, const MlpShape& shape, const Matrix& input,
                   MlpTape* tape) {
  if (input.cols() != shape.input_width()) {
    throw ConfigError("mlp '" + shape.prefix + "': input width " + std::to_string(input.cols()) +
                      " != declared " + std::to_string(shape.input_width()));
  }
  const std::size_t layers = shape.layer_count();
  if (tape != nullptr) {
    tape->layer_inputs.resize(layers);
  }
  Matrix current = input;
  Matrix next;
  for (std::size_t l = 0; l < layers; ++l) {
    const Param& w = params.at(shape.weight_name(l));
    const Param& b = params.at(shape.bias_name(l));
    if (w.value.rows() != current.cols()) {
      throw ConfigError("mlp '" + shape.prefix + "': layer " + std::to_string(l) +
                        " shape mismatch");
    }
    affine_rows(current, w.value, b.value, next);
    if (l + 1 < layers) {
      next = next.cwiseMax(0.0);
    }
    if (tape != nullptr) {
      tape->layer_inputs[l] = std::move(current);
    }
    current = std::move(next);
  }
  return current;
}

Matrix mlp_backward(ParamSet& params, const MlpShape& shape, const MlpTape& tape,
                    const Matrix& d_output) {
  const std::size_t layers = shape.layer_count();
  if (tape.layer_inputs.size() != layers) {
    throw UsageError("mlp_backward: tape does not belong to this network");
  }
  Matrix delta = d_output;
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& x = tape.layer_inputs[l];
    Param& w = params.at(shape.weight_name(l));
    Param& b = params.at(shape.bias_name(l));
    w.grad.noalias() += x.transpose() * delta;
    b.grad.noalias() += delta.colwise().sum();
    Matrix d_input = delta * w.value.transpose();
    if (l > 0) {
      d_input = (x.array() > 0.0).select(d_input, 0.0);
    }
    delta = std::move(d_input);
  }
  return delta;
}

}  // namespace bgfn::numkit
