#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bgfn/numkit/param_set.hpp"

namespace bgfn::numkit {

/// Reverse-mode differentiation over a scalar expression graph.
///
/// Loss heads (TB, boosted, safeguard) are built here from per-trajectory
/// log-probabilities and the log-partition parameter. After backward(), the
/// adjoint of every node is available and scalar parameters bound with
/// param() receive their gradient directly in the owning ParamSet. Network
/// weights are reached by feeding leaf adjoints into mlp_backward().
class ScalarTape {
 public:
  struct Var {
    std::int32_t index = -1;
  };

  Var constant(double value, std::string_view label = {});
  Var leaf(double value, std::string_view label = {});
  /// Leaf bound to a 1x1 parameter; backward() adds its adjoint to the grad buffer.
  Var param(ParamSet& params, std::string_view name);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var square(Var a);
  Var log(Var a);
  Var exp(Var a);
  Var log1p(Var a);
  /// log(1 + exp(a)).
  Var softplus(Var a);
  /// log(exp(a) + exp(c)) for a constant c, which may be -inf.
  Var log_add_exp_const(Var a, double c);
  Var mean(std::span<const Var> terms);

  void set_label(Var v, std::string label);

  [[nodiscard]] double value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.index)).value; }
  [[nodiscard]] double adjoint(Var v) const { return nodes_.at(static_cast<std::size_t>(v.index)).adjoint; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 and propagates to every node created before
  /// root. Throws NumericError naming the first non-finite node found.
  void backward(Var root);

 private:
  enum class Op : std::uint8_t {
    kConstant, kLeaf, kAdd, kSub, kMul, kNeg, kScale, kAddConst,
    kSquare, kLog, kExp, kLog1p, kSoftplus, kLogAddExpConst, kMean
  };

  struct Node {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;  // second operand, or operand count for kMean
    double aux = 0.0;     // constant operand, or operand offset for kMean
    double value = 0.0;
    double adjoint = 0.0;
    std::string label;
  };

  Var push(Node node);
  [[nodiscard]] const Node& node(Var v) const;
  static const char* op_name(Op op);

  std::vector<Node> nodes_;
  std::vector<std::int32_t> operands_;
  std::vector<std::pair<std::int32_t, Param*>> bound_;
};

}  // namespace bgfn::numkit
