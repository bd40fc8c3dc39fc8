#include "bgfn/numkit/scalar_tape.hpp"

#include <cmath>

#include "bgfn/error.hpp"
#include "bgfn/numkit/logspace.hpp"

namespace bgfn::numkit {

ScalarTape::Var ScalarTape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const ScalarTape::Node& ScalarTape::node(Var v) const {
  if (v.index < 0 || static_cast<std::size_t>(v.index) >= nodes_.size()) {
    throw UsageError("ScalarTape: variable does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.index)];
}

ScalarTape::Var ScalarTape::constant(double value, std::string_view label) {
  return push(Node{.op = Op::kConstant, .value = value, .label = std::string(label)});
}

ScalarTape::Var ScalarTape::leaf(double value, std::string_view label) {
  return push(Node{.op = Op::kLeaf, .value = value, .label = std::string(label)});
}

ScalarTape::Var ScalarTape::param(ParamSet& params, std::string_view name) {
  Param& p = params.at(name);
  if (p.value.size() != 1) {
    throw ConfigError("ScalarTape::param: '" + p.name + "' is not a scalar");
  }
  Var v = leaf(p.value(0, 0), name);
  bound_.emplace_back(v.index, &p);
  return v;
}

ScalarTape::Var ScalarTape::add(Var a, Var b) {
  return push(Node{.op = Op::kAdd, .a = a.index, .b = b.index, .value = node(a).value + node(b).value});
}

ScalarTape::Var ScalarTape::sub(Var a, Var b) {
  return push(Node{.op = Op::kSub, .a = a.index, .b = b.index, .value = node(a).value - node(b).value});
}

ScalarTape::Var ScalarTape::mul(Var a, Var b) {
  return push(Node{.op = Op::kMul, .a = a.index, .b = b.index, .value = node(a).value * node(b).value});
}

ScalarTape::Var ScalarTape::neg(Var a) {
  return push(Node{.op = Op::kNeg, .a = a.index, .value = -node(a).value});
}

ScalarTape::Var ScalarTape::scale(Var a, double c) {
  return push(Node{.op = Op::kScale, .a = a.index, .aux = c, .value = c * node(a).value});
}

ScalarTape::Var ScalarTape::add_const(Var a, double c) {
  return push(Node{.op = Op::kAddConst, .a = a.index, .aux = c, .value = node(a).value + c});
}

ScalarTape::Var ScalarTape::square(Var a) {
  const double x = node(a).value;
  return push(Node{.op = Op::kSquare, .a = a.index, .value = x * x});
}

ScalarTape::Var ScalarTape::log(Var a) {
  return push(Node{.op = Op::kLog, .a = a.index, .value = std::log(node(a).value)});
}

ScalarTape::Var ScalarTape::exp(Var a) {
  return push(Node{.op = Op::kExp, .a = a.index, .value = std::exp(node(a).value)});
}

ScalarTape::Var ScalarTape::log1p(Var a) {
  return push(Node{.op = Op::kLog1p, .a = a.index, .value = std::log1p(node(a).value)});
}

ScalarTape::Var ScalarTape::softplus(Var a) {
  const double x = node(a).value;
  const double v = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return push(Node{.op = Op::kSoftplus, .a = a.index, .value = v});
}

ScalarTape::Var ScalarTape::log_add_exp_const(Var a, double c) {
  return push(Node{.op = Op::kLogAddExpConst, .a = a.index, .aux = c,
                   .value = log_add_exp(node(a).value, c)});
}

ScalarTape::Var ScalarTape::mean(std::span<const Var> terms) {
  if (terms.empty()) {
    throw UsageError("ScalarTape::mean: no terms");
  }
  const auto offset = static_cast<double>(operands_.size());
  double sum = 0.0;
  for (Var t : terms) {
    sum += node(t).value;
    operands_.push_back(t.index);
  }
  const auto n = static_cast<std::int32_t>(terms.size());
  return push(Node{.op = Op::kMean, .b = n, .aux = offset, .value = sum / n});
}

void ScalarTape::set_label(Var v, std::string label) {
  nodes_.at(static_cast<std::size_t>(v.index)).label = std::move(label);
}

const char* ScalarTape::op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kNeg: return "neg";
    case Op::kScale: return "scale";
    case Op::kAddConst: return "add_const";
    case Op::kSquare: return "square";
    case Op::kLog: return "log";
    case Op::kExp: return "exp";
    case Op::kLog1p: return "log1p";
    case Op::kSoftplus: return "softplus";
    case Op::kLogAddExpConst: return "log_add_exp";
    case Op::kMean: return "mean";
  }
  return "?";
}

void ScalarTape::backward(Var root) {
  (void)node(root);
  const auto end = static_cast<std::size_t>(root.index) + 1;
  for (auto& n : nodes_) {
    n.adjoint = 0.0;
  }
  nodes_[end - 1].adjoint = 1.0;

  auto fail = [&](std::size_t i, const char* what) {
    const Node& n = nodes_[i];
    throw NumericError(std::string("non-finite ") + what + " at tape node #" + std::to_string(i) +
                       " (" + op_name(n.op) + (n.label.empty() ? "" : ", '" + n.label + "'") +
                       "): value=" + std::to_string(n.value) +
                       " adjoint=" + std::to_string(n.adjoint));
  };

  for (std::size_t i = end; i-- > 0;) {
    Node& n = nodes_[i];
    if (!std::isfinite(n.value)) {
      fail(i, "value");
    }
    if (!std::isfinite(n.adjoint)) {
      fail(i, "gradient");
    }
    const double g = n.adjoint;
    if (g == 0.0 || n.op == Op::kConstant || n.op == Op::kLeaf) {
      continue;
    }
    if (n.op == Op::kMean) {
      const auto offset = static_cast<std::size_t>(n.aux);
      const double share = g / n.b;
      for (std::int32_t k = 0; k < n.b; ++k) {
        nodes_[static_cast<std::size_t>(operands_[offset + static_cast<std::size_t>(k)])].adjoint += share;
      }
      continue;
    }
    Node& A = nodes_[static_cast<std::size_t>(n.a)];
    switch (n.op) {
      case Op::kConstant:
      case Op::kLeaf:
        break;
      case Op::kAdd:
        A.adjoint += g;
        nodes_[static_cast<std::size_t>(n.b)].adjoint += g;
        break;
      case Op::kSub:
        A.adjoint += g;
        nodes_[static_cast<std::size_t>(n.b)].adjoint -= g;
        break;
      case Op::kMul: {
        Node& B = nodes_[static_cast<std::size_t>(n.b)];
        A.adjoint += g * B.value;
        B.adjoint += g * A.value;
        break;
      }
      case Op::kNeg:
        A.adjoint -= g;
        break;
      case Op::kScale:
        A.adjoint += g * n.aux;
        break;
      case Op::kAddConst:
        A.adjoint += g;
        break;
      case Op::kSquare:
        A.adjoint += 2.0 * A.value * g;
        break;
      case Op::kLog:
        A.adjoint += g / A.value;
        break;
      case Op::kExp:
        A.adjoint += g * n.value;
        break;
      case Op::kLog1p:
        A.adjoint += g / (1.0 + A.value);
        break;
      case Op::kSoftplus:
        A.adjoint += g * sigmoid(A.value);
        break;
      case Op::kLogAddExpConst:
        A.adjoint += g * sigmoid(A.value - n.aux);
        break;
      case Op::kMean:
        break;
    }
  }

  for (auto& [index, p] : bound_) {
    if (static_cast<std::size_t>(index) < end) {
      p->grad(0, 0) += nodes_[static_cast<std::size_t>(index)].adjoint;
    }
  }
}

}  // namespace bgfn::numkit
