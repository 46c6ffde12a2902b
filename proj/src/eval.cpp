#include "eqdisc/eval.hpp"

#include <cmath>
#include <limits>

#include "eqdisc/dataset.hpp"
#include "eqdisc/error.hpp"
#include "eqdisc/special.hpp"

namespace eqdisc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double finite_or_nan(double v) noexcept { return std::isfinite(v) ? v : kNaN; }

double eval_node(const Node& n, std::span<const double> row, std::span<const double> params) noexcept {
  switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::param: return params[n.index];
    case NodeKind::var: return finite_or_nan(row[n.index]);
    case NodeKind::unary: {
      const double a = eval_node(*n.children[0], row, params);
      return std::isfinite(a) ? -a : kNaN;
    }
    case NodeKind::call: {
      const double a = eval_node(*n.children[0], row, params);
      return std::isfinite(a) ? apply_function(n.function, a) : kNaN;
    }
    case NodeKind::binary: {
      const double a = eval_node(*n.children[0], row, params);
      if (!std::isfinite(a)) return kNaN;
      const double b = eval_node(*n.children[1], row, params);
      if (!std::isfinite(b)) return kNaN;
      return apply_binary(n.binary_op, a, b);
    }
  }
  return kNaN;
}

void check_arity(const Expression& e, std::size_t row_len, std::size_t param_len) {
  if (row_len != e.var_count())
    throw ArityError("row has " + std::to_string(row_len) + " values, expression expects " +
                     std::to_string(e.var_count()));
  if (param_len != e.param_count())
    throw ArityError("got " + std::to_string(param_len) + " parameters, expression has " +
                     std::to_string(e.param_count()));
}

}  // namespace

double apply_function(FunctionId f, double x) noexcept {
  double r = kNaN;
  switch (f) {
    case FunctionId::sin: r = std::sin(x); break;
    case FunctionId::cos: r = std::cos(x); break;
    case FunctionId::tan: r = std::tan(x); break;
    case FunctionId::tanh: r = std::tanh(x); break;
    case FunctionId::exp: r = std::exp(x); break;
    case FunctionId::log: r = x > 0.0 ? std::log(x) : kNaN; break;
    case FunctionId::sqrt: r = x >= 0.0 ? std::sqrt(x) : kNaN; break;
    case FunctionId::abs: r = std::fabs(x); break;
    case FunctionId::gamma: r = gamma_fn(x); break;
    case FunctionId::sigmoid: r = sigmoid(x); break;
    case FunctionId::clip01: r = clip01(x); break;
  }
  return finite_or_nan(r);
}

double apply_binary(BinaryOp op, double a, double b) noexcept {
  double r = kNaN;
  switch (op) {
    case BinaryOp::add: r = a + b; break;
    case BinaryOp::sub: r = a - b; break;
    case BinaryOp::mul: r = a * b; break;
    case BinaryOp::div: r = b != 0.0 ? a / b : kNaN; break;
    case BinaryOp::pow:
      if (a < 0.0 && b != std::floor(b)) return kNaN;
      if (a == 0.0 && b < 0.0) return kNaN;
      r = std::pow(a, b);
      break;
  }
  return finite_or_nan(r);
}

double evaluate(const Expression& e, std::span<const double> row, std::span<const double> params) {
  check_arity(e, row.size(), params.size());
  for (double p : params)
    if (!std::isfinite(p)) return kNaN;
  return eval_node(e.root(), row, params);
}

CompiledExpr::CompiledExpr(const Expression& e)
    : var_count_(e.var_count()), param_count_(e.param_count()) {
  emit(e.root());
  // Exact stack requirement of the postfix program.
  std::size_t depth = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::constant:
      case Op::param:
      case Op::var:
        stack_size_ = std::max(stack_size_, ++depth);
        break;
      case Op::neg:
      case Op::call:
        break;
      default:
        --depth;
        break;
    }
  }
}

void CompiledExpr::emit(const Node& n) {
  for (const auto& c : n.children) emit(*c);
  Instr in{Op::constant, n.function, n.index, n.value};
  switch (n.kind) {
    case NodeKind::constant: in.op = Op::constant; break;
    case NodeKind::param: in.op = Op::param; break;
    case NodeKind::var: in.op = Op::var; break;
    case NodeKind::unary: in.op = Op::neg; break;
    case NodeKind::call: in.op = Op::call; break;
    case NodeKind::binary:
      switch (n.binary_op) {
        case BinaryOp::add: in.op = Op::add; break;
        case BinaryOp::sub: in.op = Op::sub; break;
        case BinaryOp::mul: in.op = Op::mul; break;
        case BinaryOp::div: in.op = Op::div; break;
        case BinaryOp::pow: in.op = Op::pow; break;
      }
      break;
  }
  code_.push_back(in);
}

double CompiledExpr::run(std::span<const double> row, std::span<const double> params) const noexcept {
  // Small fixed buffer covers typical trees; deeper ones fall back to heap.
  double local[64] = {};
  std::vector<double> heap;
  double* stack = local;
  if (stack_size_ > 64) {
    heap.resize(stack_size_);
    stack = heap.data();
  }
  std::size_t top = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::constant: stack[top++] = in.value; break;
      case Op::param: stack[top++] = finite_or_nan(params[in.index]); break;
      case Op::var: stack[top++] = finite_or_nan(row[in.index]); break;
      case Op::neg: {
        const double a = stack[top - 1];
        stack[top - 1] = std::isfinite(a) ? -a : kNaN;
        break;
      }
      case Op::call: {
        const double a = stack[top - 1];
        stack[top - 1] = std::isfinite(a) ? apply_function(in.function, a) : kNaN;
        break;
      }
      default: {
        const double b = stack[--top];
        const double a = stack[top - 1];
        if (!std::isfinite(a) || !std::isfinite(b)) {
          stack[top - 1] = kNaN;
          break;
        }
        BinaryOp op = BinaryOp::add;
        switch (in.op) {
          case Op::sub: op = BinaryOp::sub; break;
          case Op::mul: op = BinaryOp::mul; break;
          case Op::div: op = BinaryOp::div; break;
          case Op::pow: op = BinaryOp::pow; break;
          default: break;
        }
        stack[top - 1] = apply_binary(op, a, b);
        break;
      }
    }
  }
  return stack[0];
}

std::vector<double> evaluate_batch(const Expression& e, const Dataset& data,
                                   std::span<const double> params) {
  check_arity(e, data.var_count(), params.size());
  const CompiledExpr program(e);
  std::vector<double> out(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out[i] = program.run(data.row(i), params);
  return out;
}

}  // namespace eqdisc
