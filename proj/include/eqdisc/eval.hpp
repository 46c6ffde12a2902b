#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eqdisc/expr.hpp"

namespace eqdisc {

class Dataset;

// Real-valued semantics: any domain violation (log of a non-positive value,
// division by zero, fractional power of a negative base, gamma at a pole,
// overflow) yields NaN, and NaN anywhere below a node makes the node NaN.
double apply_function(FunctionId f, double x) noexcept;
double apply_binary(BinaryOp op, double a, double b) noexcept;

// Throws ArityError when row or params have the wrong length.
double evaluate(const Expression& e, std::span<const double> row, std::span<const double> params);

// Flattened postfix form of an expression, cheaper to run over many rows.
// Produces bit-identical results to evaluate().
class CompiledExpr {
 public:
  explicit CompiledExpr(const Expression& e);

  std::size_t var_count() const noexcept { return var_count_; }
  std::size_t param_count() const noexcept { return param_count_; }

  // No arity checks; callers validate once per batch.
  double run(std::span<const double> row, std::span<const double> params) const noexcept;

 private:
  enum class Op : unsigned char { constant, param, var, neg, add, sub, mul, div, pow, call };
  struct Instr {
    Op op;
    FunctionId function;
    std::size_t index;
    double value;
  };
  void emit(const Node& n);

  std::vector<Instr> code_;
  std::size_t stack_size_ = 0;
  std::size_t var_count_ = 0;
  std::size_t param_count_ = 0;
};

// One prediction per dataset row.
std::vector<double> evaluate_batch(const Expression& e, const Dataset& data,
                                   std::span<const double> params);

}  // namespace eqdisc
