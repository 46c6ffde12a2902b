#pragma once

// Test-side oracles. Nothing here calls into the evaluator, parser or
// scoring code under test; trees are built directly from Node factories.

#include <cmath>
#include <cstring>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "eqdisc/dataset.hpp"
#include "eqdisc/expr.hpp"
#include "eqdisc/rng.hpp"
#include "eqdisc/special.hpp"

namespace testsupport {

using eqdisc::BinaryOp;
using eqdisc::FunctionId;
using eqdisc::Node;
using eqdisc::NodeKind;
using eqdisc::NodePtr;
using eqdisc::RandomStream;

inline double pick_constant(RandomStream& rng) {
  static const double pool[] = {0.0, 1.0, 2.0, 0.5, 3.25, 1e-3, 1e-300, 1e20, 0.1, 0.3, 123456.789, 2.5e-7};
  if (rng.chance(0.5)) return pool[rng.below(std::size(pool))];
  return rng.uniform(0.0, 100.0);
}

// Grow-method tree; params get slot = first appearance in preorder so the
// result satisfies the contiguity invariant.
inline NodePtr grow_tree(RandomStream& rng, std::size_t nvars, std::size_t max_depth, std::size_t& next_param) {
  if (max_depth <= 1 || rng.chance(0.25)) {
    const auto u = rng.below(3);
    if (u == 0 && nvars > 0) return Node::make_var(rng.below(nvars));
    if (u == 1) return Node::make_param(next_param++);
    return Node::make_constant(pick_constant(rng));
  }
  switch (rng.below(4)) {
    case 0: return Node::make_neg(grow_tree(rng, nvars, max_depth - 1, next_param));
    case 1: {
      const auto f = eqdisc::kAllFunctions[rng.below(eqdisc::kAllFunctions.size())];
      return Node::make_call(f, grow_tree(rng, nvars, max_depth - 1, next_param));
    }
    default: {
      const auto op = static_cast<BinaryOp>(rng.below(5));
      auto l = grow_tree(rng, nvars, max_depth - 1, next_param);
      auto r = grow_tree(rng, nvars, max_depth - 1, next_param);
      return Node::make_binary(op, std::move(l), std::move(r));
    }
  }
}

inline std::vector<std::string> var_names(std::size_t n) {
  static const char* names[] = {"x", "y", "z", "t", "u", "w"};
  return {names, names + n};
}

inline eqdisc::Expression grow_expression(RandomStream& rng, std::size_t nvars, std::size_t max_depth) {
  std::size_t next = 0;
  return eqdisc::Expression(grow_tree(rng, nvars, max_depth, next), var_names(nvars));
}

inline double nonfinite_to_nan(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

// Recursive evaluation straight from the operator definitions: any
// non-finite intermediate becomes NaN and stays NaN.
inline double oracle_eval(const Node& n, const std::vector<double>& row, const std::vector<double>& p) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::param: return p.at(n.index);
    case NodeKind::var: return nonfinite_to_nan(row.at(n.index));
    case NodeKind::unary: {
      const double a = oracle_eval(*n.children[0], row, p);
      return std::isnan(a) ? nan : -a;
    }
    case NodeKind::call: {
      const double a = oracle_eval(*n.children[0], row, p);
      if (std::isnan(a)) return nan;
      switch (n.function) {
        case FunctionId::sin: return nonfinite_to_nan(std::sin(a));
        case FunctionId::cos: return nonfinite_to_nan(std::cos(a));
        case FunctionId::tan: return nonfinite_to_nan(std::tan(a));
        case FunctionId::tanh: return nonfinite_to_nan(std::tanh(a));
        case FunctionId::exp: return nonfinite_to_nan(std::exp(a));
        case FunctionId::log: return nonfinite_to_nan(std::log(a));
        case FunctionId::sqrt: return nonfinite_to_nan(std::sqrt(a));
        case FunctionId::abs: return std::fabs(a);
        case FunctionId::gamma: return nonfinite_to_nan(eqdisc::gamma_fn(a));
        case FunctionId::sigmoid: return nonfinite_to_nan(eqdisc::sigmoid(a));
        case FunctionId::clip01: return a < 0.0 ? 0.0 : (a > 1.0 ? 1.0 : a);
      }
      return nan;
    }
    case NodeKind::binary: {
      const double a = oracle_eval(*n.children[0], row, p);
      const double b = oracle_eval(*n.children[1], row, p);
      if (std::isnan(a) || std::isnan(b)) return nan;
      switch (n.binary_op) {
        case BinaryOp::add: return nonfinite_to_nan(a + b);
        case BinaryOp::sub: return nonfinite_to_nan(a - b);
        case BinaryOp::mul: return nonfinite_to_nan(a * b);
        case BinaryOp::div: return nonfinite_to_nan(a / b);
        case BinaryOp::pow: return nonfinite_to_nan(std::pow(a, b));
      }
    }
  }
  return nan;
}

inline std::size_t oracle_depth(const Node& n) {
  std::size_t d = 0;
  for (const auto& c : n.children) d = std::max(d, oracle_depth(*c));
  return d + 1;
}

inline void collect_params(const Node& n, std::set<std::size_t>& out) {
  if (n.kind == NodeKind::param) out.insert(n.index);
  for (const auto& c : n.children) collect_params(*c, out);
}

inline std::size_t oracle_param_count(const Node& n) {
  std::set<std::size_t> s;
  collect_params(n, s);
  return s.size();
}

// Row-loop SSE; NaN as soon as one residual is not finite.
inline double oracle_sse(const Node& root, const eqdisc::Dataset& d, const std::vector<double>& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto r = d.row(i);
    const double yhat = oracle_eval(root, std::vector<double>(r.begin(), r.end()), p);
    const double res = d.target(i) - yhat;
    if (!std::isfinite(res)) return std::numeric_limits<double>::quiet_NaN();
    total += res * res;
  }
  return total;
}

inline eqdisc::Dataset random_dataset(RandomStream& rng, std::size_t nvars, std::size_t rows, double lo = -3.0,
                                      double hi = 3.0) {
  eqdisc::Dataset d(var_names(nvars), "target");
  std::vector<double> row(nvars);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : row) v = rng.uniform(lo, hi);
    d.add_row(row, rng.uniform(-10.0, 10.0));
  }
  return d;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("eqdisc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testsupport
