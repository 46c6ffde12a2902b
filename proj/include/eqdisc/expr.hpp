#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eqdisc {

enum class NodeKind : std::uint8_t { constant, param, var, unary, binary, call };

enum class UnaryOp : std::uint8_t { neg };

enum class BinaryOp : std::uint8_t { add, sub, mul, div, pow };

enum class FunctionId : std::uint8_t {
  sin,
  cos,
  tan,
  tanh,
  exp,
  log,
  sqrt,
  abs,
  gamma,
  sigmoid,
  clip01,
};

inline constexpr std::array<FunctionId, 11> kAllFunctions = {
    FunctionId::sin,  FunctionId::cos,   FunctionId::tan,     FunctionId::tanh,
    FunctionId::exp,  FunctionId::log,   FunctionId::sqrt,    FunctionId::abs,
    FunctionId::gamma, FunctionId::sigmoid, FunctionId::clip01,
};

std::string_view function_name(FunctionId f) noexcept;
std::optional<FunctionId> find_function(std::string_view name) noexcept;
// Every built-in takes exactly one argument.
constexpr std::size_t function_arity(FunctionId) noexcept { return 1; }

std::string_view binary_symbol(BinaryOp op) noexcept;

struct Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable AST node. Subtrees are shared freely between expressions.
struct Node {
  NodeKind kind = NodeKind::constant;
  double value = 0.0;      // constant
  std::size_t index = 0;   // param slot or variable column
  UnaryOp unary_op = UnaryOp::neg;
  BinaryOp binary_op = BinaryOp::add;
  FunctionId function = FunctionId::sin;
  std::vector<NodePtr> children;

  static NodePtr make_constant(double v);
  static NodePtr make_param(std::size_t slot);
  static NodePtr make_var(std::size_t column);
  static NodePtr make_neg(NodePtr child);
  static NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
  static NodePtr make_call(FunctionId f, NodePtr arg);

  bool is_leaf() const noexcept { return children.empty(); }
};

// Nodes on the longest root-to-leaf path; a leaf has depth 1.
std::size_t tree_depth(const Node& n) noexcept;
std::size_t tree_size(const Node& n) noexcept;
// Distinct parameter slots referenced by the tree.
std::size_t distinct_params(const Node& n);

bool structurally_equal(const Node& a, const Node& b) noexcept;
// Like structurally_equal, but any parameter slot matches any other.
bool equal_modulo_params(const Node& a, const Node& b) noexcept;
// True if some subtree of `haystack` equals `needle` modulo parameter slots.
bool contains_subtree(const Node& haystack, const Node& needle) noexcept;

// Preorder listing of every node; index 0 is the root.
std::vector<const Node*> preorder(const Node& root);
// Copy of `root` where the preorder-th node is replaced by `replacement`.
NodePtr replace_at(const NodePtr& root, std::size_t preorder_index, NodePtr replacement);

// Renumbers parameter slots 0..M-1 by first appearance in preorder
// (which is also their left-to-right textual order).
NodePtr reindex_params(const NodePtr& root, std::size_t* param_count = nullptr);

// A validated expression: parameter slots are contiguous from 0, variable
// indices are within var_names, and every constant is finite and
// non-negative (negation is always an explicit unary node).
class Expression {
 public:
  // The constant 0 over no variables.
  Expression();
  // Throws ValidationError if the tree violates an invariant.
  Expression(NodePtr root, std::vector<std::string> var_names, std::string source_text = {});

  const Node& root() const noexcept { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  const std::vector<std::string>& var_names() const noexcept { return var_names_; }
  std::size_t var_count() const noexcept { return var_names_.size(); }
  std::size_t param_count() const noexcept { return param_count_; }
  const std::string& source_text() const noexcept { return source_text_; }

 private:
  NodePtr root_;
  std::vector<std::string> var_names_;
  std::size_t param_count_ = 0;
  std::string source_text_;
};

std::size_t depth(const Expression& e) noexcept;
std::size_t count_params(const Expression& e) noexcept;

bool structurally_equal(const Expression& a, const Expression& b) noexcept;

}  // namespace eqdisc
