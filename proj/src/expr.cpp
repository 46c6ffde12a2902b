#include "eqdisc/expr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "eqdisc/error.hpp"

namespace eqdisc {

namespace {

constexpr std::array<std::string_view, 11> kFunctionNames = {
    "sin", "cos", "tan", "tanh", "exp", "log", "sqrt", "abs", "gamma", "sigmoid", "clip01",
};

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

void collect_preorder(const Node& n, std::vector<const Node*>& out) {
  out.push_back(&n);
  for (const auto& c : n.children) collect_preorder(*c, out);
}

void collect_params(const Node& n, std::set<std::size_t>& out) {
  if (n.kind == NodeKind::param) out.insert(n.index);
  for (const auto& c : n.children) collect_params(*c, out);
}

bool same_head(const Node& a, const Node& b) noexcept {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case NodeKind::constant:
      return std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value);
    case NodeKind::param:
    case NodeKind::var:
      return a.index == b.index;
    case NodeKind::unary:
      return a.unary_op == b.unary_op;
    case NodeKind::binary:
      return a.binary_op == b.binary_op;
    case NodeKind::call:
      return a.function == b.function;
  }
  return false;
}

NodePtr replace_preorder(const NodePtr& node, std::size_t& counter, std::size_t target,
                         const NodePtr& replacement) {
  const std::size_t here = counter;
  if (here == target) {
    counter += tree_size(*node);
    return replacement;
  }
  ++counter;
  if (node->is_leaf()) return node;
  Node copy = *node;
  bool changed = false;
  for (auto& c : copy.children) {
    const std::size_t span = tree_size(*c);
    if (target >= counter && target < counter + span) {
      c = replace_preorder(c, counter, target, replacement);
      changed = true;
    } else {
      counter += span;
    }
  }
  if (!changed) return node;
  return make_node(std::move(copy));
}

NodePtr reindex_rec(const NodePtr& node, std::map<std::size_t, std::size_t>& mapping) {
  if (node->kind == NodeKind::param) {
    auto [it, inserted] = mapping.try_emplace(node->index, mapping.size());
    if (it->second == node->index) return node;
    return Node::make_param(it->second);
  }
  if (node->is_leaf()) return node;
  Node copy = *node;
  bool changed = false;
  for (auto& c : copy.children) {
    auto updated = reindex_rec(c, mapping);
    if (updated != c) {
      c = std::move(updated);
      changed = true;
    }
  }
  if (!changed) return node;
  return make_node(std::move(copy));
}

void validate_tree(const Node& n, std::size_t var_count) {
  switch (n.kind) {
    case NodeKind::constant:
      if (!std::isfinite(n.value) || n.value < 0.0 || std::signbit(n.value))
        throw ValidationError("constants must be finite and non-negative");
      if (!n.children.empty()) throw ValidationError("constant node with children");
      return;
    case NodeKind::param:
      if (!n.children.empty()) throw ValidationError("parameter node with children");
      return;
    case NodeKind::var:
      if (n.index >= var_count)
        throw ValidationError("variable index " + std::to_string(n.index) +
                              " out of range for " + std::to_string(var_count) + " variables");
      if (!n.children.empty()) throw ValidationError("variable node with children");
      return;
    case NodeKind::unary:
      if (n.children.size() != 1) throw ValidationError("unary node needs one operand");
      break;
    case NodeKind::binary:
      if (n.children.size() != 2) throw ValidationError("binary node needs two operands");
      break;
    case NodeKind::call:
      if (n.children.size() != function_arity(n.function))
        throw ValidationError("function " + std::string(function_name(n.function)) +
                              " takes " + std::to_string(function_arity(n.function)) +
                              " argument(s)");
      break;
  }
  for (const auto& c : n.children) {
    if (!c) throw ValidationError("null child");
    validate_tree(*c, var_count);
  }
}

}  // namespace

std::string_view function_name(FunctionId f) noexcept {
  return kFunctionNames[static_cast<std::size_t>(f)];
}

std::optional<FunctionId> find_function(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kFunctionNames.size(); ++i)
    if (kFunctionNames[i] == name) return static_cast<FunctionId>(i);
  return std::nullopt;
}

std::string_view binary_symbol(BinaryOp op) noexcept {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::pow: return "^";
  }
  return "?";
}

NodePtr Node::make_constant(double v) {
  Node n;
  n.kind = NodeKind::constant;
  n.value = v;
  return make_node(std::move(n));
}

NodePtr Node::make_param(std::size_t slot) {
  Node n;
  n.kind = NodeKind::param;
  n.index = slot;
  return make_node(std::move(n));
}

NodePtr Node::make_var(std::size_t column) {
  Node n;
  n.kind = NodeKind::var;
  n.index = column;
  return make_node(std::move(n));
}

NodePtr Node::make_neg(NodePtr child) {
  Node n;
  n.kind = NodeKind::unary;
  n.unary_op = UnaryOp::neg;
  n.children.push_back(std::move(child));
  return make_node(std::move(n));
}

NodePtr Node::make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  Node n;
  n.kind = NodeKind::binary;
  n.binary_op = op;
  n.children.push_back(std::move(lhs));
  n.children.push_back(std::move(rhs));
  return make_node(std::move(n));
}

NodePtr Node::make_call(FunctionId f, NodePtr arg) {
  Node n;
  n.kind = NodeKind::call;
  n.function = f;
  n.children.push_back(std::move(arg));
  return make_node(std::move(n));
}

std::size_t tree_depth(const Node& n) noexcept {
  std::size_t deepest = 0;
  for (const auto& c : n.children) deepest = std::max(deepest, tree_depth(*c));
  return deepest + 1;
}

std::size_t tree_size(const Node& n) noexcept {
  std::size_t total = 1;
  for (const auto& c : n.children) total += tree_size(*c);
  return total;
}

std::size_t distinct_params(const Node& n) {
  std::set<std::size_t> slots;
  collect_params(n, slots);
  return slots.size();
}

bool structurally_equal(const Node& a, const Node& b) noexcept {
  if (&a == &b) return true;
  if (!same_head(a, b)) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

bool equal_modulo_params(const Node& a, const Node& b) noexcept {
  if (a.kind == NodeKind::param && b.kind == NodeKind::param) return true;
  if (!same_head(a, b)) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!equal_modulo_params(*a.children[i], *b.children[i])) return false;
  return true;
}

bool contains_subtree(const Node& haystack, const Node& needle) noexcept {
  if (equal_modulo_params(haystack, needle)) return true;
  for (const auto& c : haystack.children)
    if (contains_subtree(*c, needle)) return true;
  return false;
}

std::vector<const Node*> preorder(const Node& root) {
  std::vector<const Node*> out;
  collect_preorder(root, out);
  return out;
}

NodePtr replace_at(const NodePtr& root, std::size_t preorder_index, NodePtr replacement) {
  std::size_t counter = 0;
  return replace_preorder(root, counter, preorder_index, replacement);
}

NodePtr reindex_params(const NodePtr& root, std::size_t* param_count) {
  std::map<std::size_t, std::size_t> mapping;
  auto out = reindex_rec(root, mapping);
  if (param_count) *param_count = mapping.size();
  return out;
}

Expression::Expression() : root_(Node::make_constant(0.0)), source_text_("0") {}

Expression::Expression(NodePtr root, std::vector<std::string> var_names, std::string source_text)
    : root_(std::move(root)), var_names_(std::move(var_names)), source_text_(std::move(source_text)) {
  if (!root_) throw ValidationError("empty expression");
  validate_tree(*root_, var_names_.size());
  std::set<std::size_t> slots;
  collect_params(*root_, slots);
  param_count_ = slots.size();
  if (!slots.empty() && *slots.rbegin() + 1 != slots.size())
    throw ValidationError("parameter slots must form a contiguous range from p0");
}

std::size_t depth(const Expression& e) noexcept { return tree_depth(e.root()); }

std::size_t count_params(const Expression& e) noexcept { return e.param_count(); }

bool structurally_equal(const Expression& a, const Expression& b) noexcept {
  return a.var_names() == b.var_names() && structurally_equal(a.root(), b.root());
}

}  // namespace eqdisc
