#include "eqdisc/mutation.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>

#include "eqdisc/error.hpp"
#include "eqdisc/parser.hpp"

namespace eqdisc {

namespace {

constexpr std::uint64_t kMutationStream = 2;
constexpr int kRedraws = 10;
constexpr double kConstants[] = {0.5, 1.0, 2.0, 3.0};

NodePtr random_leaf(RandomStream& rng, std::size_t var_count, std::size_t& next_param) {
  const double u = rng.uniform01();
  if (var_count > 0 && u < 0.5) return Node::make_var(rng.below(var_count));
  if (u < 0.85) return Node::make_param(next_param++);
  return Node::make_constant(kConstants[rng.below(std::size(kConstants))]);
}

FunctionId random_function(RandomStream& rng) { return kAllFunctions[rng.below(kAllFunctions.size())]; }

// Shifts every parameter slot by `offset` so a grafted subtree gets fresh slots.
NodePtr shift_params(const NodePtr& n, std::size_t offset) {
  if (n->kind == NodeKind::param) return Node::make_param(n->index + offset);
  if (n->is_leaf()) return n;
  auto copy = std::make_shared<Node>(*n);
  for (auto& c : copy->children) c = shift_params(c, offset);
  return copy;
}

std::size_t max_param_slot(const Node& n) {
  std::size_t m = n.kind == NodeKind::param ? n.index + 1 : 0;
  for (const auto& c : n.children) m = std::max(m, max_param_slot(*c));
  return m;
}

std::vector<std::size_t> indices_where(const Node& root, bool (*pred)(const Node&)) {
  std::vector<std::size_t> out;
  const auto nodes = preorder(root);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (pred(*nodes[i])) out.push_back(i);
  return out;
}

NodePtr node_at(const NodePtr& root, std::size_t i) {
  std::size_t idx = 0;
  NodePtr found;
  std::function<bool(const NodePtr&)> walk = [&](const NodePtr& n) {
    if (idx++ == i) {
      found = n;
      return true;
    }
    for (const auto& c : n->children)
      if (walk(c)) return true;
    return false;
  };
  walk(root);
  return found;
}

}  // namespace

std::string_view edit_name(EditKind k) noexcept {
  switch (k) {
    case EditKind::none: return "none";
    case EditKind::replace: return "replace";
    case EditKind::crossover: return "crossover";
    case EditKind::wrap: return "wrap";
    case EditKind::unwrap: return "unwrap";
    case EditKind::insert_param: return "insert_param";
    case EditKind::prune: return "prune";
  }
  return "none";
}

NodePtr random_tree(RandomStream& rng, std::size_t var_count, std::size_t max_depth, std::size_t& next_param) {
  if (max_depth <= 1 || rng.chance(0.3)) return random_leaf(rng, var_count, next_param);
  const double u = rng.uniform01();
  if (u < 0.2) return Node::make_call(random_function(rng), random_tree(rng, var_count, max_depth - 1, next_param));
  if (u < 0.25) return Node::make_neg(random_tree(rng, var_count, max_depth - 1, next_param));
  if (u < 0.3) {
    auto base = random_tree(rng, var_count, max_depth - 1, next_param);
    return Node::make_binary(BinaryOp::pow, std::move(base), Node::make_constant(rng.chance(0.5) ? 2.0 : 3.0));
  }
  static constexpr BinaryOp ops[] = {BinaryOp::add, BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::mul,
                                     BinaryOp::div};
  const BinaryOp op = ops[rng.below(std::size(ops))];
  auto lhs = random_tree(rng, var_count, max_depth - 1, next_param);
  auto rhs = random_tree(rng, var_count, max_depth - 1, next_param);
  return Node::make_binary(op, std::move(lhs), std::move(rhs));
}

Expression random_expression(RandomStream& rng, const std::vector<std::string>& var_names, std::size_t max_depth) {
  std::size_t next = 0;
  auto root = reindex_params(random_tree(rng, var_names.size(), max_depth, next));
  return Expression(std::move(root), var_names);
}

Expression mutate(const Expression& expr, const Expression* ck_best, UpdateDirection direction, RandomStream& rng,
                  const MutationLimits& limits, EditKind* applied) {
  const NodePtr& root = expr.root_ptr();
  const std::size_t var_count = expr.var_count();
  const bool can_cross = ck_best && ck_best->var_names() == expr.var_names();

  for (int draw = 0; draw <= kRedraws; ++draw) {
    const auto nodes = preorder(*root);
    const std::size_t size = nodes.size();
    const std::size_t fresh = max_param_slot(*root);

    // replace 1, crossover 2 (with knowledge), wrap/unwrap 1, insert 1, prune 1
    const double total = can_cross ? 6.0 : 4.0;
    double u = rng.uniform01() * total;
    EditKind kind;
    if (u < 1.0) {
      kind = EditKind::replace;
    } else if (can_cross && u < 3.0) {
      kind = EditKind::crossover;
    } else {
      u -= can_cross ? 3.0 : 1.0;
      kind = u < 1.0 ? EditKind::wrap : u < 2.0 ? EditKind::insert_param : EditKind::prune;
    }

    const std::size_t at = rng.below(size);
    const NodePtr target = node_at(root, at);
    NodePtr out;
    switch (kind) {
      case EditKind::replace: {
        std::size_t next = fresh;
        out = replace_at(root, at, random_tree(rng, var_count, 3, next));
        break;
      }
      case EditKind::crossover: {
        const auto donor_nodes = preorder(ck_best->root());
        const std::size_t pick = rng.below(donor_nodes.size());
        const NodePtr donor = node_at(ck_best->root_ptr(), pick);
        out = replace_at(root, at, shift_params(donor, fresh));
        break;
      }
      case EditKind::wrap: {
        const auto calls = indices_where(*root, [](const Node& n) { return n.kind == NodeKind::call; });
        if (!calls.empty() && rng.chance(0.5)) {
          kind = EditKind::unwrap;
          const std::size_t c = calls[rng.below(calls.size())];
          const NodePtr call = node_at(root, c);
          out = replace_at(root, c, call->children[0]);
        } else {
          out = replace_at(root, at, Node::make_call(random_function(rng), target));
        }
        break;
      }
      case EditKind::insert_param: {
        const NodePtr p = Node::make_param(fresh);
        if (rng.chance(0.5)) {
          out = replace_at(root, at, Node::make_binary(BinaryOp::mul, p, target));
        } else {
          // Bias the additive form against the current error sign.
          const bool subtract = direction == UpdateDirection::overestimation ? rng.chance(0.8) : rng.chance(0.2);
          out = replace_at(root, at, Node::make_binary(subtract ? BinaryOp::sub : BinaryOp::add, target, p));
        }
        break;
      }
      case EditKind::prune: {
        const auto internal = indices_where(*root, [](const Node& n) { return !n.is_leaf(); });
        if (internal.empty()) continue;
        const std::size_t i = internal[rng.below(internal.size())];
        const NodePtr n = node_at(root, i);
        out = replace_at(root, i, n->children[rng.below(n->children.size())]);
        break;
      }
      default: continue;
    }

    std::size_t params = 0;
    out = reindex_params(out, &params);
    if (params > limits.max_params || tree_depth(*out) > limits.max_depth || tree_size(*out) > limits.max_nodes)
      continue;
    if (structurally_equal(*out, *root)) continue;
    try {
      Expression result(out, expr.var_names());
      if (applied) *applied = kind;
      return result;
    } catch (const ValidationError&) {
      continue;
    }
  }
  if (applied) *applied = EditKind::none;
  return expr;
}

RandomStream MutationGenerator::stream(const ProposalRequest& req) const {
  return RandomStream(derive_seed(seed_, {kMutationStream, req.agent_id, req.iteration, req.attempt}));
}

std::string MutationGenerator::initial(const ProblemSpec& spec, const Hypothesis& hyp, const ProposalRequest& req) {
  auto rng = stream(req);
  std::optional<Expression> frame;
  try {
    frame = parse(hyp.skeleton_text, spec);
  } catch (const Error&) {
  }
  if (frame && rng.chance(0.5)) return serialize(mutate(*frame, nullptr, UpdateDirection::underestimation, rng, limits_));
  return serialize(random_expression(rng, spec.var_names, 3));
}

std::string MutationGenerator::revise(const ProblemSpec& spec, const AgentState& self, const CollectiveKnowledge* ck,
                                      UpdateDirection direction, const ProposalRequest& req) {
  auto rng = stream(req);
  std::optional<Expression> best;
  if (ck) {
    try {
      best = parse(ck->f_best_text, spec);
    } catch (const Error&) {
    }
  }
  return serialize(mutate(self.expr, best ? &*best : nullptr, direction, rng, limits_));
}

std::string analyze_stub(const std::string& f_best_text, const std::string& domain_tag) {
  const Expression e = parse_free(f_best_text);
  std::map<std::string, std::size_t> census;
  std::set<std::size_t> vars;
  std::size_t constants = 0;
  for (const Node* n : preorder(e.root())) {
    switch (n->kind) {
      case NodeKind::binary: ++census[std::string(binary_symbol(n->binary_op))]; break;
      case NodeKind::unary: ++census["neg"]; break;
      case NodeKind::call: ++census[std::string(function_name(n->function))]; break;
      case NodeKind::var: vars.insert(n->index); break;
      case NodeKind::constant: ++constants; break;
      case NodeKind::param: break;
    }
  }
  std::string s = "Structure of " + serialize(e) + " (" + domain_tag + "):\n";
  s += "depth=" + std::to_string(depth(e)) + " params=" + std::to_string(e.param_count()) +
       " nodes=" + std::to_string(tree_size(e.root())) + " constants=" + std::to_string(constants) + "\n";
  s += "operators:";
  if (census.empty()) s += " none";
  for (const auto& [op, n] : census) s += " " + op + "x" + std::to_string(n);
  s += "\nvariables:";
  if (vars.empty()) s += " none";
  for (auto v : vars) s += " " + e.var_names()[v];
  s += "\ndomain: " + domain_tag + "\n";
  return s;
}

}  // namespace eqdisc
