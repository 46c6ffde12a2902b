#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqdisc/expr.hpp"
#include "eqdisc/problem.hpp"

namespace eqdisc {

struct ParseOptions {
  // Turn every numeric literal into a fresh parameter slot.
  bool promote_literals = false;
};

// Grammar (loosest to tightest):
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := ('-' | '+') unary | power
//   power    := primary ('^' exponent)?          right-associative
//   exponent := ('-' | '+') exponent | power
//   primary  := number | param | var | func '(' expr ')' | 'pow' '(' expr ',' expr ')'
//             | '(' expr ')'
// `**` is accepted as a synonym for `^`.
//
// Throws SyntaxError for malformed text and ValidationError for unknown
// identifiers or wrong call arity.
Expression parse(std::string_view text, const std::vector<std::string>& var_names,
                 const ParseOptions& options = {});
Expression parse(std::string_view text, const ProblemSpec& spec,
                 const ParseOptions& options = {});

// Grammar check without a schema: every unknown identifier becomes a
// variable, numbered by first appearance.
Expression parse_free(std::string_view text, const ParseOptions& options = {});

// Canonical text with minimal parentheses. parse(serialize(e)) reproduces e.
std::string serialize(const Expression& e);
std::string serialize(const Node& root, std::span<const std::string> var_names);

// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

// Human-readable grammar summary embedded in prompts.
const std::string& grammar_reference();

}  // namespace eqdisc
