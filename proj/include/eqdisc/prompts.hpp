#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "eqdisc/problem.hpp"

namespace eqdisc {

enum class PromptKind { initial_generation, program_analysis, ast_update };

std::string_view prompt_kind_name(PromptKind k) noexcept;

struct PromptTemplate {
  PromptKind kind = PromptKind::initial_generation;
  std::string text;
};

using PromptBindings = std::map<std::string, std::string, std::less<>>;

// Placeholders a template of this kind must contain, each exactly once.
const std::vector<std::string>& required_placeholders(PromptKind k);

// Built-in wording for each kind.
const PromptTemplate& builtin_template(PromptKind k);

// Placeholder names in order of appearance, e.g. {"PROBLEM_SPEC", ...}.
std::vector<std::string> placeholders_in(std::string_view text);

// Throws ValidationError when a required placeholder is missing or repeated,
// or an unknown one is present.
void validate_template(const PromptTemplate& tmpl);

// Single-pass substitution: text coming from a binding is never re-expanded.
// Throws MissingBinding for an absent or empty binding.
std::string render_prompt(const PromptTemplate& tmpl, const PromptBindings& bindings);

// Plain-text description of a problem used for the PROBLEM_SPEC slot.
std::string describe_problem(const ProblemSpec& spec);

}  // namespace eqdisc
