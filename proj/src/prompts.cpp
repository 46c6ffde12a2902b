#include "eqdisc/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "eqdisc/error.hpp"

namespace eqdisc {

namespace {

const std::vector<std::string> kKnown = {"PROBLEM_SPEC", "HYPOTHESIS",   "DOMAIN",           "BEST_EQUATION",
                                         "ANALYSIS",     "CURRENT_EXPR", "UPDATE_DIRECTION", "GRAMMAR_REFERENCE"};

bool known(std::string_view name) { return std::find(kKnown.begin(), kKnown.end(), name) != kKnown.end(); }

// Finds "{NAME}" with NAME made of A-Z and '_'. Returns npos if none.
std::size_t find_placeholder(std::string_view text, std::size_t from, std::size_t& len) {
  for (std::size_t i = text.find('{', from); i != std::string_view::npos; i = text.find('{', i + 1)) {
    std::size_t j = i + 1;
    while (j < text.size() && (std::isupper(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      len = j - i + 1;
      return i;
    }
  }
  return std::string_view::npos;
}

const char* kInitial =
    "You are a scientist proposing a governing equation from observation data.\n"
    "\n"
    "Problem:\n"
    "{PROBLEM_SPEC}\n"
    "\n"
    "Initial hypothesis (a frame for the equation):\n"
    "{HYPOTHESIS}\n"
    "\n"
    "{GRAMMAR_REFERENCE}\n"
    "Propose one candidate equation for the output as a function of the inputs. Keep it as simple as\n"
    "the data allow: every extra level of nesting and every extra parameter is penalized.\n"
    "Reply with the expression only, inside a single fenced code block, for example:\n"
    "```\n"
    "p0*x + p1\n"
    "```\n";

const char* kAnalysis =
    "You are an expert in {DOMAIN}.\n"
    "\n"
    "Problem:\n"
    "{PROBLEM_SPEC}\n"
    "\n"
    "Current best equation:\n"
    "{BEST_EQUATION}\n"
    "\n"
    "Explain the logical structure of this equation: what each term contributes, which terms look\n"
    "physically meaningful, which look spurious, and what is likely missing. Answer in a few short\n"
    "paragraphs of plain text. If you quote an expression, put it inside a single fenced code block.\n";

const char* kUpdate =
    "You are refining a candidate equation for the problem below.\n"
    "\n"
    "Problem:\n"
    "{PROBLEM_SPEC}\n"
    "\n"
    "Your current equation:\n"
    "{CURRENT_EXPR}\n"
    "\n"
    "Best equation found by the group so far:\n"
    "{BEST_EQUATION}\n"
    "\n"
    "Analysis of the best equation:\n"
    "{ANALYSIS}\n"
    "\n"
    "On the training data your current equation shows {UPDATE_DIRECTION} on average.\n"
    "Edit the structure of your equation (add, remove or replace sub-expressions) to correct this,\n"
    "borrowing from the group's best equation where it helps.\n"
    "\n"
    "{GRAMMAR_REFERENCE}\n"
    "Reply with the revised expression only, inside a single fenced code block.\n";

}  // namespace

std::string_view prompt_kind_name(PromptKind k) noexcept {
  switch (k) {
    case PromptKind::initial_generation: return "initial_generation";
    case PromptKind::program_analysis: return "program_analysis";
    case PromptKind::ast_update: return "ast_update";
  }
  return "initial_generation";
}

const std::vector<std::string>& required_placeholders(PromptKind k) {
  static const std::vector<std::string> initial = {"PROBLEM_SPEC", "HYPOTHESIS", "GRAMMAR_REFERENCE"};
  static const std::vector<std::string> analysis = {"DOMAIN", "PROBLEM_SPEC", "BEST_EQUATION"};
  static const std::vector<std::string> update = {"PROBLEM_SPEC", "CURRENT_EXPR",     "BEST_EQUATION",
                                                  "ANALYSIS",     "UPDATE_DIRECTION", "GRAMMAR_REFERENCE"};
  switch (k) {
    case PromptKind::initial_generation: return initial;
    case PromptKind::program_analysis: return analysis;
    case PromptKind::ast_update: return update;
  }
  return initial;
}

const PromptTemplate& builtin_template(PromptKind k) {
  static const PromptTemplate initial{PromptKind::initial_generation, kInitial};
  static const PromptTemplate analysis{PromptKind::program_analysis, kAnalysis};
  static const PromptTemplate update{PromptKind::ast_update, kUpdate};
  switch (k) {
    case PromptKind::initial_generation: return initial;
    case PromptKind::program_analysis: return analysis;
    case PromptKind::ast_update: return update;
  }
  return initial;
}

std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> out;
  std::size_t len = 0;
  for (std::size_t i = find_placeholder(text, 0, len); i != std::string_view::npos;
       i = find_placeholder(text, i + len, len))
    out.emplace_back(text.substr(i + 1, len - 2));
  return out;
}

void validate_template(const PromptTemplate& tmpl) {
  const auto found = placeholders_in(tmpl.text);
  for (const auto& name : found) {
    if (!known(name)) throw ValidationError("template uses unknown placeholder {" + name + "}");
    const auto& req = required_placeholders(tmpl.kind);
    if (std::find(req.begin(), req.end(), name) == req.end())
      throw ValidationError("placeholder {" + name + "} does not belong in a " +
                            std::string(prompt_kind_name(tmpl.kind)) + " template");
  }
  for (const auto& name : required_placeholders(tmpl.kind)) {
    const auto n = std::count(found.begin(), found.end(), name);
    if (n != 1)
      throw ValidationError("placeholder {" + name + "} appears " + std::to_string(n) + " times, expected once");
  }
}

std::string render_prompt(const PromptTemplate& tmpl, const PromptBindings& bindings) {
  for (const auto& name : required_placeholders(tmpl.kind)) {
    auto it = bindings.find(name);
    if (it == bindings.end() || it->second.empty()) throw MissingBinding(name);
  }
  const std::string_view text = tmpl.text;
  std::string out;
  out.reserve(text.size() + 512);
  std::size_t pos = 0, len = 0;
  for (std::size_t i = find_placeholder(text, 0, len); i != std::string_view::npos;
       i = find_placeholder(text, i + len, len)) {
    const std::string_view name = text.substr(i + 1, len - 2);
    if (!known(name)) continue;
    auto it = bindings.find(name);
    if (it == bindings.end() || it->second.empty()) throw MissingBinding(std::string(name));
    out.append(text.substr(pos, i - pos));
    out.append(it->second);
    pos = i + len;
  }
  out.append(text.substr(pos));
  return out;
}

std::string describe_problem(const ProblemSpec& spec) {
  std::string s = "name: " + spec.name + "\ninputs: ";
  for (std::size_t i = 0; i < spec.var_names.size(); ++i) {
    if (i) s += ", ";
    s += spec.var_names[i];
  }
  s += "\noutput: " + spec.output_name + "\ndomain: " + spec.domain_tag;
  if (!spec.description.empty()) s += "\ndescription: " + spec.description;
  return s;
}

}  // namespace eqdisc
