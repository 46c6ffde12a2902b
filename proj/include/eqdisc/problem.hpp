#pragma once

#include <string>
#include <vector>

namespace eqdisc {

// What the agents are asked to model: named inputs, one output, and the
// domain tag handed to the analyst.
struct ProblemSpec {
  std::string name;
  std::vector<std::string> var_names;
  std::string output_name;
  std::string description;
  std::string domain_tag;

  // Throws ValidationError: empty/duplicate names, names that collide with
  // built-in functions or parameter tokens, empty domain tag.
  void validate() const;
};

// Initial frame of the equation (an expression, possibly with prose).
struct Hypothesis {
  std::string skeleton_text;
};

bool is_identifier(const std::string& s) noexcept;
bool is_param_token(const std::string& s) noexcept;

}  // namespace eqdisc
