#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eqdisc/expr.hpp"
#include "eqdisc/problem.hpp"

namespace eqdisc {

// Ordered below every finite score, so argmax over scores stays total.
inline constexpr double kWorstScore = -std::numeric_limits<double>::infinity();

enum class UpdateDirection { overestimation, underestimation };

std::string_view direction_name(UpdateDirection d) noexcept;

// One agent's local memory: its current expression and fitted parameters.
struct AgentState {
  std::size_t agent_id = 0;
  Expression expr;
  std::vector<double> params;
  double score = kWorstScore;
  std::size_t history_len = 0;  // accepted proposals so far
};

// The group's shared memory: best equation so far and its analysis.
struct CollectiveKnowledge {
  std::string f_best_text;
  std::string analysis_text;
  double score = kWorstScore;
  std::size_t iteration = 0;
};

// Identifies one proposal call so backends can derive per-call randomness
// and surface the previous parse error.
struct ProposalRequest {
  std::size_t agent_id = 0;
  std::size_t iteration = 0;  // 1-based
  std::size_t attempt = 0;    // 0 for the first try
  std::string feedback;       // parser error from the previous attempt
};

// Proposes expressions. Implementations must tolerate concurrent calls for
// distinct agents.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  virtual std::string initial(const ProblemSpec& spec, const Hypothesis& hyp, const ProposalRequest& req) = 0;
  // `ck` is null when collective knowledge is disabled.
  virtual std::string revise(const ProblemSpec& spec, const AgentState& self, const CollectiveKnowledge* ck,
                             UpdateDirection direction, const ProposalRequest& req) = 0;
  virtual bool health() = 0;
};

// Explains the best equation in natural language.
class AnalystBackend {
 public:
  virtual ~AnalystBackend() = default;

  virtual std::string analyze(const std::string& f_best_text, const std::string& domain_tag) = 0;
  virtual bool health() { return true; }
};

}  // namespace eqdisc
