#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eqdisc/agent.hpp"
#include "eqdisc/rng.hpp"

namespace eqdisc {

struct MutationLimits {
  std::size_t max_depth = 8;
  std::size_t max_params = 6;
  std::size_t max_nodes = 40;
};

enum class EditKind { none, replace, crossover, wrap, unwrap, insert_param, prune };

std::string_view edit_name(EditKind k) noexcept;

// Random tree of depth at most max_depth over var_count variables. New
// parameter slots start at *next_param, which is advanced.
NodePtr random_tree(RandomStream& rng, std::size_t var_count, std::size_t max_depth, std::size_t& next_param);

Expression random_expression(RandomStream& rng, const std::vector<std::string>& var_names, std::size_t max_depth = 3);

// Applies one seeded edit. An edit whose result is invalid, exceeds the
// limits or equals the input is re-drawn, up to 10 times; after that the
// input comes back unchanged. `ck_best` may be null.
Expression mutate(const Expression& expr, const Expression* ck_best, UpdateDirection direction, RandomStream& rng,
                  const MutationLimits& limits = {}, EditKind* applied = nullptr);

// Offline generator: proposals are mutations drawn from a stream keyed by
// (seed, agent, iteration, attempt), so any schedule gives the same output.
class MutationGenerator final : public GeneratorBackend {
 public:
  explicit MutationGenerator(std::uint64_t seed, MutationLimits limits = {}) : seed_(seed), limits_(limits) {}

  std::string initial(const ProblemSpec& spec, const Hypothesis& hyp, const ProposalRequest& req) override;
  std::string revise(const ProblemSpec& spec, const AgentState& self, const CollectiveKnowledge* ck,
                     UpdateDirection direction, const ProposalRequest& req) override;
  bool health() override { return true; }

 private:
  RandomStream stream(const ProposalRequest& req) const;

  std::uint64_t seed_;
  MutationLimits limits_;
};

// Structural summary of an expression: operator census, depth, parameter
// count, variables used and the domain. Throws SyntaxError.
std::string analyze_stub(const std::string& f_best_text, const std::string& domain_tag);

class StubAnalyst final : public AnalystBackend {
 public:
  std::string analyze(const std::string& f_best_text, const std::string& domain_tag) override {
    return analyze_stub(f_best_text, domain_tag);
  }
};

}  // namespace eqdisc
