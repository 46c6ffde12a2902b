#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqdisc/agent.hpp"
#include "eqdisc/dataset.hpp"
#include "eqdisc/fit.hpp"

namespace eqdisc {

enum class BackendKind { llm, mutation };
enum class Ablation { none, msi, no_ast };
enum class ScoreMode { full, sse_only };

struct ScoreOptions {
  ScoreMode mode = ScoreMode::full;
  // Divide the SSE by the row count before adding the complexity terms.
  bool sse_norm = false;
};

// -(SSE + depth + parameter count) in full mode, -SSE in sse_only mode;
// kWorstScore when the SSE is non-finite. Throws ArityError.
double discovery_score(const Expression& e, std::span<const double> params, const Dataset& data,
                       const ScoreOptions& options = {});
// Same formula from precomputed parts.
double score_from_parts(double sse, std::size_t depth, std::size_t params, std::size_t rows,
                        const ScoreOptions& options = {}) noexcept;

// Index of the highest score; ties go to the lowest index.
std::size_t select_best(std::span<const double> scores) noexcept;
// agent_id of the highest-scoring agent; ties go to the lowest agent_id.
std::size_t select_best_agent(std::span<const AgentState> agents) noexcept;

// residuals = predicted - observed. Overestimation iff the mean is positive.
// Throws LengthMismatch on an empty vector.
UpdateDirection update_direction(std::span<const double> residuals);

struct RunConfig {
  std::size_t agents = 50;       // K
  std::size_t iterations = 100;  // M
  std::uint64_t seed = 0;
  BackendKind backend = BackendKind::mutation;
  Ablation ablation = Ablation::none;
  FitConfig fit;
  ScoreOptions scoring;
  std::size_t workers = 1;            // agents evaluated concurrently
  std::size_t proposal_retries = 3;   // re-asks after an unparseable proposal

  // Applies the ablation constraints: msi forces K = 1, no_ast forces
  // sse_only scoring.
  void normalize() noexcept;
  // Throws ValidationError.
  void validate() const;
};

struct ArchiveEntry {
  std::string expr_text;
  std::vector<double> params;
  double score = kWorstScore;
  std::size_t iteration = 0;
  std::size_t agent_id = 0;
};

struct AgentSnapshot {
  std::size_t id = 0;
  std::string expr_text;
  double score = kWorstScore;
};

struct IterationSummary {
  std::size_t iteration = 0;
  std::vector<AgentSnapshot> agents;
  std::size_t generation_best_id = 0;
  double generation_best_score = kWorstScore;
  std::string generation_best_text;
  std::string archive_text;
  std::vector<double> archive_params;
  double archive_score = kWorstScore;
  std::string analysis_digest;  // first 16 hex chars of sha256(analysis); empty without CK
  std::size_t parse_failures = 0;
  double wall_ms = 0.0;
};

struct MemoryProbe {
  std::size_t reads = 0;
  std::size_t writes = 0;
};

// Group-level shared memory holding the collective knowledge. Every access
// is counted so ablations can prove the channel stayed closed.
class SharedMemory {
 public:
  const CollectiveKnowledge* read() noexcept {
    ++probe_.reads;
    return ck_ ? &*ck_ : nullptr;
  }
  void deposit(CollectiveKnowledge ck) {
    ++probe_.writes;
    ck_ = std::move(ck);
  }
  // Uncounted access for checkpointing and reporting.
  const std::optional<CollectiveKnowledge>& peek() const noexcept { return ck_; }
  const MemoryProbe& probe() const noexcept { return probe_; }
  void restore(std::optional<CollectiveKnowledge> ck, MemoryProbe probe) {
    ck_ = std::move(ck);
    probe_ = probe;
  }

 private:
  std::optional<CollectiveKnowledge> ck_;
  MemoryProbe probe_;
};

struct RunResult {
  ArchiveEntry archive;               // all-time best
  std::optional<CollectiveKnowledge> best;  // last deposited CK (absent under msi)
  std::vector<IterationSummary> per_iteration;
  MemoryProbe probe;
  double wall_time = 0.0;  // seconds
};

// Everything needed to continue a run: completed iteration count, agent
// memories, archive, shared memory. Per-agent randomness is derived from
// (seed, agent, iteration), so no generator state needs saving.
struct EngineState {
  std::size_t completed = 0;
  std::vector<AgentState> agents;
  std::optional<ArchiveEntry> archive;
  std::optional<CollectiveKnowledge> ck;
  MemoryProbe probe;
  std::vector<IterationSummary> history;
};

// Runs the propose / fit-and-score / select / analyze-and-share loop one
// iteration at a time.
class DiscoveryEngine {
 public:
  DiscoveryEngine(RunConfig cfg, ProblemSpec spec, Hypothesis hyp, const Dataset& train,
                  GeneratorBackend& generator, AnalystBackend& analyst);

  // Throws BackendError if either backend fails its health check.
  void check_health();

  bool done() const noexcept { return completed_ >= cfg_.iterations; }
  std::size_t completed() const noexcept { return completed_; }

  // Executes the next iteration. Throws BackendError when a backend call
  // fails; the engine state is left at the previous iteration.
  const IterationSummary& step();

  EngineState state() const;
  void restore(EngineState state);

  RunResult result() const;
  const RunConfig& config() const noexcept { return cfg_; }
  const ProblemSpec& spec() const noexcept { return spec_; }
  const std::vector<AgentState>& agents() const noexcept { return agents_; }

 private:
  struct Proposal {
    std::optional<AgentState> state;
    std::size_t failures = 0;
  };
  Proposal propose(std::size_t k, std::size_t iteration, const CollectiveKnowledge* ck);
  AgentState fallback_state(std::size_t k) const;
  AgentState score_candidate(std::size_t k, Expression expr, std::size_t iteration, std::size_t history) const;

  RunConfig cfg_;
  ProblemSpec spec_;
  Hypothesis hyp_;
  const Dataset& train_;
  GeneratorBackend& generator_;
  AnalystBackend& analyst_;

  std::size_t completed_ = 0;
  std::vector<AgentState> agents_;
  std::optional<ArchiveEntry> archive_;
  SharedMemory memory_;
  std::vector<IterationSummary> history_;
};

RunResult run(const RunConfig& cfg, const ProblemSpec& spec, const Hypothesis& hyp, const Dataset& train,
              GeneratorBackend& generator, AnalystBackend& analyst);

std::string_view backend_name(BackendKind b) noexcept;
std::string_view ablation_name(Ablation a) noexcept;
std::string_view score_mode_name(ScoreMode m) noexcept;
std::optional<BackendKind> parse_backend(std::string_view s) noexcept;
std::optional<Ablation> parse_ablation(std::string_view s) noexcept;
std::optional<ScoreMode> parse_score_mode(std::string_view s) noexcept;

}  // namespace eqdisc
