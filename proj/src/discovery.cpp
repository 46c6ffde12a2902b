#include "eqdisc/discovery.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "eqdisc/error.hpp"
#include "eqdisc/eval.hpp"
#include "eqdisc/parser.hpp"
#include "eqdisc/rng.hpp"

namespace eqdisc {

namespace {

constexpr std::uint64_t kFitStream = 0x666974ULL;

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

std::string digest16(const std::string& text) { return sha256_hex(text).substr(0, 16); }

}  // namespace

std::string_view direction_name(UpdateDirection d) noexcept {
  return d == UpdateDirection::overestimation ? "overestimation" : "underestimation";
}

double score_from_parts(double sse, std::size_t depth, std::size_t params, std::size_t rows,
                        const ScoreOptions& options) noexcept {
  if (!std::isfinite(sse)) return kWorstScore;
  const double err = options.sse_norm && rows > 0 ? sse / static_cast<double>(rows) : sse;
  if (options.mode == ScoreMode::sse_only) return -err;
  return -(err + static_cast<double>(depth) + static_cast<double>(params));
}

double discovery_score(const Expression& e, std::span<const double> params, const Dataset& data,
                       const ScoreOptions& options) {
  const double s = sse(e, data, params);
  return score_from_parts(s, depth(e), e.param_count(), data.rows(), options);
}

std::size_t select_best(std::span<const double> scores) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::size_t select_best_agent(std::span<const AgentState> agents) noexcept {
  if (agents.empty()) return 0;
  const AgentState* best = &agents[0];
  for (const auto& a : agents.subspan(1)) {
    if (a.score > best->score || (a.score == best->score && a.agent_id < best->agent_id)) best = &a;
  }
  return best->agent_id;
}

UpdateDirection update_direction(std::span<const double> residuals) {
  if (residuals.empty()) throw LengthMismatch("update_direction needs at least one residual");
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(residuals.size());
  return mean > 0.0 ? UpdateDirection::overestimation : UpdateDirection::underestimation;
}

void RunConfig::normalize() noexcept {
  if (ablation == Ablation::msi) agents = 1;
  if (ablation == Ablation::no_ast) scoring.mode = ScoreMode::sse_only;
}

void RunConfig::validate() const {
  if (agents == 0) throw ValidationError("run.K must be at least 1");
  if (iterations == 0) throw ValidationError("run.M must be at least 1");
  if (workers == 0) throw ValidationError("run.workers must be at least 1");
  if (ablation == Ablation::msi && agents != 1) throw ValidationError("ablation msi requires K = 1");
  if (ablation == Ablation::no_ast && scoring.mode != ScoreMode::sse_only)
    throw ValidationError("ablation no_ast requires sse_only scoring");
  fit.validate();
}

std::string_view backend_name(BackendKind b) noexcept { return b == BackendKind::llm ? "llm" : "mutation"; }

std::string_view ablation_name(Ablation a) noexcept {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::msi: return "msi";
    case Ablation::no_ast: return "no_ast";
  }
  return "none";
}

std::string_view score_mode_name(ScoreMode m) noexcept { return m == ScoreMode::full ? "full" : "sse_only"; }

std::optional<BackendKind> parse_backend(std::string_view s) noexcept {
  if (s == "llm") return BackendKind::llm;
  if (s == "mutation") return BackendKind::mutation;
  return std::nullopt;
}

std::optional<Ablation> parse_ablation(std::string_view s) noexcept {
  if (s == "none") return Ablation::none;
  if (s == "msi") return Ablation::msi;
  if (s == "no_ast") return Ablation::no_ast;
  return std::nullopt;
}

std::optional<ScoreMode> parse_score_mode(std::string_view s) noexcept {
  if (s == "full") return ScoreMode::full;
  if (s == "sse_only") return ScoreMode::sse_only;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

DiscoveryEngine::DiscoveryEngine(RunConfig cfg, ProblemSpec spec, Hypothesis hyp, const Dataset& train,
                                 GeneratorBackend& generator, AnalystBackend& analyst)
    : cfg_(std::move(cfg)),
      spec_(std::move(spec)),
      hyp_(std::move(hyp)),
      train_(train),
      generator_(generator),
      analyst_(analyst) {
  cfg_.normalize();
  cfg_.validate();
  spec_.validate();
  if (train_.empty()) throw ValidationError("training data is empty");
  if (train_.var_names() != spec_.var_names)
    throw SchemaError("training columns do not match the problem's variables");
}

void DiscoveryEngine::check_health() {
  bool gen_ok = false, analyst_ok = false;
  try {
    gen_ok = generator_.health();
    analyst_ok = cfg_.ablation == Ablation::msi || analyst_.health();
  } catch (const std::exception& e) {
    throw BackendError(std::string("backend health check failed: ") + e.what());
  }
  if (!gen_ok) throw BackendError("generator backend failed its health check");
  if (!analyst_ok) throw BackendError("analyst backend failed its health check");
}

AgentState DiscoveryEngine::score_candidate(std::size_t k, Expression expr, std::size_t iteration,
                                            std::size_t history) const {
  FitConfig fc = cfg_.fit;
  fc.seed = derive_seed(cfg_.seed, {kFitStream, k, iteration});
  const FitResult fit = fit_params(expr, train_, fc);
  AgentState st;
  st.agent_id = k;
  st.score = score_from_parts(fit.sse, depth(expr), expr.param_count(), train_.rows(), cfg_.scoring);
  st.params = fit.params;
  st.expr = std::move(expr);
  st.history_len = history;
  return st;
}

AgentState DiscoveryEngine::fallback_state(std::size_t k) const {
  try {
    return score_candidate(k, parse(hyp_.skeleton_text, spec_), 1, 0);
  } catch (const SyntaxError&) {
  } catch (const ValidationError&) {
  }
  return score_candidate(k, parse("p0", spec_), 1, 0);
}

DiscoveryEngine::Proposal DiscoveryEngine::propose(std::size_t k, std::size_t iteration,
                                                   const CollectiveKnowledge* ck) {
  Proposal out;
  ProposalRequest req{k, iteration, 0, {}};
  UpdateDirection dir = UpdateDirection::underestimation;
  const AgentState* self = iteration > 1 ? &agents_[k] : nullptr;
  if (self) {
    auto pred = evaluate_batch(self->expr, train_, self->params);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] -= train_.target(i);
    dir = update_direction(pred);
  }
  for (std::size_t attempt = 0; attempt <= cfg_.proposal_retries; ++attempt) {
    req.attempt = attempt;
    std::string text;
    try {
      text = self ? generator_.revise(spec_, *self, ck, dir, req) : generator_.initial(spec_, hyp_, req);
    } catch (const NoExpressionFound& e) {
      req.feedback = e.what();
      ++out.failures;
      continue;
    } catch (const EmptyCompletion& e) {
      req.feedback = e.what();
      ++out.failures;
      continue;
    } catch (const std::exception& e) {
      throw BackendError("generator failed for agent " + std::to_string(k) + " at iteration " +
                         std::to_string(iteration) + ": " + e.what());
    }
    try {
      auto expr = parse(text, spec_);
      out.state = score_candidate(k, std::move(expr), iteration, self ? self->history_len + 1 : 1);
      return out;
    } catch (const SyntaxError& e) {
      req.feedback = e.what();
    } catch (const ValidationError& e) {
      req.feedback = e.what();
    }
    ++out.failures;
  }
  return out;
}

const IterationSummary& DiscoveryEngine::step() {
  if (done()) throw ValidationError("run already completed " + std::to_string(cfg_.iterations) + " iterations");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = completed_ + 1;
  const std::size_t k_count = cfg_.agents;
  const bool sharing = cfg_.ablation != Ablation::msi;

  // Every agent sees the knowledge deposited at the end of the previous
  // iteration; nothing is deposited until all proposals are in.
  std::vector<const CollectiveKnowledge*> views(k_count, nullptr);
  if (sharing && m > 1)
    for (auto& v : views) v = memory_.read();

  std::vector<Proposal> proposals(k_count);
  std::vector<std::exception_ptr> errors(k_count);
  parallel_for(k_count, cfg_.workers, [&](std::size_t k) {
    try {
      proposals[k] = propose(k, m, views[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<AgentState> next;
  next.reserve(k_count);
  IterationSummary summary;
  summary.iteration = m;
  for (std::size_t k = 0; k < k_count; ++k) {
    summary.parse_failures += proposals[k].failures;
    if (proposals[k].state) {
      next.push_back(std::move(*proposals[k].state));
    } else if (m == 1) {
      next.push_back(fallback_state(k));
    } else {
      next.push_back(agents_[k]);
    }
  }

  const std::size_t best = select_best_agent(next);
  const AgentState& gen_best = next[best];
  std::optional<ArchiveEntry> archive = archive_;
  if (!archive || gen_best.score > archive->score)
    archive = ArchiveEntry{serialize(gen_best.expr), gen_best.params, gen_best.score, m, gen_best.agent_id};

  std::optional<CollectiveKnowledge> deposit;
  if (sharing) {
    CollectiveKnowledge ck;
    ck.f_best_text = archive->expr_text;
    ck.score = archive->score;
    ck.iteration = m;
    try {
      ck.analysis_text = analyst_.analyze(ck.f_best_text, spec_.domain_tag);
    } catch (const std::exception& e) {
      throw BackendError(std::string("analyst failed at iteration ") + std::to_string(m) + ": " + e.what());
    }
    deposit = std::move(ck);
  }

  // Commit.
  for (const auto& a : next) summary.agents.push_back({a.agent_id, serialize(a.expr), a.score});
  summary.generation_best_id = gen_best.agent_id;
  summary.generation_best_score = gen_best.score;
  summary.generation_best_text = serialize(gen_best.expr);
  summary.archive_text = archive->expr_text;
  summary.archive_params = archive->params;
  summary.archive_score = archive->score;
  if (deposit) {
    summary.analysis_digest = digest16(deposit->analysis_text);
    memory_.deposit(std::move(*deposit));
  }
  agents_ = std::move(next);
  archive_ = std::move(archive);
  completed_ = m;
  summary.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  history_.push_back(std::move(summary));
  return history_.back();
}

EngineState DiscoveryEngine::state() const {
  return EngineState{completed_, agents_, archive_, memory_.peek(), memory_.probe(), history_};
}

void DiscoveryEngine::restore(EngineState s) {
  if (s.completed > cfg_.iterations) throw ValidationError("state is past the configured iteration count");
  if (s.completed > 0 && s.agents.size() != cfg_.agents)
    throw ValidationError("state holds " + std::to_string(s.agents.size()) + " agents, config has " +
                          std::to_string(cfg_.agents));
  if (s.history.size() != s.completed) throw ValidationError("state history does not match its iteration count");
  completed_ = s.completed;
  agents_ = std::move(s.agents);
  archive_ = std::move(s.archive);
  memory_.restore(std::move(s.ck), s.probe);
  history_ = std::move(s.history);
}

RunResult DiscoveryEngine::result() const {
  RunResult r;
  if (archive_) r.archive = *archive_;
  r.best = memory_.peek();
  r.per_iteration = history_;
  r.probe = memory_.probe();
  for (const auto& h : history_) r.wall_time += h.wall_ms / 1000.0;
  return r;
}

RunResult run(const RunConfig& cfg, const ProblemSpec& spec, const Hypothesis& hyp, const Dataset& train,
              GeneratorBackend& generator, AnalystBackend& analyst) {
  DiscoveryEngine engine(cfg, spec, hyp, train, generator, analyst);
  engine.check_health();
  while (!engine.done()) engine.step();
  return engine.result();
}

}  // namespace eqdisc
