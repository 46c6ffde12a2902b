#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eqdisc/benchmarks.hpp"
#include "eqdisc/discovery.hpp"
#include "eqdisc/llm_client.hpp"
#include "eqdisc/metrics.hpp"
#include "eqdisc/mutation.hpp"

namespace eqdisc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kCheckpointVersion = 1;

// problem.* section of a run configuration.
struct ProblemSettings {
  std::string name;
  std::optional<std::filesystem::path> train, test_id, test_ood;
  std::vector<std::string> inputs;  // empty: catalog or CSV header
  std::string target;
  std::string domain;
  std::string description;
  std::string hypothesis = "p0";
  std::optional<std::uint64_t> data_seed;  // generated problems; defaults to run.seed
};

struct RunSettings {
  ProblemSettings problem;
  RunConfig run;
  std::size_t checkpoint_every = 10;
  LlmEndpointConfig llm;
  double analyst_temperature = 0.3;
  MutationLimits mutation;
};

// Non-finite reals are written as the strings "nan", "inf", "-inf".
nlohmann::json real_to_json(double v);
double real_from_json(const nlohmann::json& j);

// Relative dataset paths resolve against base_dir. Unknown keys, bad types
// and out-of-range values throw ConfigError. K and M default to the
// catalog values for cataloged problems.
RunSettings settings_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json settings_to_json(const RunSettings& s);
// Throws IoError when the file cannot be read, ConfigError when it is invalid.
RunSettings load_settings(const std::filesystem::path& path);
// "run.K=8" style override applied to a raw configuration document; the
// value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct RunData {
  ProblemSpec spec;
  Hypothesis hyp;
  Dataset train;
  std::optional<Dataset> test_id;
  std::optional<Dataset> test_ood;
  std::vector<std::string> warnings;
  // Input whose OOD range is disjoint, for error curves.
  std::string axis_var;
};

// Loads or generates the datasets named by the settings. Missing files
// throw ConfigError naming the path.
RunData prepare_data(const RunSettings& s);

struct Backends {
  std::unique_ptr<LlmClient> client;
  std::unique_ptr<GeneratorBackend> generator;
  std::unique_ptr<AnalystBackend> analyst;
};
Backends make_backends(const RunSettings& s, const ProblemSpec& spec);

nlohmann::json iteration_record(const IterationSummary& s);
IterationSummary summary_from_record(const nlohmann::json& j);
nlohmann::json metric_json(const MetricReport& r);

// Checkpoint: {"format", "version", "sha256", "body"} where sha256 covers
// body.dump(). The body stores settings, dataset checksums and EngineState.
struct Checkpoint {
  RunSettings settings;
  nlohmann::json datasets;
  std::string started_at;
  EngineState state;
};
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
// Throws VersionMismatch, CorruptCheckpoint, IoError.
Checkpoint read_checkpoint(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir = "run";
  std::optional<std::size_t> stop_after;  // simulate an interruption
  bool verbose = false;
  std::ostream* out = nullptr;             // progress messages
  const std::atomic<bool>* interrupt = nullptr;
};

struct RunOutcome {
  bool completed = false;
  std::size_t iterations_done = 0;
  RunResult result;
  nlohmann::json manifest;  // null until the run completes
};

// Writes out_dir/{config.json, log.jsonl, checkpoint.json, manifest.json}.
// Throws ConfigError, BackendError (after flushing a checkpoint), IoError.
RunOutcome cmd_run(const RunSettings& settings, const RunOptions& options);
RunOutcome cmd_resume(const std::filesystem::path& checkpoint_path, RunOptions options);

struct BenchGenOverrides {
  std::optional<std::uint64_t> weight_seed;
  std::vector<VarInterval> train_ranges;  // replaces matching catalog intervals
  std::vector<VarInterval> ood_ranges;
  std::optional<SplitCounts> counts;
};
// Writes <problem>_{train,test_id,test_ood}.csv plus sidecars. Returns the
// CSV paths. Throws CatalogError, IoError.
std::vector<std::filesystem::path> cmd_bench_gen(const std::string& problem, std::uint64_t seed,
                                                 const std::filesystem::path& out_dir,
                                                 const BenchGenOverrides& overrides = {});

struct EvalRequest {
  std::string expr;
  std::vector<std::filesystem::path> datasets;
  std::optional<std::filesystem::path> train;  // fit data when params are absent
  std::optional<std::vector<double>> params;
  FitConfig fit;
};
struct EvalOutcome {
  std::string expr;
  std::vector<double> params;
  bool fitted = false;
  std::vector<std::pair<std::string, MetricReport>> reports;  // dataset path, report
  nlohmann::json to_json() const;
};
// Throws SyntaxError, ValidationError, SchemaError, IoError.
EvalOutcome cmd_eval(const EvalRequest& req);

struct ReportOutcome {
  std::vector<std::filesystem::path> files;
  std::string summary;
};
// Reads manifest.json, config.json and log.jsonl in run_dir and writes
// convergence.csv, ood_trace.csv (when an OOD split exists),
// abs_error_<split>.csv and summary.txt. Throws MissingLog, IoError.
ReportOutcome cmd_report(const std::filesystem::path& run_dir);

}  // namespace eqdisc
