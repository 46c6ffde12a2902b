#include "eqdisc/app.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "eqdisc/error.hpp"
#include "eqdisc/eval.hpp"
#include "eqdisc/fit.hpp"
#include "eqdisc/parser.hpp"

namespace eqdisc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "eqdisc-checkpoint";

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string real_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_number(v);
}

// --- config helpers -------------------------------------------------------

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  if (!doc.contains(name)) return empty;
  const json& s = doc.at(name);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + name + "' must be an object");
  return s;
}

void check_keys(const json& sec, const std::string& ns, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : sec.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config key '" + ns + "." + key + "'");
  }
}

template <typename T>
void read_key(const json& sec, const std::string& ns, const char* key, T& out) {
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  const std::string name = ns + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name + " must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0))
        throw ConfigError(name + " must be a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(name + " must be a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(name + " must be a string");
      out = v.get<std::string>();
    }
  } catch (const json::exception&) {
    throw ConfigError(name + " has an invalid value");
  }
}

std::optional<fs::path> read_path(const json& sec, const char* key, const fs::path& base) {
  if (!sec.contains(key) || sec.at(key).is_null()) return std::nullopt;
  if (!sec.at(key).is_string()) throw ConfigError(std::string("problem.") + key + " must be a string");
  fs::path p = sec.at(key).get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return fs::absolute(p).lexically_normal();
}

json path_json(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

// --- datasets -------------------------------------------------------------

Dataset load_split(const fs::path& path, const RunSettings& s, const std::optional<TabularSchema>& schema,
                   Split split, std::vector<std::string>& warnings) {
  if (!fs::exists(path))
    throw ConfigError("dataset file for " + std::string(split_name(split)) + " not found: " + path.string());
  std::optional<std::string> problem;
  for (const auto& e : catalog())
    if (e.name == s.problem.name) problem = e.name;
  LoadResult r = schema ? load_tabular(path.string(), *schema, problem, split) : load_csv(path.string(), split);
  for (auto& w : r.warnings) warnings.push_back(std::move(w));
  return std::move(r.data);
}

json dataset_json(const std::optional<fs::path>& path, const Dataset& d) {
  return {{"path", path_json(path)}, {"checksum", d.provenance().checksum}, {"rows", d.rows()}};
}

json datasets_json(const RunSettings& s, const RunData& data) {
  json j = json::object();
  j["train"] = dataset_json(s.problem.train, data.train);
  if (data.test_id) j["test_id"] = dataset_json(s.problem.test_id, *data.test_id);
  if (data.test_ood) j["test_ood"] = dataset_json(s.problem.test_ood, *data.test_ood);
  return j;
}

// --- engine state ---------------------------------------------------------

json reals_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(real_to_json(x));
  return a;
}

std::vector<double> reals_from(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(real_from_json(x));
  return v;
}

json state_json(const EngineState& st) {
  json agents = json::array();
  for (const auto& a : st.agents)
    agents.push_back({{"id", a.agent_id},
                      {"expr", serialize(a.expr)},
                      {"params", reals_json(a.params)},
                      {"score", real_to_json(a.score)},
                      {"history_len", a.history_len}});
  json archive = nullptr;
  if (st.archive)
    archive = {{"expr", st.archive->expr_text},
               {"params", reals_json(st.archive->params)},
               {"score", real_to_json(st.archive->score)},
               {"iteration", st.archive->iteration},
               {"agent_id", st.archive->agent_id}};
  json ck = nullptr;
  if (st.ck)
    ck = {{"f_best", st.ck->f_best_text},
          {"analysis", st.ck->analysis_text},
          {"score", real_to_json(st.ck->score)},
          {"iteration", st.ck->iteration}};
  json history = json::array();
  for (const auto& h : st.history) history.push_back(iteration_record(h));
  return {{"completed", st.completed},
          {"agents", agents},
          {"archive", archive},
          {"ck", ck},
          {"probe", {{"reads", st.probe.reads}, {"writes", st.probe.writes}}},
          {"history", history}};
}

EngineState state_from(const json& j, const ProblemSpec& spec) {
  EngineState st;
  st.completed = j.at("completed").get<std::size_t>();
  for (const auto& a : j.at("agents")) {
    AgentState s;
    s.agent_id = a.at("id").get<std::size_t>();
    s.expr = parse(a.at("expr").get<std::string>(), spec);
    s.params = reals_from(a.at("params"));
    s.score = real_from_json(a.at("score"));
    s.history_len = a.at("history_len").get<std::size_t>();
    st.agents.push_back(std::move(s));
  }
  if (const auto& ar = j.at("archive"); !ar.is_null())
    st.archive = ArchiveEntry{ar.at("expr").get<std::string>(), reals_from(ar.at("params")),
                              real_from_json(ar.at("score")), ar.at("iteration").get<std::size_t>(),
                              ar.at("agent_id").get<std::size_t>()};
  if (const auto& ck = j.at("ck"); !ck.is_null())
    st.ck = CollectiveKnowledge{ck.at("f_best").get<std::string>(), ck.at("analysis").get<std::string>(),
                                real_from_json(ck.at("score")), ck.at("iteration").get<std::size_t>()};
  st.probe.reads = j.at("probe").at("reads").get<std::size_t>();
  st.probe.writes = j.at("probe").at("writes").get<std::size_t>();
  for (const auto& h : j.at("history")) st.history.push_back(summary_from_record(h));
  return st;
}

// --- run loop -------------------------------------------------------------

json split_metrics(const Expression& e, const std::vector<double>& params, const Dataset& d) {
  return metric_json(evaluate_metrics(e, params, d));
}

json build_manifest(const Checkpoint& cp, const RunData& data, const RunResult& r) {
  json metrics = json::object();
  json outcome = {{"iterations", r.per_iteration.size()},
                  {"ck_reads", r.probe.reads},
                  {"ck_writes", r.probe.writes},
                  {"wall_time_s", r.wall_time}};
  outcome["final_score"] = real_to_json(r.archive.score);
  outcome["archive"] = {{"expr", r.archive.expr_text},
                        {"params", reals_json(r.archive.params)},
                        {"score", real_to_json(r.archive.score)},
                        {"iteration", r.archive.iteration},
                        {"agent_id", r.archive.agent_id}};
  const Expression best = parse(r.archive.expr_text, data.spec);
  outcome["depth"] = depth(best);
  outcome["inverse_depth"] = 1.0 / static_cast<double>(depth(best));
  metrics["train"] = split_metrics(best, r.archive.params, data.train);
  if (data.test_id) metrics["test_id"] = split_metrics(best, r.archive.params, *data.test_id);
  if (data.test_ood) metrics["test_ood"] = split_metrics(best, r.archive.params, *data.test_ood);
  outcome["metrics"] = metrics;
  outcome["warnings"] = data.warnings;
  return {{"version", kVersion},
          {"problem", cp.settings.problem.name},
          {"config", settings_to_json(cp.settings)},
          {"datasets", cp.datasets},
          {"started_at", cp.started_at},
          {"finished_at", now_utc()},
          {"outcome", outcome}};
}

void write_log(const fs::path& path, const std::vector<IterationSummary>& history) {
  std::string text;
  for (const auto& h : history) text += iteration_record(h).dump() + "\n";
  write_file_atomic(path.string(), text);
}

RunOutcome execute(Checkpoint cp, const RunData& data, const RunOptions& opt, bool resumed) {
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + opt.out_dir.string() + ": " + ec.message());
  const fs::path log_path = opt.out_dir / "log.jsonl";
  const fs::path cp_path = opt.out_dir / "checkpoint.json";
  write_file_atomic((opt.out_dir / "config.json").string(), settings_to_json(cp.settings).dump(2) + "\n");

  Backends backends = make_backends(cp.settings, data.spec);
  DiscoveryEngine engine(cp.settings.run, data.spec, data.hyp, data.train, *backends.generator, *backends.analyst);
  if (resumed) engine.restore(cp.state);
  write_log(log_path, engine.state().history);

  RunOutcome outcome;
  auto flush = [&] {
    cp.state = engine.state();
    write_checkpoint(cp_path, cp);
  };
  if (!engine.done()) {
    engine.check_health();
  } else if (opt.out) {
    *opt.out << "run already completed " << engine.completed() << " iterations; nothing to do\n";
  }

  std::ofstream log(log_path, std::ios::app | std::ios::binary);
  if (!log) throw IoError("cannot open " + log_path.string());
  while (!engine.done()) {
    if (opt.stop_after && engine.completed() >= *opt.stop_after) break;
    if (opt.interrupt && opt.interrupt->load()) break;
    const IterationSummary* s = nullptr;
    try {
      s = &engine.step();
    } catch (const BackendError&) {
      flush();
      throw;
    }
    log << iteration_record(*s).dump() << '\n';
    log.flush();
    if (!log) throw IoError("write failed: " + log_path.string());
    if (engine.completed() % cp.settings.checkpoint_every == 0) flush();
    if (opt.verbose && opt.out)
      *opt.out << "iteration " << s->iteration << ": archive " << real_text(s->archive_score) << "  "
               << s->archive_text << "\n";
  }
  log.close();
  flush();

  outcome.iterations_done = engine.completed();
  outcome.completed = engine.done();
  outcome.result = engine.result();
  if (outcome.completed) {
    outcome.manifest = build_manifest(cp, data, outcome.result);
    write_file_atomic((opt.out_dir / "manifest.json").string(), outcome.manifest.dump(2) + "\n");
  }
  return outcome;
}

std::string csv_real(double v) { return real_text(v); }

// "<name>_test_ood.csv" -> test_ood; anything unrecognized counts as test_id.
Split split_from_filename(const fs::path& p) {
  const std::string stem = p.stem().string();
  for (Split s : {Split::test_ood, Split::test_id, Split::train}) {
    const std::string suffix = "_" + std::string(split_name(s));
    if (stem.size() >= suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
      return s;
  }
  return Split::test_id;
}

}  // namespace

// ---------------------------------------------------------------------------

json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  return real_text(v);
}

double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError("expected a number, got " + j.dump());
}

RunSettings settings_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("configuration must be an object");
  check_keys(doc, "", {"problem", "run", "backend", "fit", "ablation"});
  RunSettings s;

  const json& p = section(doc, "problem");
  check_keys(p, "problem", {"name", "train", "test_id", "test_ood", "inputs", "target", "domain", "description",
                            "hypothesis", "data_seed"});
  read_key(p, "problem", "name", s.problem.name);
  if (s.problem.name.empty()) throw ConfigError("problem.name is required");
  s.problem.train = read_path(p, "train", base_dir);
  s.problem.test_id = read_path(p, "test_id", base_dir);
  s.problem.test_ood = read_path(p, "test_ood", base_dir);
  if (p.contains("inputs")) {
    if (!p.at("inputs").is_array()) throw ConfigError("problem.inputs must be a list of names");
    for (const auto& v : p.at("inputs")) {
      if (!v.is_string()) throw ConfigError("problem.inputs must be a list of names");
      s.problem.inputs.push_back(v.get<std::string>());
    }
  }
  read_key(p, "problem", "target", s.problem.target);
  read_key(p, "problem", "domain", s.problem.domain);
  read_key(p, "problem", "description", s.problem.description);
  read_key(p, "problem", "hypothesis", s.problem.hypothesis);
  if (p.contains("data_seed")) {
    std::uint64_t v = 0;
    read_key(p, "problem", "data_seed", v);
    s.problem.data_seed = v;
  }
  if (s.problem.hypothesis.empty()) throw ConfigError("problem.hypothesis must not be empty");

  const CatalogEntry* entry = nullptr;
  for (const auto& e : catalog())
    if (e.name == s.problem.name) entry = &e;
  if (entry) {
    s.run.agents = entry->agents;
    s.run.iterations = entry->iterations;
  }

  const json& r = section(doc, "run");
  check_keys(r, "run", {"K", "M", "seed", "workers", "checkpoint_every", "proposal_retries"});
  read_key(r, "run", "K", s.run.agents);
  read_key(r, "run", "M", s.run.iterations);
  read_key(r, "run", "seed", s.run.seed);
  read_key(r, "run", "workers", s.run.workers);
  read_key(r, "run", "checkpoint_every", s.checkpoint_every);
  read_key(r, "run", "proposal_retries", s.run.proposal_retries);
  if (s.checkpoint_every == 0) throw ConfigError("run.checkpoint_every must be at least 1");

  const json& b = section(doc, "backend");
  check_keys(b, "backend", {"kind", "base_url", "model", "temperature", "analyst_temperature", "max_tokens",
                            "timeout", "retries", "api_key_env", "backoff_ms", "max_concurrent", "max_depth",
                            "max_params", "max_nodes"});
  std::string kind = "mutation";
  read_key(b, "backend", "kind", kind);
  if (auto k = parse_backend(kind)) {
    s.run.backend = *k;
  } else {
    throw ConfigError("backend.kind must be 'llm' or 'mutation', got '" + kind + "'");
  }
  read_key(b, "backend", "base_url", s.llm.base_url);
  read_key(b, "backend", "model", s.llm.model_name);
  read_key(b, "backend", "temperature", s.llm.temperature);
  read_key(b, "backend", "analyst_temperature", s.analyst_temperature);
  read_key(b, "backend", "max_tokens", s.llm.max_tokens);
  read_key(b, "backend", "timeout", s.llm.timeout_s);
  read_key(b, "backend", "retries", s.llm.retries);
  read_key(b, "backend", "api_key_env", s.llm.api_key_env);
  read_key(b, "backend", "backoff_ms", s.llm.backoff_ms);
  read_key(b, "backend", "max_concurrent", s.llm.max_concurrent);
  read_key(b, "backend", "max_depth", s.mutation.max_depth);
  read_key(b, "backend", "max_params", s.mutation.max_params);
  read_key(b, "backend", "max_nodes", s.mutation.max_nodes);
  s.llm.validate();
  if (!(s.analyst_temperature >= 0.0 && s.analyst_temperature <= 2.0))
    throw ConfigError("backend.analyst_temperature must lie in [0, 2]");

  const json& f = section(doc, "fit");
  check_keys(f, "fit", {"restarts", "max_iters", "tolerance"});
  read_key(f, "fit", "restarts", s.run.fit.restarts);
  read_key(f, "fit", "max_iters", s.run.fit.max_iters_per_restart);
  read_key(f, "fit", "tolerance", s.run.fit.step_tolerance);

  const json& a = section(doc, "ablation");
  check_keys(a, "ablation", {"mode", "score_mode", "sse_norm"});
  std::string mode = "none", score = "full";
  read_key(a, "ablation", "mode", mode);
  read_key(a, "ablation", "score_mode", score);
  read_key(a, "ablation", "sse_norm", s.run.scoring.sse_norm);
  if (auto m = parse_ablation(mode)) {
    s.run.ablation = *m;
  } else {
    throw ConfigError("ablation.mode must be none, msi or no_ast, got '" + mode + "'");
  }
  if (auto m = parse_score_mode(score)) {
    s.run.scoring.mode = *m;
  } else {
    throw ConfigError("ablation.score_mode must be full or sse_only, got '" + score + "'");
  }

  s.run.normalize();
  try {
    s.run.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

json settings_to_json(const RunSettings& s) {
  json problem = {{"name", s.problem.name},
                  {"train", path_json(s.problem.train)},
                  {"test_id", path_json(s.problem.test_id)},
                  {"test_ood", path_json(s.problem.test_ood)},
                  {"hypothesis", s.problem.hypothesis}};
  if (!s.problem.inputs.empty()) problem["inputs"] = s.problem.inputs;
  if (!s.problem.target.empty()) problem["target"] = s.problem.target;
  if (!s.problem.domain.empty()) problem["domain"] = s.problem.domain;
  if (!s.problem.description.empty()) problem["description"] = s.problem.description;
  if (s.problem.data_seed) problem["data_seed"] = *s.problem.data_seed;
  return {
      {"problem", problem},
      {"run",
       {{"K", s.run.agents},
        {"M", s.run.iterations},
        {"seed", s.run.seed},
        {"workers", s.run.workers},
        {"checkpoint_every", s.checkpoint_every},
        {"proposal_retries", s.run.proposal_retries}}},
      {"backend",
       {{"kind", backend_name(s.run.backend)},
        {"base_url", s.llm.base_url},
        {"model", s.llm.model_name},
        {"temperature", s.llm.temperature},
        {"analyst_temperature", s.analyst_temperature},
        {"max_tokens", s.llm.max_tokens},
        {"timeout", s.llm.timeout_s},
        {"retries", s.llm.retries},
        {"api_key_env", s.llm.api_key_env},
        {"backoff_ms", s.llm.backoff_ms},
        {"max_concurrent", s.llm.max_concurrent},
        {"max_depth", s.mutation.max_depth},
        {"max_params", s.mutation.max_params},
        {"max_nodes", s.mutation.max_nodes}}},
      {"fit",
       {{"restarts", s.run.fit.restarts},
        {"max_iters", s.run.fit.max_iters_per_restart},
        {"tolerance", s.run.fit.step_tolerance}}},
      {"ablation",
       {{"mode", ablation_name(s.run.ablation)},
        {"score_mode", score_mode_name(s.run.scoring.mode)},
        {"sse_norm", s.run.scoring.sse_norm}}},
  };
}

RunSettings load_settings(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
  const std::string text = read_file(path.string());
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
  return settings_from_json(doc, fs::absolute(path).parent_path());
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("bad override key: " + key);
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

RunData prepare_data(const RunSettings& s) {
  RunData d;
  const CatalogEntry* entry = nullptr;
  for (const auto& e : catalog())
    if (e.name == s.problem.name) entry = &e;

  d.spec.name = s.problem.name;
  d.spec.description = s.problem.description;
  d.spec.domain_tag = s.problem.domain;
  if (entry) {
    d.spec.var_names = entry->inputs;
    d.spec.output_name = entry->target;
    if (d.spec.domain_tag.empty()) d.spec.domain_tag = entry->domain;
    if (d.spec.description.empty()) d.spec.description = entry->description;
  }
  if (!s.problem.inputs.empty()) d.spec.var_names = s.problem.inputs;
  if (!s.problem.target.empty()) d.spec.output_name = s.problem.target;

  if (!s.problem.train) {
    if (!entry || !entry->synthetic)
      throw ConfigError("problem.train is required for problem '" + s.problem.name + "'");
    GenOptions g;
    g.seed = s.problem.data_seed.value_or(s.run.seed);
    SplitSet set = generate(entry->name, g);
    d.train = std::move(set.train);
    d.test_id = std::move(set.test_id);
    d.test_ood = std::move(set.test_ood);
  } else {
    std::optional<TabularSchema> schema;
    if (!d.spec.var_names.empty() && !d.spec.output_name.empty())
      schema = TabularSchema{d.spec.var_names, d.spec.output_name};
    d.train = load_split(*s.problem.train, s, schema, Split::train, d.warnings);
    if (!schema) schema = TabularSchema{d.train.var_names(), d.train.target_name()};
    d.spec.var_names = d.train.var_names();
    d.spec.output_name = d.train.target_name();
    if (s.problem.test_id) d.test_id = load_split(*s.problem.test_id, s, schema, Split::test_id, d.warnings);
    if (s.problem.test_ood) d.test_ood = load_split(*s.problem.test_ood, s, schema, Split::test_ood, d.warnings);
  }
  if (d.spec.domain_tag.empty()) throw ConfigError("problem.domain is required for problem '" + s.problem.name + "'");
  try {
    d.spec.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  d.hyp.skeleton_text = s.problem.hypothesis;
  d.axis_var = d.spec.var_names.front();
  if (entry && entry->ranges && !entry->ranges->designated.empty()) d.axis_var = entry->ranges->designated.front();
  return d;
}

Backends make_backends(const RunSettings& s, const ProblemSpec& spec) {
  Backends b;
  if (s.run.backend == BackendKind::mutation) {
    b.generator = std::make_unique<MutationGenerator>(s.run.seed, s.mutation);
    b.analyst = std::make_unique<StubAnalyst>();
  } else {
    b.client = std::make_unique<LlmClient>(s.llm);
    b.generator = std::make_unique<LlmGenerator>(*b.client, s.llm.temperature);
    b.analyst = std::make_unique<LlmAnalyst>(*b.client, spec, s.analyst_temperature);
  }
  return b;
}

json iteration_record(const IterationSummary& s) {
  json agents = json::array();
  for (const auto& a : s.agents) agents.push_back({{"id", a.id}, {"expr", a.expr_text}, {"score", real_to_json(a.score)}});
  return {{"iteration", s.iteration},
          {"agents", agents},
          {"generation_best",
           {{"id", s.generation_best_id},
            {"score", real_to_json(s.generation_best_score)},
            {"expr", s.generation_best_text}}},
          {"archive_best",
           {{"expr", s.archive_text}, {"score", real_to_json(s.archive_score)}, {"params", reals_json(s.archive_params)}}},
          {"ck_analysis_digest", s.analysis_digest},
          {"parse_failures", s.parse_failures},
          {"wall_ms", s.wall_ms}};
}

IterationSummary summary_from_record(const json& j) {
  IterationSummary s;
  s.iteration = j.at("iteration").get<std::size_t>();
  for (const auto& a : j.at("agents"))
    s.agents.push_back({a.at("id").get<std::size_t>(), a.at("expr").get<std::string>(), real_from_json(a.at("score"))});
  const auto& g = j.at("generation_best");
  s.generation_best_id = g.at("id").get<std::size_t>();
  s.generation_best_score = real_from_json(g.at("score"));
  s.generation_best_text = g.at("expr").get<std::string>();
  const auto& ar = j.at("archive_best");
  s.archive_text = ar.at("expr").get<std::string>();
  s.archive_score = real_from_json(ar.at("score"));
  s.archive_params = reals_from(ar.at("params"));
  s.analysis_digest = j.at("ck_analysis_digest").get<std::string>();
  s.parse_failures = j.at("parse_failures").get<std::size_t>();
  s.wall_ms = j.at("wall_ms").get<double>();
  return s;
}

json metric_json(const MetricReport& r) {
  return {{"split", split_name(r.split)},
          {"n", r.n},
          {"wmape", real_to_json(r.wmape)},
          {"nmse", real_to_json(r.nmse)},
          {"mae", real_to_json(r.mae)},
          {"nonfinite", r.nonfinite}};
}

void write_checkpoint(const fs::path& path, const Checkpoint& cp) {
  const json body = {{"settings", settings_to_json(cp.settings)},
                     {"datasets", cp.datasets},
                     {"started_at", cp.started_at},
                     {"state", state_json(cp.state)}};
  const std::string body_text = body.dump();
  const json doc = {{"format", kCheckpointFormat},
                    {"version", kCheckpointVersion},
                    {"sha256", sha256_hex(body_text)},
                    {"body", body}};
  write_file_atomic(path.string(), doc.dump() + "\n");
}

Checkpoint read_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path.string());
  const json doc = json::parse(read_file(path.string()), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("body") || !doc.contains("sha256"))
    throw CorruptCheckpoint("checkpoint is not readable: " + path.string());
  if (doc.value("format", "") != kCheckpointFormat) throw CorruptCheckpoint("not a checkpoint file: " + path.string());
  if (!doc.contains("version") || !doc.at("version").is_number_integer() ||
      doc.at("version").get<int>() != kCheckpointVersion)
    throw VersionMismatch("checkpoint version " + (doc.contains("version") ? doc.at("version").dump() : "?") +
                          ", expected " + std::to_string(kCheckpointVersion));
  const json& body = doc.at("body");
  if (!doc.at("sha256").is_string() || sha256_hex(body.dump()) != doc.at("sha256").get<std::string>())
    throw CorruptCheckpoint("checkpoint checksum mismatch: " + path.string());
  try {
    Checkpoint cp;
    cp.settings = settings_from_json(body.at("settings"));
    cp.datasets = body.at("datasets");
    cp.started_at = body.at("started_at").get<std::string>();
    const RunData data = prepare_data(cp.settings);
    cp.state = state_from(body.at("state"), data.spec);
    return cp;
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint body is malformed: ") + e.what());
  }
}

RunOutcome cmd_run(const RunSettings& settings, const RunOptions& options) {
  const RunData data = prepare_data(settings);
  Checkpoint cp;
  cp.settings = settings;
  cp.datasets = datasets_json(settings, data);
  cp.started_at = now_utc();
  if (options.out)
    for (const auto& w : data.warnings) *options.out << "warning: " << w << "\n";
  return execute(std::move(cp), data, options, false);
}

RunOutcome cmd_resume(const fs::path& checkpoint_path, RunOptions options) {
  Checkpoint cp = read_checkpoint(checkpoint_path);
  const RunData data = prepare_data(cp.settings);
  if (datasets_json(cp.settings, data) != cp.datasets)
    throw ConfigError("datasets changed since the checkpoint was written");
  options.out_dir = fs::absolute(checkpoint_path).parent_path();
  return execute(std::move(cp), data, options, true);
}

std::vector<fs::path> cmd_bench_gen(const std::string& problem, std::uint64_t seed, const fs::path& out_dir,
                                    const BenchGenOverrides& overrides) {
  const CatalogEntry& entry = find_problem(problem);
  if (!entry.synthetic || !entry.ranges)
    throw CatalogError("problem '" + problem + "' is read from files; there is nothing to generate");
  RangeSpec ranges = *entry.ranges;
  auto replace = [&](std::vector<VarInterval>& into, const VarInterval& v) {
    for (auto& iv : into)
      if (iv.name == v.name) {
        iv.lo = v.lo;
        iv.hi = v.hi;
        return;
      }
    throw ConfigError("problem '" + problem + "' has no input named '" + v.name + "'");
  };
  for (const auto& v : overrides.train_ranges) replace(ranges.train, v);
  for (const auto& v : overrides.ood_ranges) replace(ranges.ood, v);
  if (overrides.counts) ranges.counts = *overrides.counts;
  try {
    ranges.validate();
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  }

  GenOptions g;
  g.seed = seed;
  g.weight_seed = overrides.weight_seed;
  g.ranges = ranges;
  const SplitSet set = generate(problem, g);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto emit = [&](const Dataset& d) {
    const fs::path p = out_dir / (problem + "_" + std::string(split_name(d.split())) + ".csv");
    write_dataset(d, p.string());
    written.push_back(p);
  };
  emit(set.train);
  emit(set.test_id);
  if (set.test_ood) emit(*set.test_ood);
  return written;
}

json EvalOutcome::to_json() const {
  json reports_json = json::array();
  for (const auto& [path, r] : reports) {
    json j = metric_json(r);
    j["dataset"] = path;
    reports_json.push_back(j);
  }
  return {{"expr", expr}, {"params", reals_json(params)}, {"fitted", fitted}, {"reports", reports_json}};
}

EvalOutcome cmd_eval(const EvalRequest& req) {
  if (req.datasets.empty()) throw ConfigError("eval needs at least one dataset");
  std::vector<Dataset> sets;
  for (const auto& p : req.datasets) {
    if (!fs::exists(p)) throw IoError("dataset file not found: " + p.string());
    Dataset d = load_csv(p.string(), Split::test_id).data;
    d.set_split(split_from_filename(p));
    if (!sets.empty() && (d.var_names() != sets.front().var_names() || d.target_name() != sets.front().target_name()))
      throw SchemaError("dataset " + p.string() + " has different columns from " + req.datasets.front().string());
    sets.push_back(std::move(d));
  }
  const Expression e = parse(req.expr, sets.front().var_names());
  EvalOutcome out;
  out.expr = serialize(e);
  if (req.params) {
    if (req.params->size() != e.param_count())
      throw ArityError("expression has " + std::to_string(e.param_count()) + " parameters, " +
                       std::to_string(req.params->size()) + " given");
    out.params = *req.params;
  } else if (e.param_count() > 0) {
    Dataset train = sets.front();
    if (req.train) {
      if (!fs::exists(*req.train)) throw IoError("train file not found: " + req.train->string());
      train = load_csv(req.train->string(), Split::train).data;
      if (train.var_names() != sets.front().var_names()) throw SchemaError("train file has different columns");
    }
    out.params = fit_params(e, train, req.fit).params;
    out.fitted = true;
  }
  for (std::size_t i = 0; i < sets.size(); ++i)
    out.reports.emplace_back(req.datasets[i].string(), evaluate_metrics(e, out.params, sets[i]));
  return out;
}

ReportOutcome cmd_report(const fs::path& run_dir) {
  const fs::path log_path = run_dir / "log.jsonl";
  if (!fs::exists(log_path)) throw MissingLog("no log.jsonl in " + run_dir.string());
  const fs::path cfg_path = run_dir / "config.json";
  if (!fs::exists(cfg_path)) throw IoError("no config.json in " + run_dir.string());
  const json cfg_doc = json::parse(read_file(cfg_path.string()), nullptr, false);
  if (cfg_doc.is_discarded()) throw IoError("config.json is not valid JSON");
  const RunSettings settings = settings_from_json(cfg_doc);
  const RunData data = prepare_data(settings);

  RunResult run;
  {
    std::istringstream in(read_file(log_path.string()));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw IoError("malformed log line in " + log_path.string());
      run.per_iteration.push_back(summary_from_record(j));
    }
  }
  if (run.per_iteration.empty()) throw MissingLog("log.jsonl in " + run_dir.string() + " has no records");
  const IterationSummary& last = run.per_iteration.back();

  ReportOutcome out;
  auto emit = [&](const std::string& name, const std::string& text) {
    const fs::path p = run_dir / name;
    write_file_atomic(p.string(), text);
    out.files.push_back(p);
  };

  std::string conv = "iteration,generation_best_score,archive_best_score,archive_depth,inverse_depth\n";
  for (const auto& s : run.per_iteration) {
    const std::size_t d = depth(parse(s.archive_text, data.spec));
    conv += std::to_string(s.iteration) + "," + csv_real(s.generation_best_score) + "," + csv_real(s.archive_score) +
            "," + std::to_string(d) + "," + csv_real(1.0 / static_cast<double>(d)) + "\n";
  }
  emit("convergence.csv", conv);

  if (data.test_ood) {
    std::string trace = "iteration,ood_wmape,finite\n";
    for (const auto& t : ood_trace(run, *data.test_ood))
      trace += std::to_string(t.iteration) + "," + csv_real(t.ood_wmape) + "," + (t.finite ? "1" : "0") + "\n";
    emit("ood_trace.csv", trace);
  }

  const Expression best = parse(last.archive_text, data.spec);
  const auto& params = last.archive_params;
  std::vector<std::pair<std::string, const Dataset*>> splits = {{"train", &data.train}};
  if (data.test_id) splits.emplace_back("test_id", &*data.test_id);
  if (data.test_ood) splits.emplace_back("test_ood", &*data.test_ood);
  for (const auto& [name, d] : splits)
    if (name != "train") emit("abs_error_" + name + ".csv", curve_to_csv(abs_error_curve(best, params, *d, data.axis_var), data.axis_var));

  const bool complete = fs::exists(run_dir / "manifest.json");
  std::ostringstream sum;
  sum << "problem: " << settings.problem.name << "\n";
  sum << "status: " << (complete ? "complete" : "incomplete") << "\n";
  sum << "iterations: " << run.per_iteration.size() << " of " << settings.run.iterations << "\n";
  sum << "best expression: " << last.archive_text << "\n";
  sum << "parameters:";
  if (params.empty()) sum << " none";
  for (std::size_t i = 0; i < params.size(); ++i) sum << " p" << i << "=" << csv_real(params[i]);
  sum << "\n";
  sum << "discovery score: " << csv_real(last.archive_score) << "\n";
  sum << "depth: " << depth(best) << " (inverse " << csv_real(1.0 / static_cast<double>(depth(best))) << ")\n";
  sum << "parameter count: " << best.param_count() << "\n";
  for (const auto& [name, d] : splits) {
    const MetricReport r = evaluate_metrics(best, params, *d);
    sum << name << ": wmape=" << csv_real(r.wmape) << " nmse=" << csv_real(r.nmse) << " mae=" << csv_real(r.mae)
        << " n=" << r.n << " nonfinite=" << r.nonfinite << "\n";
  }
  out.summary = sum.str();
  emit("summary.txt", out.summary);
  return out;
}

}  // namespace eqdisc
