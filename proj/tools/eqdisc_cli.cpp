#include <atomic>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "eqdisc/app.hpp"
#include "eqdisc/error.hpp"
#include "eqdisc/parser.hpp"

namespace fs = std::filesystem;
using namespace eqdisc;

namespace {

std::atomic<bool> g_interrupt{false};

extern "C" void on_sigint(int) { g_interrupt.store(true); }

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kBackend = 3, kIo = 4, kInterrupted = 130 };

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  return out;
}

// "x=0:10" -> interval for x.
VarInterval parse_range(const std::string& text) {
  const auto eq = text.find('=');
  const auto colon = text.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || colon == std::string::npos) throw ConfigError("range must look like name=lo:hi, got " + text);
  const auto lo = parse_reals(text.substr(eq + 1, colon - eq - 1));
  const auto hi = parse_reals(text.substr(colon + 1));
  if (lo.size() != 1 || hi.size() != 1) throw ConfigError("range must look like name=lo:hi, got " + text);
  return VarInterval{text.substr(0, eq), lo[0], hi[0], false};
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  return format_number(v);
}

void print_outcome(const RunOutcome& o, const fs::path& dir) {
  if (!o.completed) {
    std::cout << "stopped after iteration " << o.iterations_done << "; checkpoint: " << (dir / "checkpoint.json").string()
              << "\n";
    return;
  }
  std::cout << "best: " << o.result.archive.expr_text << "\n";
  std::cout << "score: " << fmt(o.result.archive.score) << "\n";
  for (const auto& [split, m] : o.manifest["outcome"]["metrics"].items())
    std::cout << split << " wmape: " << (m["wmape"].is_number() ? fmt(m["wmape"].get<double>()) : m["wmape"].get<std::string>())
              << "\n";
  std::cout << "manifest: " << (dir / "manifest.json").string() << "\n";
}

struct Stats {
  double mean = 0.0, std = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) s.std += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(s.std / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equation discovery with a population of hypothesis-generating agents"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::string out;
  app.add_option("--seed", seed, "Master seed")->expected(1);
  app.add_flag("-v,--verbose", verbose, "Print progress");
  app.add_option("--out", out, "Output directory or file");

  auto* bench = app.add_subcommand("bench-gen", "Generate the splits of a synthetic benchmark");
  std::string bench_problem;
  std::optional<std::uint64_t> weight_seed;
  std::vector<std::string> train_ranges, ood_ranges;
  std::string counts;
  bench->add_option("problem", bench_problem, "Catalog problem name")->required();
  bench->add_option("--weight-seed", weight_seed, "Network weight seed (nnn)");
  bench->add_option("--range", train_ranges, "Train interval override, name=lo:hi");
  bench->add_option("--ood-range", ood_ranges, "OOD interval override, name=lo:hi");
  bench->add_option("--counts", counts, "Row counts train,test_id,test_ood");

  auto* run = app.add_subcommand("run", "Run discovery from a configuration file");
  std::string config_path;
  std::vector<std::string> overrides;
  std::string ablation;
  std::optional<std::size_t> stop_after, repeats;
  run->add_option("config", config_path, "Configuration file (JSON)")->required();
  run->add_option("--set", overrides, "Override a config key, e.g. run.K=8");
  run->add_option("--ablation", ablation, "none, msi or no_ast");
  run->add_option("--stop-after", stop_after, "Stop (with a checkpoint) after this many iterations");
  run->add_option("--repeats", repeats, "Independent repetitions with seeds seed+0, seed+1, ...");

  auto* resume = app.add_subcommand("resume", "Continue a run from its checkpoint");
  std::string checkpoint_path;
  resume->add_option("checkpoint", checkpoint_path, "checkpoint.json of an earlier run")->required();
  resume->add_option("--stop-after", stop_after, "Stop again after this many iterations");

  auto* eval = app.add_subcommand("eval", "Score an expression on datasets");
  std::string expr;
  std::vector<std::string> data_paths;
  std::string train_path, params_text;
  eval->add_option("expr", expr, "Expression")->required();
  eval->add_option("--data", data_paths, "Dataset CSV (repeatable)")->required();
  eval->add_option("--train", train_path, "Fit parameters on this CSV instead of the first dataset");
  eval->add_option("--params", params_text, "Comma-separated parameter values; skips fitting");

  auto* report = app.add_subcommand("report", "Write report files for a run directory");
  std::string run_dir;
  report->add_option("run_dir", run_dir, "Run output directory")->required();

  auto* list = app.add_subcommand("catalog", "Print the problem catalog");

  for (auto* sub : {bench, run, resume, eval, report, list}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  std::signal(SIGINT, on_sigint);
  try {
    if (*bench) {
      BenchGenOverrides ov;
      ov.weight_seed = weight_seed;
      for (const auto& r : train_ranges) ov.train_ranges.push_back(parse_range(r));
      for (const auto& r : ood_ranges) ov.ood_ranges.push_back(parse_range(r));
      if (!counts.empty()) {
        const auto c = parse_reals(counts);
        if (c.size() != 3) throw ConfigError("--counts needs three values");
        ov.counts = SplitCounts{static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]),
                                static_cast<std::size_t>(c[2])};
      }
      const auto files = cmd_bench_gen(bench_problem, seed.value_or(0), out.empty() ? fs::path(".") : fs::path(out), ov);
      for (const auto& f : files) std::cout << f.string() << "\n";
      return kOk;
    }

    if (*run) {
      if (!fs::exists(config_path)) throw ConfigError("config file not found: " + config_path);
      nlohmann::json doc = nlohmann::json::parse(read_file(config_path), nullptr, false);
      if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + config_path);
      for (const auto& o : overrides) apply_override(doc, o);
      if (!ablation.empty()) apply_override(doc, "ablation.mode=" + ablation);
      if (seed) apply_override(doc, "run.seed=" + std::to_string(*seed));
      RunSettings settings = settings_from_json(doc, fs::absolute(config_path).parent_path());

      RunOptions opt;
      opt.out_dir = out.empty() ? fs::path("run") : fs::path(out);
      opt.stop_after = stop_after;
      opt.verbose = verbose;
      opt.out = &std::cerr;
      opt.interrupt = &g_interrupt;

      if (!repeats || *repeats <= 1) {
        const RunOutcome o = cmd_run(settings, opt);
        print_outcome(o, opt.out_dir);
        if (!o.completed && g_interrupt) return kInterrupted;
        return kOk;
      }
      const fs::path root = opt.out_dir;
      const std::uint64_t base = settings.run.seed;
      std::vector<double> scores;
      std::map<std::string, std::vector<double>> wmapes;
      nlohmann::json reps = nlohmann::json::array();
      for (std::size_t i = 0; i < *repeats; ++i) {
        settings.run.seed = base + i;
        opt.out_dir = root / ("rep_" + std::to_string(i));
        const RunOutcome o = cmd_run(settings, opt);
        if (!o.completed) return g_interrupt ? kInterrupted : kOk;
        scores.push_back(o.result.archive.score);
        for (const auto& [split, m] : o.manifest["outcome"]["metrics"].items())
          wmapes[split].push_back(real_from_json(m["wmape"]));
        reps.push_back({{"seed", settings.run.seed}, {"dir", opt.out_dir.string()}, {"outcome", o.manifest["outcome"]}});
        std::cout << "repeat " << i << " (seed " << settings.run.seed << "): " << o.result.archive.expr_text
                  << "  score " << fmt(o.result.archive.score) << "\n";
      }
      nlohmann::json agg = {{"repeats", *repeats}, {"runs", reps}};
      const Stats s = stats(scores);
      agg["score"] = {{"mean", real_to_json(s.mean)}, {"std", real_to_json(s.std)}};
      for (const auto& [split, v] : wmapes) {
        const Stats w = stats(v);
        agg["wmape"][split] = {{"mean", real_to_json(w.mean)}, {"std", real_to_json(w.std)}};
        std::cout << split << " wmape: mean " << fmt(w.mean) << " std " << fmt(w.std) << "\n";
      }
      std::cout << "score: mean " << fmt(s.mean) << " std " << fmt(s.std) << "\n";
      write_file_atomic((root / "repeats.json").string(), agg.dump(2) + "\n");
      return kOk;
    }

    if (*resume) {
      RunOptions opt;
      opt.stop_after = stop_after;
      opt.verbose = verbose;
      opt.out = &std::cerr;
      opt.interrupt = &g_interrupt;
      const RunOutcome o = cmd_resume(checkpoint_path, opt);
      print_outcome(o, fs::absolute(checkpoint_path).parent_path());
      if (!o.completed && g_interrupt) return kInterrupted;
      return kOk;
    }

    if (*eval) {
      EvalRequest req;
      req.expr = expr;
      for (const auto& p : data_paths) req.datasets.emplace_back(p);
      if (!train_path.empty()) req.train = train_path;
      if (!params_text.empty()) req.params = parse_reals(params_text);
      if (seed) req.fit.seed = *seed;
      const EvalOutcome o = cmd_eval(req);
      std::cout << "expr: " << o.expr << "\n";
      if (!o.params.empty()) {
        std::cout << (o.fitted ? "fitted" : "given") << " parameters:";
        for (std::size_t i = 0; i < o.params.size(); ++i) std::cout << " p" << i << "=" << fmt(o.params[i]);
        std::cout << "\n";
      }
      for (const auto& [path, r] : o.reports)
        std::cout << path << " [" << split_name(r.split) << "] wmape=" << fmt(r.wmape) << " nmse=" << fmt(r.nmse)
                  << " mae=" << fmt(r.mae) << " n=" << r.n << " nonfinite=" << r.nonfinite << "\n";
      if (!out.empty()) write_file_atomic(out, o.to_json().dump(2) + "\n");
      return kOk;
    }

    if (*report) {
      const ReportOutcome o = cmd_report(run_dir);
      std::cout << o.summary;
      for (const auto& f : o.files) std::cout << "wrote " << f.string() << "\n";
      return kOk;
    }

    if (*list) {
      std::cout << catalog_json() << "\n";
      return kOk;
    }
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const TransportError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const HttpStatusError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const MissingLog& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const CorruptCheckpoint& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const VersionMismatch& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    // Config, catalog, schema and validation problems.
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
