// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "eqdisc/app.hpp"
#include "eqdisc/benchmarks.hpp"
#include "eqdisc/discovery.hpp"
#include "eqdisc/error.hpp"
#include "eqdisc/eval.hpp"
#include "eqdisc/fit.hpp"
#include "eqdisc/metrics.hpp"
#include "eqdisc/mutation.hpp"
#include "eqdisc/parser.hpp"
#include "eqdisc/special.hpp"
#include "support.hpp"

using namespace eqdisc;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool close_rel(double got, double want, double rel, double abs_floor = 0.0) {
  return std::fabs(got - want) <= std::max(abs_floor, rel * std::fabs(want));
}

// y = 2x + 1 over x drawn uniformly from [-5, 5].
Dataset linear_data(std::uint64_t seed, std::size_t rows) {
  RandomStream rng(seed);
  Dataset d({"x"}, "y");
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = rng.uniform(-5.0, 5.0);
    const double row[] = {x};
    d.add_row(row, 2.0 * x + 1.0);
  }
  return d;
}

ProblemSpec linear_spec() { return ProblemSpec{"linear", {"x"}, "y", "straight line", "physics"}; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Toy problem on disk plus a config pointing at it.
fs::path write_toy_config(const fs::path& dir, std::size_t k, std::size_t m, std::uint64_t seed,
                          const std::string& extra_run = "") {
  write_text(dir / "toy_train.csv", to_csv(linear_data(11, 50)));
  write_text(dir / "toy_test_id.csv", to_csv(linear_data(12, 50)));
  const std::string cfg = R"({"problem": {"name": "toy", "train": "toy_train.csv", "test_id": "toy_test_id.csv",
      "domain": "physics", "hypothesis": "p0"},
      "run": {"K": )" + std::to_string(k) +
                          ", \"M\": " + std::to_string(m) + ", \"seed\": " + std::to_string(seed) + extra_run +
                          "}}";
  write_text(dir / "config.json", cfg);
  return dir / "config.json";
}

std::vector<std::string> log_without_timing(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("wall_ms");
    out.push_back(j.dump());
  }
  return out;
}

// ---------------------------------------------------------------------------

Verdict c1_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  RandomStream rng(20240901);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const Expression e = grow_expression(rng, 1 + rng.below(3), 2 + rng.below(6));
    try {
      const Expression back = parse(serialize(e), e.var_names());
      if (!structurally_equal(e, back)) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  const double dt = seconds_since(t0);
  return {failures == 0 && dt < 5.0, std::to_string(1000 - failures) + "/1000 identical in " + num(dt) + " s"};
}

Verdict c2_score_oracle() {
  RandomStream rng(77);
  int mismatches = 0, finite = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t nvars = 1 + rng.below(3);
    const Expression e = grow_expression(rng, nvars, 2 + rng.below(5));
    const Dataset d = random_dataset(rng, nvars, 1 + rng.below(100));
    std::vector<double> p(e.param_count());
    for (auto& v : p) v = rng.uniform(-3.0, 3.0);
    const double got = discovery_score(e, p, d);
    const double s = oracle_sse(e.root(), d, p);
    const double want = std::isfinite(s) ? -(s + static_cast<double>(oracle_depth(e.root())) +
                                             static_cast<double>(oracle_param_count(e.root())))
                                         : -std::numeric_limits<double>::infinity();
    if (std::isfinite(s)) ++finite;
    if (std::memcmp(&got, &want, sizeof got) != 0) ++mismatches;
  }
  return {mismatches == 0, std::to_string(200 - mismatches) + "/200 bit-identical (" + std::to_string(finite) +
                               " with finite SSE)"};
}

Verdict c3_mdl_ordering() {
  // Each pair computes the same function (e, e*1, e + 0, p*e with p = 1,
  // e^1), so the SSE is bit-identical and only depth + params differ.
  RandomStream rng(303);
  int pairs = 0, wrong = 0;
  for (int i = 0; i < 400 && pairs < 300; ++i) {
    const Expression e = grow_expression(rng, 1, 2 + rng.below(4));
    const Dataset d = random_dataset(rng, 1, 20);
    std::vector<double> p(e.param_count());
    for (auto& v : p) v = rng.uniform(-2.0, 2.0);
    const double s = oracle_sse(e.root(), d, p);
    // The complexity terms are integers; beyond 2^53 they vanish in the sum.
    if (!std::isfinite(s) || s > 1e12) continue;
    const NodePtr root = e.root_ptr();
    std::vector<std::pair<NodePtr, std::vector<double>>> complex = {
        {Node::make_binary(BinaryOp::mul, root, Node::make_constant(1.0)), p},
        {Node::make_binary(BinaryOp::add, root, Node::make_constant(0.0)), p},
        {Node::make_binary(BinaryOp::pow, root, Node::make_constant(1.0)), p},
    };
    std::vector<double> p2 = p;
    p2.push_back(1.0);
    complex.push_back({Node::make_binary(BinaryOp::mul, root, Node::make_param(e.param_count())), p2});
    for (const auto& [tree, params] : complex) {
      const Expression c(tree, e.var_names());
      if (oracle_sse(c.root(), d, params) != s) continue;
      const double simple_score = discovery_score(e, p, d);
      const double complex_score = discovery_score(c, params, d);
      const double scores[] = {complex_score, simple_score};
      ++pairs;
      if (!(simple_score > complex_score) || select_best(scores) != 1) ++wrong;
    }
  }
  return {pairs >= 300 && wrong == 0,
          std::to_string(pairs - wrong) + "/" + std::to_string(pairs) + " pairs rank the simpler expression higher"};
}

Verdict c4_metrics() {
  int bad = 0;
  auto expect = [&](double got, double want) {
    if (!(std::fabs(got - want) <= 1e-15)) ++bad;
  };
  auto throws = [&](auto fn, auto tag) {
    try {
      fn();
      ++bad;
    } catch (const decltype(tag)&) {
    }
  };
  expect(wmape(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  expect(wmape(std::vector<double>{2, 2}, std::vector<double>{1, 3}), 0.5);
  expect(wmape(std::vector<double>{10}, std::vector<double>{9}), 0.1);
  throws([] { wmape(std::vector<double>{0, 0}, std::vector<double>{1, 1}); }, DegenerateTarget(""));
  throws([] { wmape(std::vector<double>{1, 2}, std::vector<double>{1}); }, LengthMismatch(""));
  expect(nmse(std::vector<double>{1, 2, 4}, std::vector<double>{1, 2, 4}), 0.0);
  {
    const std::vector<double> y = {1, 2, 4, 9};
    const double mean = (1 + 2 + 4 + 9) / 4.0;
    if (nmse(y, std::vector<double>(4, mean)) != 1.0) ++bad;
  }
  throws([] { nmse(std::vector<double>{3, 3}, std::vector<double>{1, 1}); }, DegenerateTarget(""));
  {
    RandomStream rng(4);
    std::vector<double> y(50), yh(50);
    for (std::size_t i = 0; i < 50; ++i) {
      y[i] = rng.uniform(-5, 5);
      yh[i] = rng.uniform(-5, 5);
    }
    double mean = 0;
    for (double v : y) mean += v;
    mean /= 50.0;
    double num_ = 0, den = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      num_ += (y[i] - yh[i]) * (y[i] - yh[i]);
      den += (y[i] - mean) * (y[i] - mean);
    }
    if (!close_rel(nmse(y, yh), num_ / den, 1e-12)) ++bad;
  }
  expect(mae(std::vector<double>{1, 3}, std::vector<double>{2, 2}), 1.0);
  expect(mae(std::vector<double>{1, 3}, std::vector<double>{1, 3}), 0.0);
  expect(mae(std::vector<double>{2, 6}, std::vector<double>{4, 4}), 2.0 * mae(std::vector<double>{1, 3}, std::vector<double>{2, 2}));
  throws([] { mae(std::vector<double>{1}, std::vector<double>{}); }, LengthMismatch(""));
  const int fixture_bad = bad;

  RandomStream rng(2024);
  int scale_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> y(n), yh(n), cy(n), cyh(n);
    double c = rng.uniform(-1e3, 1e3);
    if (rng.chance(0.3)) c = rng.uniform(-1e-3, 1e-3);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(-100, 100);
      yh[i] = y[i] + rng.uniform(-10, 10);
      cy[i] = c * y[i];
      cyh[i] = c * yh[i];
    }
    const double a = wmape(y, yh), b = wmape(cy, cyh);
    if (!(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)))) ++scale_bad;
  }
  return {fixture_bad == 0 && scale_bad == 0, std::to_string(fixture_bad) + " fixture failures, " +
                                                  std::to_string(100 - scale_bad) + "/100 scale-invariance triples"};
}

// Independent scalar versions of every governing equation.
double chi2_oracle(double x, double k) {
  return std::exp((k / 2 - 1) * std::log(x) - x / 2 - (k / 2) * std::log(2.0) - std::lgamma(k / 2));
}
double ndo_oracle(double t, double x, double v) {
  return 0.3 * std::sin(t) - 0.5 * v * v * v - x * v - 5.0 * x * std::exp(0.5 * x);
}
double fhst_oracle(double phi, double n, double chi) {
  return 8.314 * 300.0 * ((phi / n) * std::log(phi) + (1 - phi) * std::log(1 - phi) + chi * phi * (1 - phi));
}
double ecbg_oracle(double b, double s, double t, double ph) {
  const double sn = std::sin((ph - 4.0) * std::numbers::pi / 6.0);
  const double fph = std::exp(-std::fabs(ph - 7.0)) * sn * sn;
  const double dt = t - 45.0;
  return 1.0 * b * s / (1.0 + s) * std::tanh(0.5 * (t - 20.0)) / (1.0 + 1e-4 * dt * dt * dt * dt) * fph;
}
double hhm_oracle(double v, double m, double n, double h, double i) {
  return 120.0 * m * m * m * h * (50.0 - v) + 36.0 * n * n * n * n * (-77.0 - v) + 0.3 * (-54.4 - v) + i;
}

Verdict c5_benchmarks() {
  struct Case {
    std::string name;
    std::size_t train, test_id, test_ood;  // test_ood 0: not checked
  };
  const Case cases[] = {{"chi2pdf", 1000, 200, 0}, {"ndo", 10000, 10000, 0}, {"nnn", 10000, 2000, 0},
                        {"fhst", 10000, 2000, 2000}, {"ecbg", 7500, 2500, 0}, {"hhm", 10000, 2000, 2000}};
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    GenOptions g;
    g.seed = 5;
    const SplitSet s = generate(c.name, g);
    bool counts = s.train.rows() == c.train && s.test_id.rows() == c.test_id &&
                  (c.test_ood == 0 || (s.test_ood && s.test_ood->rows() == c.test_ood));
    const auto& pc = s.train.provenance().constants;
    std::function<double(std::span<const double>)> oracle;
    if (c.name == "chi2pdf") oracle = [](auto r) { return chi2_oracle(r[0], r[1]); };
    if (c.name == "ndo") oracle = [](auto r) { return ndo_oracle(r[0], r[1], r[2]); };
    if (c.name == "fhst") oracle = [](auto r) { return fhst_oracle(r[0], r[1], r[2]); };
    if (c.name == "ecbg") oracle = [](auto r) { return ecbg_oracle(r[0], r[1], r[2], r[3]); };
    if (c.name == "hhm") oracle = [](auto r) { return hhm_oracle(r[0], r[1], r[2], r[3], r[4]); };
    if (c.name == "nnn") {
      const double w11 = pc.at("w11"), w12 = pc.at("w12"), b1 = pc.at("b1"), w21 = pc.at("w21"), w22 = pc.at("w22"),
                   b2 = pc.at("b2"), w1 = pc.at("w1"), w2 = pc.at("w2"), b = pc.at("b");
      oracle = [=](auto r) {
        const double z1 = 1.0 / (1.0 + std::exp(-(w11 * r[0] + w12 * r[1] + b1)));
        const double z2 = 1.0 / (1.0 + std::exp(-(w21 * r[0] + w22 * r[1] + b2)));
        return w1 * z1 + w2 * z2 + b;
      };
    }
    std::size_t checked = 0, bad = 0, nonfinite = 0;
    std::vector<const Dataset*> splits = {&s.train, &s.test_id};
    if (s.test_ood) splits.push_back(&*s.test_ood);
    for (const Dataset* d : splits)
      for (std::size_t i = 0; i < d->rows(); ++i)
        if (!std::isfinite(d->target(i))) ++nonfinite;
    const std::size_t stride = std::max<std::size_t>(1, s.train.rows() / 1000);
    for (std::size_t i = 0; i < s.train.rows() && checked < 1000; i += stride, ++checked) {
      const double want = oracle(s.train.row(i));
      if (!close_rel(s.train.target(i), want, 1e-10)) ++bad;
    }
    const bool case_ok = counts && bad == 0 && nonfinite == 0 && checked == 1000;
    ok = ok && case_ok;
    detail += c.name + (case_ok ? " ok" : " FAIL(counts=" + std::to_string(counts) + ",bad=" + std::to_string(bad) +
                                              ",nonfinite=" + std::to_string(nonfinite) + ")") + "; ";
  }
  return {ok, detail + "1000 rows each"};
}

Verdict c6_gamma() {
  int bad_fact = 0, bad_rec = 0;
  double fact = 1.0;
  for (int n = 1; n <= 10; ++n) {
    if (n > 1) fact *= (n - 1);
    if (!close_rel(gamma_fn(n), fact, 1e-10)) ++bad_fact;
  }
  RandomStream rng(6);
  for (int i = 0; i < 100; ++i) {
    const double z = rng.uniform(0.05, 20.0);
    if (!close_rel(gamma_fn(z + 1.0), z * gamma_fn(z), 1e-8)) ++bad_rec;
  }
  return {bad_fact == 0 && bad_rec == 0,
          std::to_string(10 - bad_fact) + "/10 factorials, " + std::to_string(100 - bad_rec) + "/100 recurrences"};
}

Verdict c7_recovery() {
  const Dataset train = linear_data(101, 50);
  Dataset held = linear_data(202, 50);
  held.set_split(Split::test_id);
  // Least-squares line through the training data: the attainable SSE.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const double x = train.row(i)[0], y = train.target(i);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double n = static_cast<double>(train.rows());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icpt = (sy - slope * sx) / n;
  double ols_sse = 0;
  for (std::size_t i = 0; i < train.rows(); ++i) ols_sse += std::pow(train.target(i) - (slope * train.row(i)[0] + icpt), 2);

  RunConfig cfg;
  cfg.agents = 8;
  cfg.iterations = 200;
  cfg.seed = 7;
  MutationGenerator gen(7);
  StubAnalyst analyst;
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run(cfg, linear_spec(), Hypothesis{"p0"}, train, gen, analyst);
  const double dt = seconds_since(t0);
  const Expression best = parse(r.archive.expr_text, linear_spec());
  const MetricReport m = evaluate_metrics(best, r.archive.params, held);
  const double train_sse = sse(best, train, r.archive.params);
  std::size_t first = 0;
  for (const auto& it : r.per_iteration)
    if (!first && it.archive_text == r.archive.expr_text) first = it.iteration;
  const bool ok = m.wmape < 1e-6 && depth(best) <= 3 && best.param_count() <= 2 && dt < 60.0 && train_sse < 1e-12;
  return {ok, "'" + r.archive.expr_text + "' depth " + std::to_string(depth(best)) + ", " +
                  std::to_string(best.param_count()) + " params, held-out wmape " + num(m.wmape) + ", train SSE " +
                  num(train_sse) + " (least-squares floor " + num(ols_sse) + "), found at iteration " +
                  std::to_string(first) + ", " + num(dt) + " s"};
}

Dataset curve_data() {
  RandomStream rng(88);
  Dataset d({"x"}, "y");
  for (int i = 0; i < 40; ++i) {
    const double x = rng.uniform(-3, 3);
    const double row[] = {x};
    d.add_row(row, 1.5 * std::sin(x) + 0.3 * x * x);
  }
  return d;
}

Verdict c8_elitism() {
  const Dataset d = curve_data();
  const ProblemSpec spec{"curve", {"x"}, "y", "", "physics"};
  int violations = 0;
  std::size_t improvements = 0, checks = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RunConfig cfg;
    cfg.agents = 6;
    cfg.iterations = 30;
    cfg.seed = seed;
    MutationGenerator gen(seed);
    StubAnalyst analyst;
    const RunResult r = run(cfg, spec, Hypothesis{"p0"}, d, gen, analyst);
    double prev = -std::numeric_limits<double>::infinity();
    double best_gen = prev;
    for (const auto& it : r.per_iteration) {
      ++checks;
      best_gen = std::max(best_gen, it.generation_best_score);
      if (it.archive_score < prev || it.archive_score != best_gen) ++violations;
      if (it.archive_score > prev) ++improvements;
      prev = it.archive_score;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(checks) +
                               " iterations of 20 runs (" + std::to_string(improvements) + " archive improvements)"};
}

Verdict c9_msi() {
  const Dataset d = curve_data();
  const ProblemSpec spec{"curve", {"x"}, "y", "", "physics"};
  RunConfig cfg;
  cfg.agents = 8;
  cfg.iterations = 40;
  cfg.seed = 3;
  cfg.ablation = Ablation::msi;
  MutationGenerator gen(3);
  StubAnalyst analyst;
  DiscoveryEngine engine(cfg, spec, Hypothesis{"p0"}, d, gen, analyst);
  while (!engine.done()) engine.step();
  const RunResult msi = engine.result();

  cfg.ablation = Ablation::none;
  MutationGenerator gen2(3);
  const RunResult full = run(cfg, spec, Hypothesis{"p0"}, d, gen2, analyst);

  TempDir dir("msi");
  RunSettings s = load_settings(write_toy_config(dir.path, 8, 20, 7));
  s.run.ablation = Ablation::msi;
  s.run.normalize();
  RunOptions opt;
  opt.out_dir = dir.path / "run";
  const RunOutcome o = cmd_run(s, opt);
  const auto reads = o.manifest["outcome"]["ck_reads"].get<std::size_t>();
  const auto writes = o.manifest["outcome"]["ck_writes"].get<std::size_t>();

  const bool ok = msi.probe.reads == 0 && msi.probe.writes == 0 && !msi.best && engine.agents().size() == 1 &&
                  reads == 0 && writes == 0 && full.probe.reads > 0 && full.probe.writes == 40;
  return {ok, "msi probe reads=" + std::to_string(msi.probe.reads) + " writes=" + std::to_string(msi.probe.writes) +
                  ", manifest ck_reads=" + std::to_string(reads) + " ck_writes=" + std::to_string(writes) +
                  " (full run: reads=" + std::to_string(full.probe.reads) +
                  " writes=" + std::to_string(full.probe.writes) + ")"};
}

Verdict c10_no_ast() {
  RandomStream rng(1010);
  int bad = 0;
  ScoreOptions opts;
  opts.mode = ScoreMode::sse_only;
  for (int i = 0; i < 100; ++i) {
    const std::size_t nvars = 1 + rng.below(2);
    const Expression e = grow_expression(rng, nvars, 2 + rng.below(4));
    const Dataset d = random_dataset(rng, nvars, 1 + rng.below(60));
    std::vector<double> p(e.param_count());
    for (auto& v : p) v = rng.uniform(-2, 2);
    const double s = oracle_sse(e.root(), d, p);
    const double want = std::isfinite(s) ? -s : -std::numeric_limits<double>::infinity();
    const double got = discovery_score(e, p, d, opts);
    if (std::memcmp(&got, &want, sizeof got) != 0) ++bad;
  }

  // Scores the engine reports under the ablation.
  const Dataset d = curve_data();
  const ProblemSpec spec{"curve", {"x"}, "y", "", "physics"};
  RunConfig cfg;
  cfg.agents = 5;
  cfg.iterations = 20;
  cfg.seed = 10;
  cfg.ablation = Ablation::no_ast;
  MutationGenerator gen(10);
  StubAnalyst analyst;
  DiscoveryEngine engine(cfg, spec, Hypothesis{"p0"}, d, gen, analyst);
  int engine_bad = 0, engine_checked = 0;
  while (!engine.done()) {
    engine.step();
    for (const auto& a : engine.agents()) {
      const double s = oracle_sse(a.expr.root(), d, a.params);
      const double want = std::isfinite(s) ? -s : -std::numeric_limits<double>::infinity();
      ++engine_checked;
      if (std::memcmp(&a.score, &want, sizeof want) != 0) ++engine_bad;
    }
  }
  return {bad == 0 && engine_bad == 0 && engine.config().scoring.mode == ScoreMode::sse_only,
          std::to_string(100 - bad) + "/100 candidates score -SSE exactly; engine " +
              std::to_string(engine_checked - engine_bad) + "/" + std::to_string(engine_checked) + " agent scores"};
}

Verdict c11_ood() {
  std::string detail;
  bool ok = true;
  for (const std::string name : {"fhst", "hhm"}) {
    GenOptions g;
    g.seed = 9;
    const SplitSet s = generate(name, g);
    const auto& entry = find_problem(name);
    std::size_t outside = 0, in_bounds = 0;
    const Dataset& ood = *s.test_ood;
    for (std::size_t i = 0; i < ood.rows(); ++i) {
      const auto row = ood.row(i);
      bool out = false;
      for (const auto& var : entry.ranges->designated) {
        const std::size_t j = *ood.column_index(var);
        const auto& tr = entry.ranges->train[j];
        if (row[j] < tr.lo || row[j] > tr.hi) out = true;
      }
      outside += out;
      if (name == "hhm") {
        const double v = row[*ood.column_index("V")], iext = row[*ood.column_index("I_ext")];
        in_bounds += (v > -100 && v < -75 && iext > 35 && iext < 50);
      } else {
        in_bounds += 1;
      }
    }
    const bool case_ok = ood.rows() == 2000 && outside == ood.rows() && in_bounds == ood.rows();
    ok = ok && case_ok;
    detail += name + ": " + std::to_string(outside) + "/" + std::to_string(ood.rows()) + " outside train box";
    if (name == "hhm") detail += ", " + std::to_string(in_bounds) + " within V(-100,-75) and I_ext(35,50)";
    detail += "; ";
  }
  return {ok, detail};
}

Verdict c12_determinism() {
  TempDir dir("det");
  const fs::path cfg = write_toy_config(dir.path, 8, 50, 7);
  const RunSettings s = load_settings(cfg);
  RunOptions a, b, c;
  a.out_dir = dir.path / "a";
  b.out_dir = dir.path / "b";
  c.out_dir = dir.path / "c";
  cmd_run(s, a);
  cmd_run(s, b);
  c.stop_after = 25;
  const RunOutcome part = cmd_run(s, c);
  const auto truncated = log_without_timing(c.out_dir / "log.jsonl");
  RunOptions r;
  const RunOutcome resumed = cmd_resume(c.out_dir / "checkpoint.json", r);

  RunSettings par = s;
  par.run.workers = 4;
  RunOptions d;
  d.out_dir = dir.path / "d";
  cmd_run(par, d);

  const auto la = log_without_timing(a.out_dir / "log.jsonl");
  const auto lb = log_without_timing(b.out_dir / "log.jsonl");
  const auto lc = log_without_timing(c.out_dir / "log.jsonl");
  const auto ld = log_without_timing(d.out_dir / "log.jsonl");
  const bool ok = la.size() == 50 && la == lb && !part.completed && truncated.size() == 25 && resumed.completed &&
                  lc == la && ld == la;
  return {ok, "repeat run identical: " + std::string(la == lb ? "yes" : "no") + "; stopped at " +
                  std::to_string(truncated.size()) + ", resumed records identical: " + (lc == la ? "yes" : "no") +
                  "; 4 workers identical: " + (ld == la ? "yes" : "no")};
}

Verdict c13_ground_truth() {
  TempDir dir("gt");
  std::string detail;
  bool ok = true;
  for (const std::string name : {"chi2pdf", "ndo", "nnn", "fhst", "ecbg", "hhm"}) {
    const auto files = cmd_bench_gen(name, 1, dir.path);
    GenOptions g;
    g.seed = 1;
    const std::string truth = ground_truth_expression(name, generate(name, g).train.provenance());
    EvalRequest req;
    req.expr = truth;
    for (const auto& f : files)
      if (f.string().find("_test_") != std::string::npos) req.datasets.push_back(f);
    const EvalOutcome o = cmd_eval(req);
    double worst = 0;
    for (const auto& [path, rep] : o.reports) worst = std::isfinite(rep.wmape) ? std::max(worst, rep.wmape) : INFINITY;
    const bool case_ok = worst < 1e-12 && o.params.empty() && !o.reports.empty();
    ok = ok && case_ok;
    detail += name + " " + num(worst) + "; ";
  }
  return {ok, "max test WMAPE: " + detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Verdict (*fn)();
  };
  const Criterion criteria[] = {
      {1, "Expression round-trip", c1_round_trip},
      {2, "Discovery score oracle", c2_score_oracle},
      {3, "MDL ordering", c3_mdl_ordering},
      {4, "Metric correctness", c4_metrics},
      {5, "Benchmark conformance", c5_benchmarks},
      {6, "Gamma check", c6_gamma},
      {7, "End-to-end recovery", c7_recovery},
      {8, "Elitism invariant", c8_elitism},
      {9, "MSI ablation isolation", c9_msi},
      {10, "SSE-only ablation wiring", c10_no_ast},
      {11, "OOD split disjointness", c11_ood},
      {12, "Determinism and resume", c12_determinism},
      {13, "Ground-truth self-evaluation", c13_ground_truth},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
