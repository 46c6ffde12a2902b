#include <doctest.h>

#include <cmath>

#include "eqdisc/discovery.hpp"
#include "eqdisc/error.hpp"
#include "eqdisc/eval.hpp"
#include "eqdisc/fit.hpp"
#include "eqdisc/metrics.hpp"
#include "eqdisc/parser.hpp"
#include "support.hpp"

using namespace eqdisc;

namespace {

const std::vector<std::string> kX = {"x"};

Dataset line(std::size_t n, double slope, double icpt, std::uint64_t seed) {
  RandomStream rng(seed);
  Dataset d({"x"}, "y");
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-5, 5);
    const double r[] = {x};
    d.add_row(r, slope * x + icpt);
  }
  return d;
}

// Solves A z = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> z(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * z[k];
    z[i] = s / a[i][i];
  }
  return z;
}

}  // namespace

TEST_CASE("sse examples") {
  Dataset d({"x"}, "y");
  const double r1[] = {1}, r2[] = {2};
  d.add_row(r1, 1);
  d.add_row(r2, 2);
  CHECK(sse(parse("x", kX), d, {}) == 0.0);
  Dataset z({"x"}, "y");
  z.add_row(r1, 0.0);
  const double p3[] = {3.0};
  CHECK(sse(parse("p0", kX), z, p3) == 9.0);
  CHECK(std::isnan(sse(parse("log(x - 1)", kX), d, {})));
  CHECK_THROWS_AS(sse(parse("p0", kX), d, {}), ArityError);

  RandomStream rng(8);
  for (int i = 0; i < 100; ++i) {
    const Expression e = testsupport::grow_expression(rng, 2, 5);
    const Dataset data = testsupport::random_dataset(rng, 2, 30);
    std::vector<double> p(e.param_count());
    for (auto& v : p) v = rng.uniform(-2, 2);
    const double got = sse(e, data, p), want = testsupport::oracle_sse(e.root(), data, p);
    CHECK(std::memcmp(&got, &want, sizeof got) == 0);
  }
}

TEST_CASE("fit recovers a line") {
  const Dataset d = line(50, 2.0, 1.0, 3);
  const FitResult r = fit_params(parse("p0*x + p1", kX), d);
  REQUIRE(r.params.size() == 2);
  CHECK(r.params[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.params[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.sse < 1e-16);
  CHECK(r.converged);

  const FitResult none = fit_params(parse("2*x + 1", kX), d);
  CHECK(none.params.empty());
  CHECK(none.sse == doctest::Approx(0.0));

  Dataset bad({"x"}, "y");
  for (double v : {-1.0, 2.0}) {
    const double r1[] = {v};
    bad.add_row(r1, 1.0);
  }
  const FitResult nf = fit_params(parse("p0*log(x)", kX), bad);
  CHECK_FALSE(std::isfinite(nf.sse));
  CHECK_FALSE(nf.converged);

  CHECK_THROWS_AS(fit_params(parse("p0*z", std::vector<std::string>{"z"}), d), SchemaError);
}

TEST_CASE("fit matches the normal equations for affine models") {
  RandomStream rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset d({"x"}, "y");
    for (int i = 0; i < 60; ++i) {
      const double x = rng.uniform(-4, 4);
      const double r[] = {x};
      d.add_row(r, std::exp(0.3 * x) + rng.uniform(-0.5, 0.5));
    }
    const Expression e = parse("p0*x + p1*sin(x) + p2", kX);
    // Normal equations on the basis (x, sin x, 1).
    std::vector<std::vector<double>> ata(3, std::vector<double>(3, 0.0));
    std::vector<double> aty(3, 0.0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const double x = d.row(i)[0];
      const double b[] = {x, std::sin(x), 1.0};
      for (int a = 0; a < 3; ++a) {
        aty[a] += b[a] * d.target(i);
        for (int c = 0; c < 3; ++c) ata[a][c] += b[a] * b[c];
      }
    }
    const auto z = solve(ata, aty);
    const double best = testsupport::oracle_sse(e.root(), d, z);
    const FitResult r = fit_params(e, d);
    CHECK(r.sse <= best * (1 + 1e-8));
    CHECK(r.sse == doctest::Approx(best).epsilon(1e-8));
  }
}

TEST_CASE("jacobian matches a central-difference recomputation") {
  RandomStream rng(21);
  const Expression e = parse("p0*sin(p1*x) + exp(p2*x)/(1 + p0^2)", kX);
  const Dataset d = testsupport::random_dataset(rng, 1, 15, -1.0, 1.0);
  std::vector<double> p = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 1)};
  const auto jac = jacobian(e, d, p);
  REQUIRE(jac.size() == d.rows() * 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const double h = 1e-6 * std::max(1.0, std::fabs(p[k]));
    auto hi = p, lo = p;
    hi[k] += h;
    lo[k] -= h;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const std::vector<double> row(d.row(i).begin(), d.row(i).end());
      const double want =
          (testsupport::oracle_eval(e.root(), row, hi) - testsupport::oracle_eval(e.root(), row, lo)) / (2 * h);
      CHECK(jac[i * 3 + k] == doctest::Approx(want).epsilon(1e-5).scale(1e-3));
    }
  }
}

TEST_CASE("fit is deterministic and restarts keep the best") {
  RandomStream rng(2);
  Dataset d({"x"}, "y");
  for (int i = 0; i < 40; ++i) {
    const double x = rng.uniform(0, 6);
    const double r[] = {x};
    d.add_row(r, 3.0 * std::sin(1.7 * x));
  }
  const Expression e = parse("p0*sin(p1*x)", kX);
  FitConfig one;
  one.restarts = 1;
  one.seed = 4;
  FitConfig many = one;
  many.restarts = 8;
  const FitResult a = fit_params(e, d, many), b = fit_params(e, d, many), c = fit_params(e, d, one);
  CHECK(a.params == b.params);
  CHECK(std::memcmp(&a.sse, &b.sse, sizeof a.sse) == 0);
  CHECK(a.sse <= c.sse);

  FitConfig bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("metric fixtures") {
  using V = std::vector<double>;
  CHECK(wmape(V{1, 2}, V{1, 2}) == 0.0);
  CHECK(wmape(V{2, 2}, V{1, 3}) == 0.5);
  CHECK_THROWS_AS(wmape(V{0, 0}, V{1, 1}), DegenerateTarget);
  CHECK_THROWS_AS(wmape(V{1}, V{1, 2}), LengthMismatch);
  CHECK_THROWS_AS(wmape(V{}, V{}), LengthMismatch);
  CHECK(std::isnan(wmape(V{1, 2}, V{1, NAN})));
  CHECK(nmse(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
  CHECK(nmse(V{1, 2, 3}, V{2, 2, 2}) == 1.0);
  CHECK_THROWS_AS(nmse(V{4, 4, 4}, V{1, 2, 3}), DegenerateTarget);
  CHECK(mae(V{1, 3}, V{2, 2}) == 1.0);
  CHECK(mae(V{-1, -3}, V{1, 3}) == 4.0);
  CHECK(count_nonfinite(V{1, NAN, INFINITY}) == 2);
}

TEST_CASE("nmse agrees with a two-pass oracle") {
  RandomStream rng(44);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(100);
    std::vector<double> y(n), yh(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(1e3, 1e3 + 1);
      yh[i] = y[i] + rng.uniform(-0.1, 0.1);
    }
    long double mean = 0;
    for (double v : y) mean += v;
    mean /= n;
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      num += (long double)(y[i] - yh[i]) * (y[i] - yh[i]);
      den += (y[i] - mean) * (y[i] - mean);
    }
    CHECK(nmse(y, yh) == doctest::Approx(static_cast<double>(num / den)).epsilon(1e-10));
  }
}

TEST_CASE("evaluate_metrics and error curves") {
  Dataset d({"x", "z"}, "y", Split::test_ood);
  const double rows[][2] = {{3, 0}, {1, 0}, {2, 0}};
  for (const auto& r : rows) d.add_row(r, 2 * r[0]);
  const std::vector<std::string> vars = {"x", "z"};
  const Expression e = parse("x + x*x/3", vars);
  const MetricReport m = evaluate_metrics(e, {}, d, true);
  CHECK(m.n == 3);
  CHECK(m.split == Split::test_ood);
  REQUIRE(m.per_point_abs_error);
  const double ae0 = std::fabs(6 - (3 + 3.0));
  CHECK((*m.per_point_abs_error)[0] == ae0);

  const auto curve = abs_error_curve(e, {}, d, "x");
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].x == 1);
  CHECK(curve[1].x == 2);
  CHECK(curve[2].x == 3);
  CHECK(curve[0].abs_error == doctest::Approx(std::fabs(2 - (1 + 1.0 / 3))));
  CHECK_THROWS_AS(abs_error_curve(e, {}, d, "q"), UnknownVariable);
  CHECK(curve_to_csv(curve, "x").rfind("x,abs_error,finite\n", 0) == 0);

  Dataset flat({"x"}, "y");
  for (double v : {1.0, 2.0}) {
    const double r[] = {v};
    flat.add_row(r, 0.0);
  }
  const MetricReport deg = evaluate_metrics(parse("x", kX), {}, flat);
  CHECK(std::isnan(deg.wmape));
  CHECK(deg.mae == 1.5);
}

TEST_CASE("ood_trace follows the archive") {
  RunResult run;
  IterationSummary a, b;
  a.iteration = 1;
  a.archive_text = "p0";
  a.archive_params = {1.0};
  b.iteration = 2;
  b.archive_text = "x";
  run.per_iteration = {a, b};
  Dataset ood({"x"}, "y", Split::test_ood);
  for (double v : {2.0, 4.0}) {
    const double r[] = {v};
    ood.add_row(r, v);
  }
  const auto trace = ood_trace(run, ood);
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].iteration == 1);
  CHECK(trace[0].ood_wmape == doctest::Approx((1.0 + 3.0) / 6.0));
  CHECK(trace[1].ood_wmape == 0.0);
}
