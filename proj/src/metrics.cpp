#include "eqdisc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eqdisc/discovery.hpp"
#include "eqdisc/error.hpp"
#include "eqdisc/eval.hpp"
#include "eqdisc/parser.hpp"

namespace eqdisc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(std::span<const double> y, std::span<const double> yhat, std::size_t min_len = 1) {
  if (y.size() != yhat.size())
    throw LengthMismatch("targets and predictions differ in length (" + std::to_string(y.size()) + " vs " +
                         std::to_string(yhat.size()) + ")");
  if (y.size() < min_len)
    throw LengthMismatch("need at least " + std::to_string(min_len) + " rows, got " + std::to_string(y.size()));
}

}  // namespace

std::size_t count_nonfinite(std::span<const double> values) noexcept {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }));
}

double wmape(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += std::fabs(y[i] - yhat[i]);
    den += std::fabs(y[i]);
  }
  if (den == 0.0) throw DegenerateTarget("WMAPE undefined: sum of |y| is zero");
  if (count_nonfinite(yhat) > 0) return kNaN;
  return num / den;
}

double nmse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, 2);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    const double c = y[i] - mean;
    num += r * r;
    den += c * c;
  }
  if (den == 0.0) throw DegenerateTarget("NMSE undefined: target has zero variance");
  if (count_nonfinite(yhat) > 0) return kNaN;
  return num / den;
}

double mae(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  if (count_nonfinite(yhat) > 0) return kNaN;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::fabs(y[i] - yhat[i]);
  return total / static_cast<double>(y.size());
}

MetricReport evaluate_metrics(const Expression& e, std::span<const double> params, const Dataset& data,
                              bool keep_per_point) {
  MetricReport rep;
  rep.split = data.split();
  rep.n = data.rows();
  if (data.empty()) {
    rep.wmape = rep.nmse = rep.mae = kNaN;
    return rep;
  }
  const auto pred = evaluate_batch(e, data, params);
  const auto& y = data.targets();
  rep.nonfinite = count_nonfinite(pred);
  auto guarded = [](auto&& f) {
    try {
      return f();
    } catch (const DegenerateTarget&) {
      return kNaN;
    } catch (const LengthMismatch&) {
      return kNaN;
    }
  };
  rep.wmape = guarded([&] { return wmape(y, pred); });
  rep.nmse = guarded([&] { return nmse(y, pred); });
  rep.mae = guarded([&] { return mae(y, pred); });
  if (keep_per_point) {
    std::vector<double> errs(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
      errs[i] = std::isfinite(pred[i]) ? std::fabs(y[i] - pred[i]) : kNaN;
    rep.per_point_abs_error = std::move(errs);
  }
  return rep;
}

std::vector<CurvePoint> abs_error_curve(const Expression& e, std::span<const double> params,
                                        const Dataset& data, const std::string& axis_var) {
  const auto col = data.column_index(axis_var);
  if (!col) throw UnknownVariable("no input column named '" + axis_var + "'");
  const auto pred = evaluate_batch(e, data, params);
  std::vector<CurvePoint> curve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const bool finite = std::isfinite(pred[i]);
    curve[i] = {data.row(i)[*col], finite ? std::fabs(data.target(i) - pred[i]) : kNaN, finite};
  }
  std::stable_sort(curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
  return curve;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve, const std::string& axis_var) {
  std::string out = axis_var + ",abs_error,finite\n";
  for (const auto& p : curve) {
    out += format_number(p.x);
    out += ',';
    out += p.finite ? format_number(p.abs_error) : std::string("nan");
    out += p.finite ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<TracePoint> ood_trace(const RunResult& run, const Dataset& ood) {
  std::vector<TracePoint> trace;
  trace.reserve(run.per_iteration.size());
  for (const auto& rec : run.per_iteration) {
    TracePoint tp;
    tp.iteration = rec.iteration;
    try {
      const auto e = parse(rec.archive_text, ood.var_names());
      const auto pred = evaluate_batch(e, ood, rec.archive_params);
      tp.ood_wmape = wmape(ood.targets(), pred);
    } catch (const Error&) {
      tp.ood_wmape = kNaN;
    }
    tp.finite = std::isfinite(tp.ood_wmape);
    trace.push_back(tp);
  }
  return trace;
}

}  // namespace eqdisc
