#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqdisc/dataset.hpp"
#include "eqdisc/expr.hpp"

namespace eqdisc {

struct RunResult;

// All three metrics return NaN when any prediction is non-finite; a broken
// expression never scores well. Throw LengthMismatch on unequal or empty input.

// Σ|y - ŷ| / Σ|y|. Throws DegenerateTarget when Σ|y| = 0.
double wmape(std::span<const double> y, std::span<const double> yhat);
// Σ(y - ŷ)² / Σ(y - ȳ)², so predicting the mean scores exactly 1.
// Needs at least two rows; throws DegenerateTarget on a constant target.
double nmse(std::span<const double> y, std::span<const double> yhat);
// (1/n) Σ|y - ŷ|.
double mae(std::span<const double> y, std::span<const double> yhat);

std::size_t count_nonfinite(std::span<const double> values) noexcept;

struct MetricReport {
  double wmape = 0.0;
  double nmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
  Split split = Split::train;
  std::size_t nonfinite = 0;
  std::optional<std::vector<double>> per_point_abs_error;
};

// Degenerate targets give NaN entries instead of throwing.
MetricReport evaluate_metrics(const Expression& e, std::span<const double> params, const Dataset& data,
                              bool keep_per_point = false);

struct CurvePoint {
  double x = 0.0;
  double abs_error = 0.0;  // NaN when the prediction is non-finite
  bool finite = true;
};

// |y - ŷ| against one input column, sorted by that column (stable).
// Throws UnknownVariable if axis_var is not a column.
std::vector<CurvePoint> abs_error_curve(const Expression& e, std::span<const double> params,
                                        const Dataset& data, const std::string& axis_var);
std::string curve_to_csv(const std::vector<CurvePoint>& curve, const std::string& axis_var);

struct TracePoint {
  std::size_t iteration = 0;
  double ood_wmape = 0.0;
  bool finite = true;
};

// WMAPE of each iteration's archive incumbent on the OOD split.
std::vector<TracePoint> ood_trace(const RunResult& run, const Dataset& ood);

}  // namespace eqdisc
