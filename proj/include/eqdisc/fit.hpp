#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eqdisc/dataset.hpp"
#include "eqdisc/expr.hpp"

namespace eqdisc {

struct FitConfig {
  std::size_t restarts = 4;
  std::size_t max_iters_per_restart = 100;
  double step_tolerance = 1e-10;
  std::uint64_t seed = 0;

  // Throws ValidationError unless every field is positive.
  void validate() const;
};

struct FitResult {
  std::vector<double> params;
  double sse = 0.0;  // NaN when no restart produced a finite fit
  bool converged = false;
  std::size_t evaluations = 0;  // full passes over the dataset
};

// Σ (y - f(x))² over all rows, summed in row order; NaN if any residual is
// non-finite. Throws ArityError on a parameter/column count mismatch.
double sse(const Expression& e, const Dataset& data, std::span<const double> params);

// Central-difference Jacobian of the predictions with respect to the
// parameters, step h = 1e-6·max(1, |p|). Row-major, rows × param_count.
std::vector<double> jacobian(const Expression& e, const Dataset& data, std::span<const double> params);

// Multi-start damped Gauss-Newton (Levenberg-Marquardt damping). Restart 0
// starts from all ones, later restarts from seeded uniform draws in
// [-10, 10]; the restart with the smallest finite SSE wins, earliest on ties.
// Throws SchemaError if the expression's variables differ from the dataset's.
FitResult fit_params(const Expression& e, const Dataset& data, const FitConfig& cfg = {});

}  // namespace eqdisc
