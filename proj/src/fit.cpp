#include "eqdisc/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "eqdisc/error.hpp"
#include "eqdisc/eval.hpp"
#include "eqdisc/rng.hpp"

namespace eqdisc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRestartLo = -10.0;
constexpr double kRestartHi = 10.0;
constexpr double kLambdaInit = 1e-3;
constexpr double kLambdaMax = 1e16;

struct Evaluator {
  const CompiledExpr& program;
  const Dataset& data;
  std::size_t* evaluations;

  // Fills `pred`; returns the SSE (NaN if any residual is non-finite).
  double operator()(std::span<const double> params, std::vector<double>& pred) const {
    ++*evaluations;
    pred.resize(data.rows());
    double total = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      pred[i] = program.run(data.row(i), params);
      const double r = data.target(i) - pred[i];
      if (!std::isfinite(r)) finite = false;
      total += r * r;
    }
    return finite && std::isfinite(total) ? total : kNaN;
  }
};

double step_size(double p) { return 1e-6 * std::max(1.0, std::fabs(p)); }

// Jacobian into `jac` (rows × m, row-major); false if any entry is non-finite.
bool fd_jacobian(const Evaluator& eval, std::span<const double> params, std::vector<double>& jac) {
  const std::size_t n = eval.data.rows();
  const std::size_t m = params.size();
  jac.assign(n * m, 0.0);
  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> up, down;
  bool finite = true;
  for (std::size_t j = 0; j < m; ++j) {
    const double h = step_size(params[j]);
    probe[j] = params[j] + h;
    eval(probe, up);
    probe[j] = params[j] - h;
    eval(probe, down);
    probe[j] = params[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (up[i] - down[i]) / (2.0 * h);
      if (!std::isfinite(d)) finite = false;
      jac[i * m + j] = d;
    }
  }
  return finite;
}

struct RestartOutcome {
  std::vector<double> params;
  double sse = kNaN;
  bool converged = false;
};

RestartOutcome descend(const Evaluator& eval, std::vector<double> p, const FitConfig& cfg) {
  const std::size_t n = eval.data.rows();
  const std::size_t m = p.size();
  std::vector<double> pred;
  RestartOutcome out;
  double current = eval(p, pred);
  if (!std::isfinite(current)) {
    out.params = std::move(p);
    return out;  // poisoned start
  }

  std::vector<double> jac;
  std::vector<double> trial(m), trial_pred;
  double lambda = kLambdaInit;
  bool converged = false;

  for (std::size_t iter = 0; iter < cfg.max_iters_per_restart && !converged; ++iter) {
    if (current == 0.0) {
      converged = true;
      break;
    }
    if (!fd_jacobian(eval, p, jac)) break;

    Eigen::MatrixXd jt_j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd jt_r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
      const double r = pred[i] - eval.data.target(i);
      const double* row = jac.data() + i * m;
      for (std::size_t a = 0; a < m; ++a) {
        jt_r(static_cast<Eigen::Index>(a)) += row[a] * r;
        for (std::size_t b = 0; b <= a; ++b)
          jt_j(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += row[a] * row[b];
      }
    }
    jt_j = jt_j.selfadjointView<Eigen::Lower>();

    bool accepted = false;
    Eigen::VectorXd delta;
    while (lambda <= kLambdaMax) {
      Eigen::MatrixXd damped = jt_j;
      for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(m); ++a)
        damped(a, a) += lambda * std::max(jt_j(a, a), 1e-12);
      delta = damped.ldlt().solve(-jt_r);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      for (std::size_t a = 0; a < m; ++a) trial[a] = p[a] + delta(static_cast<Eigen::Index>(a));
      const double candidate = eval(trial, trial_pred);
      if (std::isfinite(candidate) && candidate < current) {
        accepted = true;
        const double improvement = current - candidate;
        p.swap(trial);
        pred.swap(trial_pred);
        current = candidate;
        lambda = std::max(lambda * 0.1, 1e-15);
        double p_norm = 0.0;
        for (double v : p) p_norm += v * v;
        if (delta.norm() <= cfg.step_tolerance * (std::sqrt(p_norm) + cfg.step_tolerance) ||
            improvement <= cfg.step_tolerance * cfg.step_tolerance * current)
          converged = true;
        break;
      }
      lambda *= 10.0;
    }
    // No damping level reduces the SSE: a local minimum at working precision.
    if (!accepted) converged = true;
  }
  out.params = std::move(p);
  out.sse = current;
  out.converged = converged;
  return out;
}

void check_schema(const Expression& e, const Dataset& data) {
  if (e.var_names() != data.var_names())
    throw SchemaError("expression variables do not match the dataset columns");
}

}  // namespace

void FitConfig::validate() const {
  if (restarts == 0) throw ValidationError("fit.restarts must be positive");
  if (max_iters_per_restart == 0) throw ValidationError("fit.max_iters_per_restart must be positive");
  if (!(step_tolerance > 0.0)) throw ValidationError("fit.step_tolerance must be positive");
}

double sse(const Expression& e, const Dataset& data, std::span<const double> params) {
  if (data.var_count() != e.var_count())
    throw ArityError("dataset has " + std::to_string(data.var_count()) + " columns, expression expects " +
                     std::to_string(e.var_count()));
  if (params.size() != e.param_count())
    throw ArityError("got " + std::to_string(params.size()) + " parameters, expression has " +
                     std::to_string(e.param_count()));
  const CompiledExpr program(e);
  std::size_t evals = 0;
  std::vector<double> pred;
  return Evaluator{program, data, &evals}(params, pred);
}

std::vector<double> jacobian(const Expression& e, const Dataset& data, std::span<const double> params) {
  if (params.size() != e.param_count()) throw ArityError("parameter count mismatch");
  const CompiledExpr program(e);
  std::size_t evals = 0;
  std::vector<double> jac;
  fd_jacobian(Evaluator{program, data, &evals}, params, jac);
  return jac;
}

FitResult fit_params(const Expression& e, const Dataset& data, const FitConfig& cfg) {
  check_schema(e, data);
  cfg.validate();
  const CompiledExpr program(e);
  FitResult result;
  const Evaluator eval{program, data, &result.evaluations};
  const std::size_t m = e.param_count();

  if (m == 0) {
    std::vector<double> pred;
    result.sse = eval({}, pred);
    result.converged = std::isfinite(result.sse);
    return result;
  }

  result.sse = kNaN;
  result.params.assign(m, 1.0);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    std::vector<double> start(m, 1.0);
    if (r > 0) {
      RandomStream rng(derive_seed(cfg.seed, {0x66697400ULL, r}));
      for (auto& v : start) v = rng.uniform(kRestartLo, kRestartHi);
    }
    auto outcome = descend(eval, std::move(start), cfg);
    if (!std::isfinite(outcome.sse)) continue;
    if (!std::isfinite(result.sse) || outcome.sse < result.sse) {
      result.params = std::move(outcome.params);
      result.sse = outcome.sse;
      result.converged = outcome.converged;
    }
  }
  if (!std::isfinite(result.sse)) result.converged = false;
  return result;
}

}  // namespace eqdisc
