#ifndef NESTOPT_DIAGNOSTICS_HPP
#define NESTOPT_DIAGNOSTICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "nestopt/errors.hpp"
#include "nestopt/geometry.hpp"
#include "nestopt/oracle.hpp"

namespace nestopt {

/// Constants of the merit function
///   W(x, z, u) = a (F(x) - F*) - eta(x, z) + (gamma / 2) ||g(x) - u||^2
/// and of the per-step residual r^{k+1}.
template <typename Scalar>
struct MeritConstants {
  Scalar a = 1;
  Scalar b = 1;
  Scalar gamma = 0;
  Scalar c = 0;
  Scalar beta = 1;
  Scalar L_grad_F = 0;
  Scalar L_grad_eta = 0;
  Scalar L_g = 0;
  Scalar L_grad_f = 0;
  std::optional<Scalar> F_star;
};

/// gamma = 4 c = alpha L_{grad f}, the choice under which the regularization
/// beta of the constant-parameter schedule satisfies the descent condition.
template <typename Scalar>
MeritConstants<Scalar> standard_merit_constants(Scalar a, Scalar b, Scalar alpha, Scalar beta,
                                             const Lipschitz<Scalar>& lip,
                                             std::optional<Scalar> F_star) {
  MeritConstants<Scalar> k;
  k.a = a;
  k.b = b;
  k.gamma = alpha * lip.grad_f;
  k.c = k.gamma / Scalar(4);
  k.beta = beta;
  k.L_grad_F = lip.grad_F();
  k.L_grad_eta = eta_gradient_lipschitz(beta);
  k.L_g = lip.g;
  k.L_grad_f = lip.grad_f;
  k.F_star = F_star;
  return k;
}

/// Checks 2 (a beta - c)(gamma b - 2 c) >= L_g^2 (a L_{grad f} + gamma)^2 up to a
/// relative rounding tolerance.
template <typename Scalar>
bool descent_condition_holds(const MeritConstants<Scalar>& k, Scalar rel_tol = Scalar(1e-12)) {
  const Scalar lhs = Scalar(2) * (k.a * k.beta - k.c) * (k.gamma * k.b - Scalar(2) * k.c);
  const Scalar t = k.a * k.L_grad_f + k.gamma;
  const Scalar rhs = k.L_g * k.L_g * t * t;
  if (k.a * k.beta - k.c <= Scalar(0) || k.gamma * k.b - Scalar(2) * k.c <= Scalar(0)) return false;
  return lhs >= rhs * (Scalar(1) - rel_tol);
}

template <typename Scalar>
Scalar merit_nasa(const CompositeProblem<Scalar>& problem, const Vec<Scalar>& x,
                  const Vec<Scalar>& z, const Vec<Scalar>& u, const MeritConstants<Scalar>& k) {
  if (!k.F_star) throw UnavailableDiagnostic("merit: optimal value F* is not known");
  const Vec<Scalar> g = problem.inner_value(x);
  const Scalar F = problem.outer_value(g);
  const Scalar eta = subproblem_value(problem.set(), x, z, k.beta);
  return k.a * (F - *k.F_star) - eta + Scalar(0.5) * k.gamma * (g - u).squaredNorm();
}

/// Single-level merit a (f(x) - f*) - eta(x, z).
template <typename Scalar>
Scalar merit_asa(const CompositeProblem<Scalar>& problem, const Vec<Scalar>& x,
                 const Vec<Scalar>& z, const MeritConstants<Scalar>& k) {
  if (!k.F_star) throw UnavailableDiagnostic("merit: optimal value f* is not known");
  const Scalar F = problem.objective(x);
  return k.a * (F - *k.F_star) - subproblem_value(problem.set(), x, z, k.beta);
}

/// Per-iteration record. Fields V through z_err_sq describe the state
/// (x^k, z^k, u^k); the remaining fields describe step k -> k+1 and feed the
/// residual r^{k+1}.
template <typename Scalar>
struct TrajectoryRow {
  static constexpr Scalar kNaN = std::numeric_limits<Scalar>::quiet_NaN();

  long k = 0;
  Scalar tau = 0;
  Scalar V = kNaN;
  Scalar d_sq = 0;        // ||d^k||^2 at the run's beta
  Scalar g_gap_sq = kNaN; // ||g(x^k) - u^k||^2
  Scalar W = kNaN;
  Scalar z_err_sq = kNaN; // ||z^k - grad F(x^k)||^2

  Scalar z_step_sq = 0;   // ||z^{k+1} - z^k||^2
  Scalar g_noise_sq = 0;  // ||g(x^{k+1}) - G^{k+1}||^2
  Scalar cross_g = 0;     // <g(x^{k+1}) - u^k, Delta^g_k>
  Scalar cross_F = 0;     // <d^k, Delta^F_k>
};

/// r^{k+1} of the telescoped descent inequality.
template <typename Scalar>
Scalar step_residual(const TrajectoryRow<Scalar>& row, const MeritConstants<Scalar>& k) {
  const Scalar tau = row.tau;
  const Scalar Lg2 = k.L_g * k.L_g;
  const Scalar curvature =
      k.a * k.L_grad_F + k.L_grad_eta + k.gamma * Lg2 + Scalar(2) * k.a * Lg2 * k.L_grad_f;
  return Scalar(0.5) * tau * tau * (curvature * row.d_sq + k.b * k.b * row.g_noise_sq) +
         tau * (k.gamma * k.b * (Scalar(1) - k.b * tau) * row.cross_g + k.a * row.cross_F) +
         Scalar(0.5) * k.L_grad_eta * row.z_step_sq;
}

template <typename Scalar>
struct LedgerReport {
  bool holds = true;
  long first_violation = -1;  // prefix length N of the first violation
  std::vector<Scalar> lhs;    // c sum tau_k (||d^k||^2 + ||g(x^k) - u^k||^2)
  std::vector<Scalar> rhs;    // W^0 + sum r^{k+1}
  std::vector<Scalar> slack;  // (rhs - lhs) / max(|rhs|, tiny)
  Scalar min_slack = std::numeric_limits<Scalar>::infinity();
};

/// Evaluates the telescoped inequality at every prefix N = 1..rows.size().
/// rows[0].W must hold W(x^0, z^0, u^0).
template <typename Scalar>
LedgerReport<Scalar> ledger_check(const std::vector<TrajectoryRow<Scalar>>& rows,
                                  const MeritConstants<Scalar>& k,
                                  Scalar tolerance = Scalar(1e-8)) {
  if (rows.empty()) throw std::invalid_argument("ledger_check: empty trajectory");
  if (!std::isfinite(static_cast<double>(rows.front().W))) {
    throw UnavailableDiagnostic("ledger_check: initial merit value missing");
  }
  LedgerReport<Scalar> report;
  Scalar lhs = 0;
  Scalar rhs = rows.front().W;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    lhs += k.c * row.tau * (row.d_sq + row.g_gap_sq);
    rhs += step_residual(row, k);
    const Scalar scale = std::max(std::abs(rhs), std::numeric_limits<Scalar>::min());
    const Scalar slack = (rhs - lhs) / scale;
    report.lhs.push_back(lhs);
    report.rhs.push_back(rhs);
    report.slack.push_back(slack);
    report.min_slack = std::min(report.min_slack, slack);
    if (slack < -tolerance && report.holds) {
      report.holds = false;
      report.first_violation = static_cast<long>(i) + 1;
    }
  }
  return report;
}

struct SlopePoint {
  double N = 0;
  double mean_V = 0;
  long samples = 0;
};

/// Least-squares slope of log(mean_V) against log(N), no sample checks.
/// Needs at least two distinct positive N.
inline double loglog_slope(const std::vector<SlopePoint>& points) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.N > 0) || !(p.mean_V > 0) || !std::isfinite(p.mean_V)) {
      throw std::invalid_argument("slope: N and mean_V must be positive and finite");
    }
    distinct.insert(p.N);
  }
  if (distinct.size() < 2) throw std::invalid_argument("slope: need two distinct N values");
  Eigen::MatrixXd design(points.size(), 2);
  Eigen::VectorXd response(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(points[i].N);
    response(i) = std::log(points[i].mean_V);
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(response);
  return coef(1);
}

/// Rate-test slope: at least 3 distinct N, each mean over min_samples runs.
inline double slope_estimate(const std::vector<SlopePoint>& points, long min_samples = 20) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (p.samples < min_samples) {
      throw std::invalid_argument("slope_estimate: too few samples behind a mean");
    }
    distinct.insert(p.N);
  }
  if (distinct.size() < 3) {
    throw std::invalid_argument("slope_estimate: need at least 3 distinct N values");
  }
  return loglog_slope(points);
}

template <typename Scalar>
struct FiniteDiffReport {
  Scalar max_rel_error = 0;
  std::vector<Scalar> rel_errors;
};

/// Central differences of F against the chain-rule gradient at each point.
template <typename Scalar>
FiniteDiffReport<Scalar> finite_diff_check(const CompositeProblem<Scalar>& problem,
                                           const std::vector<Vec<Scalar>>& points,
                                           Scalar h = Scalar(1e-5)) {
  if (!(h > Scalar(1e-8) && h < Scalar(1e-2))) {
    throw std::invalid_argument("finite_diff_check: step must lie in (1e-8, 1e-2)");
  }
  FiniteDiffReport<Scalar> report;
  for (const auto& x : points) {
    const Vec<Scalar> analytic = true_values(problem, x).grad_F;
    Vec<Scalar> numeric(x.size());
    Vec<Scalar> probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      probe[i] = x[i] + h;
      const Scalar up = problem.objective(probe);
      probe[i] = x[i] - h;
      const Scalar down = problem.objective(probe);
      probe[i] = x[i];
      numeric[i] = (up - down) / (Scalar(2) * h);
    }
    const Scalar scale = std::max(analytic.norm(), std::numeric_limits<Scalar>::min());
    const Scalar rel = (numeric - analytic).norm() / scale;
    report.rel_errors.push_back(rel);
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  return report;
}

/// Random points strictly inside the set (relative interior for the simplex).
template <typename Scalar>
std::vector<Vec<Scalar>> random_interior_points(const FeasibleSet<Scalar>& set, int count,
                                                Rng& rng) {
  const Eigen::Index n = set.dim();
  std::uniform_real_distribution<Scalar> unit(Scalar(0), Scalar(1));
  std::vector<Vec<Scalar>> out;
  for (int i = 0; i < count; ++i) {
    Vec<Scalar> x(n);
    switch (set.kind()) {
      case SetKind::kFullSpace:
        x = gaussian_vector<Scalar>(n, Scalar(1), rng);
        break;
      case SetKind::kBox: {
        const auto& box = *set.as_box();
        for (Eigen::Index j = 0; j < n; ++j) {
          const Scalar t = Scalar(0.1) + Scalar(0.8) * unit(rng);
          x[j] = box.lower[j] + t * (box.upper[j] - box.lower[j]);
        }
        break;
      }
      case SetKind::kBall: {
        const auto& ball = *set.as_ball();
        Vec<Scalar> dir = gaussian_vector<Scalar>(n, Scalar(1), rng);
        dir.normalize();
        x = ball.center + ball.radius * (Scalar(0.1) + Scalar(0.8) * unit(rng)) * dir;
        break;
      }
      case SetKind::kSimplex: {
        for (Eigen::Index j = 0; j < n; ++j) x[j] = Scalar(0.1) + unit(rng);
        x /= x.sum();
        break;
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace nestopt

#endif  // NESTOPT_DIAGNOSTICS_HPP
