#include "nestopt/harness/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <random>

#include "nestopt/nestopt.hpp"

namespace nestopt::harness {
namespace {

using Vector = Eigen::VectorXd;

struct SubproblemCase {
  FeasibleSet<double> set;
  Vector x;
  Vector z;
  double beta;
};

// Random (set, x, z, beta) with x in the set; the set kind cycles with i.
std::vector<SubproblemCase> subproblem_corpus(int cases, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dim_dist(1, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SubproblemCase> out;
  out.reserve(static_cast<std::size_t>(cases));
  for (int i = 0; i < cases; ++i) {
    const Eigen::Index n = dim_dist(rng);
    FeasibleSet<double> set = FeasibleSet<double>::full_space(n);
    switch (i % 4) {
      case 0:
        break;
      case 1: {
        const Vector lo = gaussian_vector<double>(n, 1.0, rng);
        Vector hi = lo;
        for (Eigen::Index j = 0; j < n; ++j) hi[j] += 2.0 * unit(rng);
        set = FeasibleSet<double>::box(lo, hi);
        break;
      }
      case 2:
        set = FeasibleSet<double>::ball(gaussian_vector<double>(n, 1.0, rng), 0.1 + 2.0 * unit(rng));
        break;
      case 3:
        set = FeasibleSet<double>::simplex(n);
        break;
    }
    const Vector x = set.project(gaussian_vector<double>(n, 2.0, rng));
    const double z_scale = std::pow(10.0, -2.0 + 4.0 * unit(rng));
    const Vector z = gaussian_vector<double>(n, z_scale, rng);
    const double beta = std::pow(10.0, -3.0 + 6.0 * unit(rng));
    out.push_back({std::move(set), x, z, beta});
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

CheckResult step_scaling_property(int cases, std::uint64_t seed) {
  CheckResult r{"step_scaling", true, -std::numeric_limits<double>::infinity(), ""};
  for (const auto& c : subproblem_corpus(cases, seed)) {
    const double unit_step = solve_subproblem(c.set, c.x, c.z, 1.0).d.norm();
    const double beta_step = solve_subproblem(c.set, c.x, c.z, c.beta).d.norm();
    const double excess = unit_step - std::max(1.0, c.beta) * beta_step;
    r.value = std::max(r.value, excess);
    if (excess > 1e-10) r.passed = false;
  }
  r.detail = fmt("max excess %.3e over ", r.value) + std::to_string(cases) + " cases";
  return r;
}

CheckResult subproblem_optimality(int cases, std::uint64_t seed) {
  // The corpus reaches |<z,d>| ~ 1e8 where the exact value is 0, so a double
  // solve rounds past 1e-10; the check solves the same inputs in long double.
  using Wide = long double;
  CheckResult r{"subproblem_optimality", true, -std::numeric_limits<double>::infinity(), ""};
  double double_worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : subproblem_corpus(cases, seed)) {
    const Vec<Wide> x = c.x.cast<Wide>();
    const Vec<Wide> z = c.z.cast<Wide>();
    const auto sol = solve_subproblem(c.set.cast<Wide>(), x, z, static_cast<Wide>(c.beta));
    const double lhs = static_cast<double>(z.dot(sol.d) + static_cast<Wide>(c.beta) * sol.d.squaredNorm());
    r.value = std::max(r.value, lhs);
    if (lhs > 1e-10) r.passed = false;
    const auto plain = solve_subproblem(c.set, c.x, c.z, c.beta);
    double_worst = std::max(double_worst, c.z.dot(plain.d) + c.beta * plain.d.squaredNorm());
  }
  r.detail = fmt("max <z,d> + beta |d|^2 = %.3e over ", r.value) + std::to_string(cases) +
             fmt(" cases (double solve %.3e)", double_worst);
  return r;
}

CheckResult ledger_on_quadratic(long N) {
  CheckResult r{"ledger", false, 0, ""};
  auto q = make_quadratic<double>(20, 10, FeasibleSet<double>::ball(20, 1.0), 7);
  NasaParams<double> p;
  p.N = N;
  RunOptions<double> options;
  options.record_trajectory = true;
  const auto run = nasa_run<double>(q, p, {1, 0}, options);
  const auto report = ledger_check(run.trajectory, *run.merit);
  r.passed = report.holds && run.schedule.descent_ok.value_or(false);
  r.value = report.min_slack;
  r.detail = fmt("min relative slack %.3e", report.min_slack) +
             (report.holds ? "" : ", first violation at N=" + std::to_string(report.first_violation));
  return r;
}

std::vector<CheckResult> finite_difference_suite(int points, double tol) {
  Rng rng(2024);
  std::vector<std::pair<std::string, std::unique_ptr<CompositeProblem<double>>>> problems;
  problems.emplace_back("quadratic", std::make_unique<SyntheticQuadratic<double>>(
                                         make_quadratic<double>(20, 10, FeasibleSet<double>::ball(20, 1.0), 7)));
  problems.emplace_back("svi", std::make_unique<SviProblem<double>>(
                                   make_svi<double>(FeasibleSet<double>::box(10, -1.0, 1.0), 3)));
  problems.emplace_back("policy_eval", std::make_unique<PolicyEvalProblem<double>>(
                                           build_policy_eval<double>(50, 10, 0.5, 11)));
  problems.emplace_back("low_rank", std::make_unique<LowRankProblem<double>>(
                                        make_low_rank<double>(15, 3, 5)));
  std::vector<CheckResult> out;
  for (const auto& [name, problem] : problems) {
    const auto pts = random_interior_points(problem->set(), points, rng);
    const auto report = finite_diff_check(*problem, pts);
    out.push_back({"finite_diff_" + name, report.max_rel_error < tol, report.max_rel_error,
                   fmt("max relative error %.3e", report.max_rel_error)});
  }
  return out;
}

std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  out.push_back(step_scaling_property(1000, 1));
  out.push_back(subproblem_optimality(1000, 1));
  out.push_back(ledger_on_quadratic(500));
  for (auto& r : finite_difference_suite(20, 1e-5)) out.push_back(std::move(r));
  return out;
}

}  // namespace nestopt::harness
