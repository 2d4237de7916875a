#ifndef NESTOPT_HARNESS_CHECKS_HPP
#define NESTOPT_HARNESS_CHECKS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace nestopt::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0;  // worst observed quantity
  std::string detail;
};

/// ||ybar(x,z,1) - x|| <= max(1, beta) ||ybar(x,z,beta) - x|| + 1e-10 on
/// `cases` random (set, x, z, beta), cycling through the four set kinds.
CheckResult step_scaling_property(int cases, std::uint64_t seed);

/// <z, d> + beta ||d||^2 <= 1e-10 on the same corpus.
CheckResult subproblem_optimality(int cases, std::uint64_t seed);

/// Telescoped descent inequality on the zero-noise quadratic, standard
/// parameters, every prefix up to N.
CheckResult ledger_on_quadratic(long N);

/// Central differences against the chain rule at `points` interior points
/// of each benchmark problem, relative tolerance `tol`.
std::vector<CheckResult> finite_difference_suite(int points, double tol);

std::vector<CheckResult> run_checks();

}  // namespace nestopt::harness

#endif  // NESTOPT_HARNESS_CHECKS_HPP
