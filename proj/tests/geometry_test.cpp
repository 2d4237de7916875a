#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nestopt/geometry.hpp"
#include "nestopt/oracle.hpp"

namespace nestopt {
namespace {

using Set = FeasibleSet<double>;
using Vector = Eigen::VectorXd;

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

// Simplex projection by enumerating supports and checking the KKT system:
// x_S = p_S - theta >= 0, p_j - theta <= 0 off the support.
Vector simplex_by_kkt(const Vector& p) {
  const int n = static_cast<int>(p.size());
  for (int mask = 1; mask < (1 << n); ++mask) {
    double sum = 0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1 << i)) {
        sum += p[i];
        ++count;
      }
    }
    const double theta = (sum - 1.0) / count;
    bool ok = true;
    Vector x = Vector::Zero(n);
    for (int i = 0; i < n && ok; ++i) {
      if (mask & (1 << i)) {
        x[i] = p[i] - theta;
        ok = x[i] >= -1e-14;
      } else {
        ok = p[i] - theta <= 1e-14;
      }
    }
    if (ok) return x;
  }
  ADD_FAILURE() << "no KKT point found";
  return Vector::Zero(n);
}

Set random_set(int kind, Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (kind) {
    case 0:
      return Set::full_space(n);
    case 1: {
      Vector lo = gaussian_vector<double>(n, 1.0, rng);
      Vector hi = lo;
      for (Eigen::Index j = 0; j < n; ++j) hi[j] += 2.0 * unit(rng);
      return Set::box(lo, hi);
    }
    case 2:
      return Set::ball(gaussian_vector<double>(n, 1.0, rng), 0.5 + unit(rng));
    default:
      return Set::simplex(n);
  }
}

TEST(Project, BoxClipsPerCoordinate) {
  const auto box = Set::box(v({-1, -1}), v({1, 1}));
  EXPECT_TRUE(box.project(v({2, 0.5})).isApprox(v({1, 0.5})));
}

TEST(Project, BallScalesRadially) {
  const auto ball = Set::ball(2, 1.0);
  const Vector y = ball.project(v({3, 4}));
  EXPECT_NEAR(y[0], 0.6, 1e-15);
  EXPECT_NEAR(y[1], 0.8, 1e-15);
}

TEST(Project, SimplexSymmetricPoint) {
  const Vector y = Set::simplex(2).project(v({1, 1}));
  EXPECT_NEAR(y[0], 0.5, 1e-15);
  EXPECT_NEAR(y[1], 0.5, 1e-15);
}

TEST(Project, SimplexMatchesKktEnumeration) {
  const Vector p = v({0.9, 0.5, -0.2});
  const Vector y = Set::simplex(3).project(p);
  EXPECT_LT((y - simplex_by_kkt(p)).norm(), 1e-14);
  // Support {0, 1}, threshold 0.2.
  EXPECT_NEAR(y[0], 0.7, 1e-15);
  EXPECT_NEAR(y[1], 0.3, 1e-15);
  EXPECT_EQ(y[2], 0.0);

  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    const Vector q = gaussian_vector<double>(n, 1.5, rng);
    EXPECT_LT((Set::simplex(n).project(q) - simplex_by_kkt(q)).norm(), 1e-12) << "trial " << trial;
  }
}

TEST(Project, DimensionMismatchThrows) {
  EXPECT_THROW(Set::ball(3, 1.0).project(v({1, 2})), std::invalid_argument);
  EXPECT_THROW(project(Set::simplex(2), v({1, 2, 3})), std::invalid_argument);
}

TEST(Project, InvalidSetsRejected) {
  EXPECT_THROW(Set::box(v({1, 0}), v({0, 1})), std::invalid_argument);
  EXPECT_THROW(Set::ball(2, 0.0), std::invalid_argument);
  EXPECT_THROW(Set::ball(2, -1.0), std::invalid_argument);
}

TEST(Project, IdempotentNonexpansiveAndFeasible) {
  Rng rng(3);
  for (int trial = 0; trial < 400; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    const Set set = random_set(trial % 4, n, rng);
    const Vector p = gaussian_vector<double>(n, 3.0, rng);
    const Vector q = gaussian_vector<double>(n, 3.0, rng);
    const Vector pp = set.project(p);
    const Vector pq = set.project(q);
    EXPECT_TRUE(set.contains(pp));
    EXPECT_LT((set.project(pp) - pp).norm(), 1e-13);
    EXPECT_LE((pp - pq).norm(), (p - q).norm() + 1e-12);
  }
}

TEST(Subproblem, UnconstrainedClosedForm) {
  const auto sol = solve_subproblem(Set::full_space(2), v({0, 0}), v({1, 2}), 2.0);
  EXPECT_TRUE(sol.y.isApprox(v({-0.5, -1})));
  EXPECT_NEAR(sol.eta, -1.25, 1e-15);
  EXPECT_TRUE(sol.d.isApprox(sol.y));
}

TEST(Subproblem, ZeroGradientIsFixedPoint) {
  Rng rng(5);
  for (int kind = 0; kind < 4; ++kind) {
    const Set set = random_set(kind, 4, rng);
    const Vector x = set.project(gaussian_vector<double>(4, 1.0, rng));
    const auto sol = solve_subproblem(set, x, Vector(Vector::Zero(4)), 3.0);
    EXPECT_EQ(sol.eta, 0.0);
    EXPECT_EQ(sol.d.norm(), 0.0);
    EXPECT_EQ(sol.y, x);
  }
}

TEST(Subproblem, BoxAgreesWithDenseGrid) {
  const auto box = Set::box(v({-0.25, -0.25}), v({0.25, 0.25}));
  const Vector x = v({0, 0});
  const Vector z = v({1, 2});
  const double beta = 2.0;
  const auto sol = solve_subproblem(box, x, z, beta);
  EXPECT_TRUE(sol.y.isApprox(v({-0.25, -0.25})));
  const double unconstrained = -z.squaredNorm() / (2 * beta);
  EXPECT_GE(sol.eta, unconstrained);

  double grid_min = std::numeric_limits<double>::infinity();
  const int steps = 400;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      const Vector y = v({-0.25 + 0.5 * i / steps, -0.25 + 0.5 * j / steps});
      const Vector d = y - x;
      grid_min = std::min(grid_min, z.dot(d) + 0.5 * beta * d.squaredNorm());
    }
  }
  EXPECT_NEAR(sol.eta, grid_min, 1e-12);
}

TEST(Subproblem, PreconditionsEnforced) {
  const auto ball = Set::ball(2, 1.0);
  EXPECT_THROW(solve_subproblem(ball, v({0, 0}), v({1, 1}), 0.0), std::invalid_argument);
  EXPECT_THROW(solve_subproblem(ball, v({0, 0}), v({1, 1}), -1.0), std::invalid_argument);
  EXPECT_THROW(solve_subproblem(ball, v({2, 0}), v({1, 1}), 1.0), PreconditionError);
  // Within the membership tolerance is accepted.
  EXPECT_NO_THROW(solve_subproblem(ball, v({1 + 1e-13, 0}), v({1, 1}), 1.0));
}

TEST(Subproblem, EtaNonpositiveAndOptimalityInequality) {
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 1 + trial % 9;
    const Set set = random_set(trial % 4, n, rng);
    const Vector x = set.project(gaussian_vector<double>(n, 2.0, rng));
    const Vector z = gaussian_vector<double>(n, 1.0, rng);
    const double beta = std::pow(10.0, -3 + 6 * unit(rng));
    const auto sol = solve_subproblem(set, x, z, beta);
    EXPECT_LE(sol.eta, 1e-12);
    EXPECT_LE(z.dot(sol.d) + beta * sol.d.squaredNorm(), 1e-10);
    const double unit_step = solve_subproblem(set, x, z, 1.0).d.norm();
    EXPECT_LE(unit_step, std::max(1.0, beta) * sol.d.norm() + 1e-10);
  }
}

TEST(OptimalityMeasure, UnconstrainedFormula) {
  EXPECT_NEAR(optimality_measure(Set::full_space(2), v({0, 0}), v({1, 0}), v({1, 0})), 1.0, 1e-15);
  Rng rng(2);
  const Vector x = gaussian_vector<double>(3, 1.0, rng);
  const Vector z = gaussian_vector<double>(3, 1.0, rng);
  const Vector g = gaussian_vector<double>(3, 1.0, rng);
  EXPECT_NEAR(optimality_measure(Set::full_space(3), x, z, g),
              z.squaredNorm() + (z - g).squaredNorm(), 1e-13);
}

TEST(OptimalityMeasure, ZeroAtInteriorStationaryPoint) {
  const Vector zero = Vector::Zero(3);
  EXPECT_EQ(optimality_measure(Set::ball(3, 1.0), zero, zero, zero), 0.0);
  EXPECT_EQ(optimality_measure(Set::box(3, -1.0, 1.0), zero, zero, zero), 0.0);
}

TEST(OptimalityMeasure, BallBoundaryComposesProjection) {
  const auto ball = Set::ball(2, 1.0);
  const Vector x = v({0.6, 0.8});
  const Vector z = x;  // outward normal
  const double expected = (ball.project(x - z) - x).squaredNorm();
  EXPECT_NEAR(optimality_measure(ball, x, z, z), expected, 1e-15);
  EXPECT_GT(expected, 0.0);
}

TEST(OptimalityMeasure, DimensionMismatchThrows) {
  EXPECT_THROW(optimality_measure(Set::full_space(2), v({0, 0}), v({1}), v({1, 0})),
               std::invalid_argument);
}

// Danskin: grad_z eta = d, grad_x eta = -z - beta d.
TEST(EtaGradient, LipschitzBoundHolds) {
  Rng rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 400; ++trial) {
    const Eigen::Index n = 2 + trial % 5;
    const Set set = random_set(trial % 4, n, rng);
    const double beta = std::pow(10.0, -1 + 2 * unit(rng));
    const double L = eta_gradient_lipschitz(beta);
    auto grad = [&](const Vector& x, const Vector& z) {
      const auto sol = solve_subproblem(set, x, z, beta);
      Vector g(2 * n);
      g << -z - beta * sol.d, sol.d;
      return g;
    };
    const Vector x1 = set.project(gaussian_vector<double>(n, 1.0, rng));
    const Vector x2 = set.project(gaussian_vector<double>(n, 1.0, rng));
    const Vector z1 = gaussian_vector<double>(n, 1.0, rng);
    const Vector z2 = gaussian_vector<double>(n, 1.0, rng);
    Vector delta(2 * n);
    delta << x1 - x2, z1 - z2;
    EXPECT_LE((grad(x1, z1) - grad(x2, z2)).norm(), L * delta.norm() + 1e-12);
  }
}

TEST(EtaGradient, DanskinMatchesFiniteDifferences) {
  Rng rng(29);
  const Set set = Set::ball(3, 1.0);
  const double beta = 1.7;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = 0.5 * set.project(gaussian_vector<double>(3, 1.0, rng));
    const Vector z = gaussian_vector<double>(3, 1.0, rng);
    const auto sol = solve_subproblem(set, x, z, beta);
    for (Eigen::Index i = 0; i < 3; ++i) {
      Vector e = Vector::Zero(3);
      e[i] = h;
      const double dz = (subproblem_value(set, x, Vector(z + e), beta) -
                         subproblem_value(set, x, Vector(z - e), beta)) / (2 * h);
      const double dx = (subproblem_value(set, Vector(x + e), z, beta) -
                         subproblem_value(set, Vector(x - e), z, beta)) / (2 * h);
      EXPECT_NEAR(dz, sol.d[i], 1e-6);
      EXPECT_NEAR(dx, (-z - beta * sol.d)[i], 1e-6);
    }
  }
}

TEST(EtaGradient, ConstantFormula) {
  EXPECT_NEAR(eta_gradient_lipschitz(1.0), 2 * std::sqrt(4 + 2.25), 1e-15);
  EXPECT_THROW(eta_gradient_lipschitz(0.0), std::invalid_argument);
}

TEST(FeasibleSetCast, LongDoubleProjectionAgrees) {
  Rng rng(12);
  for (int kind = 0; kind < 4; ++kind) {
    const auto set = random_set(kind, 5, rng);
    const auto wide = set.cast<long double>();
    EXPECT_EQ(wide.kind(), set.kind());
    const Eigen::VectorXd p = gaussian_vector<double>(5, 3.0, rng);
    const Eigen::VectorXd back = wide.project(p.cast<long double>()).cast<double>();
    EXPECT_LT((back - set.project(p)).norm(), 1e-14);
  }
}

}  // namespace
}  // namespace nestopt
