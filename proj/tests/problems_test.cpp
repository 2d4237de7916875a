#include <gtest/gtest.h>

#include <cmath>

#include "nestopt/diagnostics.hpp"
#include "nestopt/problems.hpp"

namespace nestopt {
namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Set = FeasibleSet<double>;

Matrix random_orthogonal(Eigen::Index k, Rng& rng) {
  return Eigen::HouseholderQR<Matrix>(gaussian_matrix<double>(k, k, 1.0, rng)).householderQ();
}

TEST(GapFunction, FullSpaceClosedForm) {
  Rng rng(1);
  const Vector x = gaussian_vector<double>(4, 1.0, rng);
  const Vector h = gaussian_vector<double>(4, 1.0, rng);
  const auto e = gap_function_value_grad(Set::full_space(4), x, h);
  EXPECT_NEAR(e.value, 0.5 * h.squaredNorm(), 1e-14);
  EXPECT_LT((e.grad_h - h).norm(), 1e-14);
  EXPECT_LT(e.grad_x.norm(), 1e-14);
}

TEST(GapFunction, ZeroMapValue) {
  const Vector x = Vector::Constant(3, 0.2);
  const auto e = gap_function_value_grad(Set::box(3, -1.0, 1.0), x, Vector(Vector::Zero(3)));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.grad_x.norm(), 0.0);
  EXPECT_EQ(e.grad_h.norm(), 0.0);
}

TEST(GapFunction, BoxGradientsMatchFiniteDifferences) {
  Rng rng(4);
  const auto box = Set::box(5, -1.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = box.project(gaussian_vector<double>(5, 0.5, rng));
    const Vector m = gaussian_vector<double>(5, 1.0, rng);
    const auto e = gap_function_value_grad(box, x, m);
    Vector fx(5), fh(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      Vector d = Vector::Zero(5);
      d[i] = h;
      fh[i] = (gap_function_value_grad(box, x, Vector(m + d)).value -
               gap_function_value_grad(box, x, Vector(m - d)).value) / (2 * h);
      // x is only perturbed in the value formula, which extends past X.
      auto value_at = [&](const Vector& xx) {
        const Vector step = box.project(xx + m) - xx;
        return m.dot(step) - 0.5 * step.squaredNorm();
      };
      fx[i] = (value_at(x + d) - value_at(x - d)) / (2 * h);
    }
    EXPECT_LT((fh - e.grad_h).norm(), 1e-5 * std::max(1.0, e.grad_h.norm()));
    EXPECT_LT((fx - e.grad_x).norm(), 1e-5 * std::max(1.0, e.grad_x.norm()));
  }
}

TEST(Svi, IdentityMapOnBallVanishesAtOrigin) {
  SviProblem<double> p(Matrix::Identity(3, 3), Vector::Zero(3), Set::ball(3, 1.0));
  EXPECT_EQ(svi_residual(p, Vector(Vector::Zero(3))), 0.0);
  EXPECT_GT(svi_residual(p, Vector(Vector::Constant(3, 0.3))), 0.0);
}

TEST(Svi, StronglyMonotoneUnconstrainedSolution) {
  Rng rng(8);
  const Matrix B = gaussian_matrix<double>(4, 4, 1.0, rng);
  const Matrix M = B * B.transpose() + Matrix::Identity(4, 4);
  const Vector q = gaussian_vector<double>(4, 1.0, rng);
  SviProblem<double> p(M, q, Set::full_space(4));
  const Vector x_star = -M.lu().solve(q);
  EXPECT_LT(svi_residual(p, x_star), 1e-20);
  ASSERT_TRUE(p.minimizer());
  EXPECT_LT((*p.minimizer() - x_star).norm(), 1e-12);
  for (int trial = 0; trial < 10; ++trial) {
    EXPECT_GT(svi_residual(p, Vector(x_star + gaussian_vector<double>(4, 0.1, rng))), 0.0);
  }
}

TEST(Svi, ResidualVanishesWhereMapIsZero) {
  Rng rng(9);
  const Matrix M = gaussian_matrix<double>(3, 3, 1.0, rng);
  const Vector x0 = Vector::Constant(3, 0.1);
  const Vector q = -M * x0;  // Hbar(x0) = 0
  SviProblem<double> p(M, q, Set::box(3, -1.0, 1.0));
  EXPECT_LT(svi_residual(p, x0), 1e-30);
}

TEST(Svi, CertifiedInstanceIsSolved) {
  for (const auto& set : {Set::box(10, -1.0, 1.0), Set::ball(10, 1.0), Set::simplex(10)}) {
    auto p = make_svi<double>(set, 3);
    ASSERT_TRUE(p.minimizer());
    EXPECT_TRUE(set.contains(*p.minimizer()));
    EXPECT_LT(svi_residual(p, *p.minimizer()), 1e-20);
    EXPECT_EQ(p.m(), 20);
  }
}

TEST(Svi, OnlyTheMapPartIsNoisy) {
  auto p = make_svi<double>(Set::ball(4, 1.0), 1);
  p.set_noise(NoiseLevels<double>::uniform(0.5));
  Rng rng(3);
  const Vector x = Vector::Constant(4, 0.1);
  const Vector G = p.sample_inner_value(x, rng);
  EXPECT_EQ(G.head(4), x);
  EXPECT_NE(G.tail(4), p.mean_map(x));
  const Matrix J = p.sample_inner_jacobian(x, rng);
  EXPECT_EQ(J.topRows(4), Matrix::Identity(4, 4));
  const Vector u = gaussian_vector<double>(8, 1.0, rng);
  EXPECT_EQ(p.sample_outer_gradient(u, rng), p.outer_gradient(u));
}

TEST(PolicyEval, TwoStateNormalEquations) {
  Matrix P(2, 2);
  P << 0.9, 0.1, 0.4, 0.6;
  const Vector r = (Vector(2) << 1.0, -0.5).finished();
  const double gamma = 0.5;
  PolicyEvalProblem<double> p(P, r, gamma, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const Matrix B = Matrix::Identity(2, 2) - gamma * P;
  const Vector w = (B.transpose() * B).lu().solve(B.transpose() * r);
  EXPECT_LT((p.solution() - w).norm(), 1e-13);
  EXPECT_NEAR(*p.optimal_value(), 0.0, 1e-25);
}

TEST(PolicyEval, ZeroDiscountFitsRewardOnly) {
  Rng rng(5);
  Matrix P = gaussian_matrix<double>(6, 6, 1.0, rng).cwiseAbs();
  for (Eigen::Index i = 0; i < 6; ++i) P.row(i) /= P.row(i).sum();
  const Vector r = gaussian_vector<double>(6, 1.0, rng);
  const Matrix Phi = gaussian_matrix<double>(6, 3, 1.0, rng);
  PolicyEvalProblem<double> p(P, r, 0.0, Phi, Matrix::Identity(6, 6));
  const Vector w = Phi.colPivHouseholderQr().solve(r);
  EXPECT_LT((p.solution() - w).norm(), 1e-12);
}

TEST(PolicyEval, BuilderPreconditions) {
  EXPECT_THROW(build_policy_eval<double>(10, 3, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(build_policy_eval<double>(10, 3, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(build_policy_eval<double>(10, 11, 0.5, 1), std::invalid_argument);
  const auto p = build_policy_eval<double>(10, 3, 0.5, 1);
  EXPECT_EQ(p.n(), 3);
  EXPECT_EQ(p.m(), 40);
  EXPECT_LT((p.transition().rowwise().sum().array() - 1).abs().maxCoeff(), 1e-14);
}

TEST(PolicyEval, RejectsNonStochasticTransition) {
  Matrix P = Matrix::Identity(2, 2);
  P(0, 1) = 0.5;
  EXPECT_THROW(PolicyEvalProblem<double>(P, Vector::Ones(2), 0.5, Matrix::Identity(2, 2),
                                         Matrix::Identity(2, 2)),
               std::invalid_argument);
}

TEST(PolicyEval, OneHotSamplerIsUnbiased) {
  const auto p = build_policy_eval<double>(6, 2, 0.5, 7);
  Rng rng(10);
  const long draws = 100000;
  Matrix mean = Matrix::Zero(6, 6);
  for (long t = 0; t < draws; ++t) {
    const Matrix Phat = p.sample_transition_matrix(rng);
    if (t < 100) {
      for (Eigen::Index i = 0; i < 6; ++i) {
        EXPECT_EQ(Phat.row(i).sum(), 1.0);
        EXPECT_EQ((Phat.row(i).array() == 1.0).count(), 1);
      }
    }
    mean += Phat;
  }
  mean /= draws;
  // Binomial standard error is at most 0.5 / sqrt(draws).
  EXPECT_LT((mean - p.transition()).cwiseAbs().maxCoeff(), 5 * 0.5 / std::sqrt(double(draws)));
}

TEST(PolicyEval, SampledValueIsUnbiased) {
  const auto p = build_policy_eval<double>(8, 3, 0.7, 2);
  const Vector w = Vector::LinSpaced(3, -1, 1);
  Rng rng(12);
  Vector G = Vector::Zero(p.m());
  Matrix J = Matrix::Zero(p.m(), 3);
  const long draws = 40000;
  for (long t = 0; t < draws; ++t) {
    G += p.sample_inner_value(w, rng);
    J += p.sample_inner_jacobian(w, rng);
  }
  const double scale = p.inner_value(w).norm() + 1;
  EXPECT_LT((G / draws - p.inner_value(w)).norm(), 0.05 * scale);
  EXPECT_LT((J / draws - p.inner_jacobian(w)).norm(), 0.05 * (p.inner_jacobian(w).norm() + 1));
}

TEST(LowRank, OrthogonalInvariance) {
  auto p = make_low_rank<double>(15, 3, 4);
  Rng rng(6);
  const Vector x = p.set().project(gaussian_vector<double>(p.n(), 0.5, rng));
  const Matrix U = p.factor_u(x);
  const Matrix V = p.factor_v(x);
  const double F = p.objective(x);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix Q = random_orthogonal(3, rng);
    EXPECT_NEAR(p.objective(p.join(U * Q, V * Q)), F, 1e-12 * std::max(1.0, F));
  }
}

TEST(LowRank, CertifiedMinimizerAndJoinRoundTrip) {
  auto p = make_low_rank<double>(6, 2, 1);
  ASSERT_TRUE(p.minimizer());
  EXPECT_NEAR(*p.optimal_value(), 0.0, 1e-24);
  EXPECT_TRUE(p.set().contains(*p.minimizer()));
  EXPECT_TRUE(p.set().contains(p.initial_point()));
  const Vector x = *p.minimizer();
  EXPECT_EQ(p.join(p.factor_u(x), p.factor_v(x)), x);
  EXPECT_THROW(make_low_rank<double>(4, 4, 1), std::invalid_argument);
}

TEST(Quadratic, CertifiedInstanceIsStationary) {
  for (const auto& set : {Set::ball(20, 1.0), Set::box(20, -1.0, 1.0), Set::simplex(20),
                          Set::full_space(20)}) {
    auto q = make_quadratic<double>(20, 10, set, 7);
    ASSERT_TRUE(q.minimizer());
    const Vector x = *q.minimizer();
    const auto truth = true_values<double>(q, x);
    EXPECT_LT(optimality_measure(set, x, truth.grad_F, truth.grad_F), 1e-24);
    EXPECT_NEAR(q.lipschitz()->g, 1.0, 1e-12);
  }
}

TEST(Quadratic, IdentityInstanceMinimizerIsProjection) {
  auto q = make_identity_quadratic<double>(Set::box(5, -1.0, 1.0), 2);
  EXPECT_TRUE(q.identity_inner());
  EXPECT_LT((*q.minimizer() - q.set().project(q.c())).norm(), 1e-15);
}

TEST(FiniteDifferences, AllBenchmarksAgreeWithChainRule) {
  Rng rng(31);
  auto quad = make_quadratic<double>(20, 10, Set::ball(20, 1.0), 7);
  EXPECT_LT(finite_diff_check<double>(quad, random_interior_points(quad.set(), 20, rng)).max_rel_error,
            1e-8);
  auto svi = make_svi<double>(Set::box(10, -1.0, 1.0), 3);
  EXPECT_LT(finite_diff_check<double>(svi, random_interior_points(svi.set(), 20, rng)).max_rel_error,
            1e-5);
  auto pe = build_policy_eval<double>(50, 10, 0.5, 11);
  EXPECT_LT(finite_diff_check<double>(pe, random_interior_points(pe.set(), 20, rng)).max_rel_error,
            1e-5);
  auto lr = make_low_rank<double>(15, 3, 5);
  EXPECT_LT(finite_diff_check<double>(lr, random_interior_points(lr.set(), 20, rng)).max_rel_error,
            1e-5);
}

}  // namespace
}  // namespace nestopt
