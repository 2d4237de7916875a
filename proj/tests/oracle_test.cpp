#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nestopt/oracle.hpp"
#include "nestopt/problems.hpp"

namespace nestopt {
namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

SyntheticQuadratic<double> small_quadratic() {
  Rng rng(1);
  const Matrix A = gaussian_matrix<double>(3, 4, 1.0, rng);
  const Vector b = gaussian_vector<double>(3, 1.0, rng);
  return SyntheticQuadratic<double>(A, b, Vector::Zero(3), FeasibleSet<double>::full_space(4));
}

TEST(SplitMix64, ReferenceOutput) {
  SplitMix64 g(0);
  EXPECT_EQ(g(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(g(), 0x6e789e6aa1b965f4ULL);
}

TEST(Streams, KeysGiveDistinctStreams) {
  const auto a = make_stream({1, 0, 5, StreamTag::kValue});
  EXPECT_EQ(a, make_stream({1, 0, 5, StreamTag::kValue}));
  EXPECT_FALSE(a == make_stream({1, 0, 5, StreamTag::kJacobian}));
  EXPECT_FALSE(a == make_stream({1, 0, 6, StreamTag::kValue}));
  EXPECT_FALSE(a == make_stream({1, 1, 5, StreamTag::kValue}));
  EXPECT_FALSE(a == make_stream({2, 0, 5, StreamTag::kValue}));
}

TEST(Sample, NoiseFreeIsExact) {
  auto q = small_quadratic();
  Rng rng(2);
  const Vector x = gaussian_vector<double>(4, 1.0, rng);
  const Vector u = gaussian_vector<double>(3, 1.0, rng);
  auto streams = OracleStreams::at(1, 0, 0);
  const auto s = sample<double>(q, x, u, streams);
  EXPECT_EQ(s.G, q.inner_value(x));
  EXPECT_EQ(s.J, q.inner_jacobian(x));
  EXPECT_EQ(s.s, q.outer_gradient(u));
}

TEST(Sample, ShapesAndDimensionErrors) {
  auto q = small_quadratic();
  q.set_noise(NoiseLevels<double>::uniform(0.1));
  auto streams = OracleStreams::at(1, 0, 0);
  const auto s = sample<double>(q, Vector::Zero(4), Vector::Zero(3), streams);
  EXPECT_EQ(s.G.size(), 3);
  EXPECT_EQ(s.J.rows(), 3);
  EXPECT_EQ(s.J.cols(), 4);
  EXPECT_EQ(s.s.size(), 3);
  EXPECT_THROW(sample<double>(q, Vector::Zero(3), Vector::Zero(3), streams), std::invalid_argument);
  EXPECT_THROW(sample<double>(q, Vector::Zero(4), Vector::Zero(4), streams), std::invalid_argument);
}

TEST(Sample, MonteCarloUnbiased) {
  auto q = small_quadratic();
  q.set_noise(NoiseLevels<double>::uniform(0.3));
  const Vector x = Vector::LinSpaced(4, -1, 1);
  const Vector u = Vector::LinSpaced(3, 0.5, 1.5);
  const long count = 100000;
  Vector G = Vector::Zero(3);
  Matrix J = Matrix::Zero(3, 4);
  Vector s = Vector::Zero(3);
  for (long k = 0; k < count; ++k) {
    auto streams = OracleStreams::at(9, 0, k);
    const auto smp = sample<double>(q, x, u, streams);
    G += smp.G;
    J += smp.J;
    s += smp.s;
  }
  const auto spec = q.spec();
  const double root = std::sqrt(static_cast<double>(count));
  EXPECT_LT((G / count - q.inner_value(x)).norm(), 3 * spec.sigma_G / root);
  EXPECT_LT((J / count - q.inner_jacobian(x)).norm(), 3 * spec.sigma_J / root);
  EXPECT_LT((s / count - q.outer_gradient(u)).norm(), 3 * spec.sigma_s / root);
}

TEST(Sample, DeterministicForFixedSeed) {
  auto q = small_quadratic();
  q.set_noise(NoiseLevels<double>::uniform(0.5));
  auto a = OracleStreams::at(4, 2, 17);
  auto b = OracleStreams::at(4, 2, 17);
  const auto sa = sample<double>(q, Vector::Ones(4), Vector::Ones(3), a);
  const auto sb = sample<double>(q, Vector::Ones(4), Vector::Ones(3), b);
  EXPECT_EQ(sa.G, sb.G);
  EXPECT_EQ(sa.J, sb.J);
  EXPECT_EQ(sa.s, sb.s);
}

TEST(Sample, ExtraDrawsOnOneStreamLeaveOthersUnchanged) {
  auto q = small_quadratic();
  q.set_noise(NoiseLevels<double>::uniform(0.5));
  auto clean = OracleStreams::at(4, 0, 3);
  const auto reference = sample<double>(q, Vector::Ones(4), Vector::Ones(3), clean);

  auto noisy_s = OracleStreams::at(4, 0, 3);
  for (int i = 0; i < 37; ++i) noisy_s.gradient();
  const auto after_s = sample<double>(q, Vector::Ones(4), Vector::Ones(3), noisy_s);
  EXPECT_EQ(after_s.J, reference.J);
  EXPECT_EQ(after_s.G, reference.G);
  EXPECT_NE(after_s.s, reference.s);

  auto noisy_j = OracleStreams::at(4, 0, 3);
  for (int i = 0; i < 11; ++i) noisy_j.jacobian();
  const auto after_j = sample<double>(q, Vector::Ones(4), Vector::Ones(3), noisy_j);
  EXPECT_EQ(after_j.s, reference.s);
  EXPECT_NE(after_j.J, reference.J);
}

TEST(TrueValues, IdentityInnerGivesOuterGradient) {
  const Vector c = Vector::LinSpaced(3, -1, 1);
  auto q = SyntheticQuadratic<double>::identity(c, FeasibleSet<double>::full_space(3));
  const Vector x = Vector::Constant(3, 0.25);
  const auto t = true_values<double>(q, x);
  EXPECT_EQ(t.grad_F, q.outer_gradient(x));
  EXPECT_EQ(t.grad_g, Matrix::Identity(3, 3));
  q.set_noise(NoiseLevels<double>::uniform(1.0));
  auto streams = OracleStreams::at(1, 0, 0);
  const auto smp = sample<double>(q, x, x, streams);
  EXPECT_EQ(smp.G, x);
  EXPECT_EQ(smp.J, Matrix::Identity(3, 3));
}

TEST(TrueValues, QuadraticChainRule) {
  auto q = small_quadratic();
  const Vector x = Vector::LinSpaced(4, 0.1, 0.7);
  const auto t = true_values<double>(q, x);
  const Vector expected = q.A().transpose() * (q.A() * x + q.b());
  EXPECT_LT((t.grad_F - expected).norm(), 1e-14);
  EXPECT_NEAR(t.F, 0.5 * (q.A() * x + q.b()).squaredNorm(), 1e-14);
}

TEST(Lipschitz, CompositionRule) {
  Lipschitz<double> lip;
  lip.g = 2;
  lip.grad_f = 3;
  EXPECT_EQ(lip.grad_F(), 12);
  lip.grad_g = 0.5;
  EXPECT_THROW(lip.grad_F(), std::logic_error);
  lip.f = 4;
  EXPECT_EQ(lip.grad_F(), 14);
}

TEST(Spec, DeclaredSigmas) {
  auto q = small_quadratic();
  q.set_noise({0.1, 0.2, 0.3});
  const auto spec = q.spec();
  EXPECT_EQ(spec.n, 4);
  EXPECT_EQ(spec.m, 3);
  EXPECT_NEAR(spec.sigma_G, 0.1 * std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(spec.sigma_J, 0.2 * std::sqrt(12.0), 1e-15);
  EXPECT_NEAR(spec.sigma_s, 0.3 * std::sqrt(3.0), 1e-15);
  ASSERT_TRUE(spec.lipschitz);
}

}  // namespace
}  // namespace nestopt
