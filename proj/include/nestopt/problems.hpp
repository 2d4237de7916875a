#ifndef NESTOPT_PROBLEMS_HPP
#define NESTOPT_PROBLEMS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nestopt/geometry.hpp"
#include "nestopt/oracle.hpp"

namespace nestopt {

namespace detail {

inline Rng instance_rng(std::uint64_t seed) { return Rng(splitmix64(seed ^ 0x5eedULL)); }

template <typename Scalar>
Scalar spectral_norm(const Mat<Scalar>& A) {
  if (A.size() == 0) return Scalar(0);
  Eigen::JacobiSVD<Mat<Scalar>> svd(A);
  return svd.singularValues()(0);
}

// Random matrix with orthonormal columns (rows x cols, rows >= cols) whose
// leading column is `lead` when given.
template <typename Scalar>
Mat<Scalar> orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                const Vec<Scalar>* lead = nullptr) {
  Mat<Scalar> raw = gaussian_matrix<Scalar>(rows, cols, Scalar(1), rng);
  if (lead != nullptr && lead->norm() > Scalar(0)) raw.col(0) = *lead;
  Eigen::HouseholderQR<Mat<Scalar>> qr(raw);
  Mat<Scalar> Q = qr.householderQ() * Mat<Scalar>::Identity(rows, cols);
  // Fix signs so the leading column points along `lead`.
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (qr.matrixQR()(j, j) < Scalar(0)) Q.col(j) = -Q.col(j);
  }
  return Q;
}

template <typename Scalar>
Vec<Scalar> uniform_vector(Eigen::Index size, Scalar lo, Scalar hi, Rng& rng) {
  std::uniform_real_distribution<Scalar> dist(lo, hi);
  Vec<Scalar> out(size);
  for (Eigen::Index i = 0; i < size; ++i) out[i] = dist(rng);
  return out;
}

}  // namespace detail

// A point x* of a set together with a vector v such that -v lies in the
// normal cone at x*. Used to build instances with certified solutions.
template <typename Scalar>
struct StationaryCertificate {
  Vec<Scalar> point;
  Vec<Scalar> normal;  // -normal is in N_X(point)
};

/// Draws x* in the set and a unit v with -v in N_X(x*). For sets with a
/// boundary the point is placed on it so the constraint is active.
template <typename Scalar>
StationaryCertificate<Scalar> random_certificate(const FeasibleSet<Scalar>& set, Rng& rng) {
  const Eigen::Index n = set.dim();
  StationaryCertificate<Scalar> cert;
  switch (set.kind()) {
    case SetKind::kFullSpace:
      cert.point = gaussian_vector<Scalar>(n, Scalar(1), rng);
      cert.normal = Vec<Scalar>::Zero(n);
      break;
    case SetKind::kBall: {
      const auto& ball = *set.as_ball();
      Vec<Scalar> dir = gaussian_vector<Scalar>(n, Scalar(1), rng);
      dir.normalize();
      cert.point = ball.center + ball.radius * dir;
      cert.normal = -dir;
      break;
    }
    case SetKind::kBox: {
      const auto& box = *set.as_box();
      cert.point = Vec<Scalar>(n);
      cert.normal = Vec<Scalar>::Zero(n);
      std::uniform_real_distribution<Scalar> unit(Scalar(0), Scalar(1));
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar r = unit(rng);
        if (r < Scalar(0.3)) {
          cert.point[i] = box.lower[i];
          cert.normal[i] = Scalar(0.5) + unit(rng);  // v_i > 0 at a lower bound
        } else if (r < Scalar(0.6)) {
          cert.point[i] = box.upper[i];
          cert.normal[i] = -(Scalar(0.5) + unit(rng));
        } else {
          cert.point[i] = box.lower[i] + (Scalar(0.2) + Scalar(0.6) * unit(rng)) *
                                             (box.upper[i] - box.lower[i]);
        }
      }
      if (cert.normal.norm() > Scalar(0)) cert.normal.normalize();
      break;
    }
    case SetKind::kSimplex: {
      cert.point = Vec<Scalar>::Zero(n);
      cert.normal = Vec<Scalar>::Zero(n);
      const Eigen::Index support = std::max<Eigen::Index>(1, n / 2);
      Vec<Scalar> w = detail::uniform_vector<Scalar>(support, Scalar(0.5), Scalar(1.5), rng);
      cert.point.head(support) = w / w.sum();
      if (support < n) {
        cert.normal.tail(n - support) =
            detail::uniform_vector<Scalar>(n - support, Scalar(0.5), Scalar(1.5), rng);
        cert.normal.normalize();
      }
      break;
    }
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Synthetic quadratic: f(u) = 0.5 ||u - c||^2, g(x) = A x + b.

template <typename Scalar>
class SyntheticQuadratic : public CompositeProblem<Scalar> {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  SyntheticQuadratic(Matrix A, Vector b, Vector c, FeasibleSet<Scalar> set)
      : A_(std::move(A)), b_(std::move(b)), c_(std::move(c)), set_(std::move(set)) {
    if (A_.cols() != set_.dim() || A_.rows() != b_.size() || b_.size() != c_.size()) {
      throw std::invalid_argument("SyntheticQuadratic: inconsistent dimensions");
    }
    lip_g_ = detail::spectral_norm(A_);
    if (set_.kind() == SetKind::kFullSpace) {
      minimizer_ = A_.completeOrthogonalDecomposition().solve(c_ - b_);
      optimal_value_ = this->objective(*minimizer_);
    }
  }

  /// g = identity, f(x) = 0.5 ||x - c||^2; the minimizer is the projection of c.
  static SyntheticQuadratic identity(Vector c, FeasibleSet<Scalar> set) {
    const Eigen::Index n = c.size();
    SyntheticQuadratic q(Matrix::Identity(n, n), Vector::Zero(n), std::move(c), std::move(set));
    q.identity_ = true;
    q.minimizer_ = q.set_.project(q.c_);
    q.optimal_value_ = q.objective(*q.minimizer_);
    return q;
  }

  /// Attaches a known minimizer (the problem is convex, so a stationary
  /// point is global).
  void certify(Vector minimizer) {
    optimal_value_ = this->objective(minimizer);
    minimizer_ = std::move(minimizer);
  }

  Eigen::Index n() const override { return A_.cols(); }
  Eigen::Index m() const override { return A_.rows(); }
  const FeasibleSet<Scalar>& set() const override { return set_; }

  Vector inner_value(const Vector& x) const override { return A_ * x + b_; }
  Matrix inner_jacobian(const Vector&) const override { return A_; }
  Scalar outer_value(const Vector& u) const override {
    return Scalar(0.5) * (u - c_).squaredNorm();
  }
  Vector outer_gradient(const Vector& u) const override { return u - c_; }

  Vector sample_inner_value(const Vector& x, Rng& rng) const override {
    if (identity_) return x;
    return CompositeProblem<Scalar>::sample_inner_value(x, rng);
  }
  Matrix sample_inner_jacobian(const Vector& x, Rng& rng) const override {
    if (identity_) return Matrix::Identity(n(), n());
    return CompositeProblem<Scalar>::sample_inner_jacobian(x, rng);
  }

  OracleSpec<Scalar> spec() const override {
    auto out = CompositeProblem<Scalar>::spec();
    if (identity_) {
      out.sigma_G = 0;
      out.sigma_J = 0;
    }
    return out;
  }

  std::optional<Lipschitz<Scalar>> lipschitz() const override {
    Lipschitz<Scalar> lip;
    lip.g = lip_g_;
    lip.grad_f = 1;
    lip.grad_g = 0;
    return lip;
  }
  std::optional<Scalar> optimal_value() const override { return optimal_value_; }
  std::optional<Vector> minimizer() const override { return minimizer_; }
  bool identity_inner() const override { return identity_; }

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  const Vector& c() const { return c_; }

 private:
  Matrix A_;
  Vector b_;
  Vector c_;
  FeasibleSet<Scalar> set_;
  Scalar lip_g_ = 0;
  bool identity_ = false;
  std::optional<Vector> minimizer_;
  std::optional<Scalar> optimal_value_;
};

/// Random instance with singular values of A all equal to one and a
/// certified minimizer. When the set has a boundary the constraint is active
/// at the solution and grad F(x*) has unit norm.
template <typename Scalar>
SyntheticQuadratic<Scalar> make_quadratic(Eigen::Index n, Eigen::Index m,
                                          FeasibleSet<Scalar> set, std::uint64_t seed) {
  if (n <= 0 || m <= 0 || set.dim() != n) {
    throw std::invalid_argument("make_quadratic: invalid dimensions");
  }
  Rng rng = detail::instance_rng(seed);
  const auto cert = random_certificate(set, rng);
  Mat<Scalar> A;
  if (m <= n) {
    A = detail::orthonormal_columns<Scalar>(n, m, rng, &cert.normal).transpose();
  } else {
    A = detail::orthonormal_columns<Scalar>(m, n, rng);
  }
  const Vec<Scalar> b = gaussian_vector<Scalar>(m, Scalar(1), rng);
  // grad F(x*) = A^T (A x* + b - c) = A^T A v = v.
  const Vec<Scalar> w = A * cert.normal;
  const Vec<Scalar> c = A * cert.point + b - w;
  SyntheticQuadratic<Scalar> q(A, b, c, std::move(set));
  q.certify(cert.point);
  return q;
}

/// Identity-inner instance f(x) = 0.5 ||x - c||^2 whose minimizer is a
/// random certified point of the set.
template <typename Scalar>
SyntheticQuadratic<Scalar> make_identity_quadratic(FeasibleSet<Scalar> set, std::uint64_t seed) {
  Rng rng = detail::instance_rng(seed);
  const auto cert = random_certificate(set, rng);
  // grad F(x*) = x* - c = v.
  Vec<Scalar> c = cert.point - cert.normal;
  return SyntheticQuadratic<Scalar>::identity(std::move(c), std::move(set));
}

// ---------------------------------------------------------------------------
// Stochastic variational inequality through the lifted gap function.

template <typename Scalar>
struct GapEvaluation {
  Scalar value;
  Vec<Scalar> grad_x;
  Vec<Scalar> grad_h;
};

/// f(x, h) = max_{xi in X} <h, xi - x> - 0.5 ||xi - x||^2 and its gradient.
/// The maximizer is xi* = proj(x + h).
template <typename Scalar>
GapEvaluation<Scalar> gap_function_value_grad(const FeasibleSet<Scalar>& set,
                                              const Vec<Scalar>& x, const Vec<Scalar>& h) {
  if (x.size() != set.dim() || h.size() != set.dim()) {
    throw std::invalid_argument("gap_function_value_grad: dimension mismatch");
  }
  const Vec<Scalar> step = set.project(x + h) - x;
  GapEvaluation<Scalar> out;
  out.value = h.dot(step) - Scalar(0.5) * step.squaredNorm();
  out.grad_h = step;
  out.grad_x = step - h;
  return out;
}

/// Lipschitz constant of the gradient of the lifted gap function, valid for
/// every closed convex X: sqrt(2 + (1 + sqrt 2)^2).
template <typename Scalar>
Scalar gap_gradient_lipschitz() {
  using std::sqrt;
  const Scalar r2 = sqrt(Scalar(2));
  return sqrt(Scalar(2) + (Scalar(1) + r2) * (Scalar(1) + r2));
}

/// Find x in X with <E[H(x)], xi - x> <= 0 for all xi in X, where the mean
/// map is affine, E[H(x)] = M x + q. g(x) = (x, E[H(x)]) is sampled; grad f
/// is exact.
template <typename Scalar>
class SviProblem : public CompositeProblem<Scalar> {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  SviProblem(Matrix M, Vector q, FeasibleSet<Scalar> set)
      : M_(std::move(M)), q_(std::move(q)), set_(std::move(set)) {
    if (M_.rows() != M_.cols() || M_.rows() != q_.size() || q_.size() != set_.dim()) {
      throw std::invalid_argument("SviProblem: inconsistent dimensions");
    }
    using std::sqrt;
    const Scalar norm_M = detail::spectral_norm(M_);
    lip_g_ = sqrt(Scalar(1) + norm_M * norm_M);
    if (set_.kind() == SetKind::kFullSpace) {
      const auto lu = M_.fullPivLu();
      if (lu.isInvertible()) certify(lu.solve(-q_));
    }
  }

  void certify(Vector solution) { solution_ = std::move(solution); }

  Eigen::Index n() const override { return set_.dim(); }
  Eigen::Index m() const override { return 2 * set_.dim(); }
  const FeasibleSet<Scalar>& set() const override { return set_; }

  Vector mean_map(const Vector& x) const { return M_ * x + q_; }

  Vector inner_value(const Vector& x) const override {
    Vector g(m());
    g << x, mean_map(x);
    return g;
  }
  Matrix inner_jacobian(const Vector&) const override {
    Matrix J(m(), n());
    J << Matrix::Identity(n(), n()), M_;
    return J;
  }
  Scalar outer_value(const Vector& u) const override {
    return gap_function_value_grad(set_, Vector(u.head(n())), Vector(u.tail(n()))).value;
  }
  Vector outer_gradient(const Vector& u) const override {
    const auto gap = gap_function_value_grad(set_, Vector(u.head(n())), Vector(u.tail(n())));
    Vector grad(m());
    grad << gap.grad_x, gap.grad_h;
    return grad;
  }

  // Only the H part of g and its Jacobian are random.
  Vector sample_inner_value(const Vector& x, Rng& rng) const override {
    Vector g = inner_value(x);
    if (this->noise_.G != Scalar(0)) g.tail(n()) += gaussian_vector<Scalar>(n(), this->noise_.G, rng);
    return g;
  }
  Matrix sample_inner_jacobian(const Vector& x, Rng& rng) const override {
    Matrix J = inner_jacobian(x);
    if (this->noise_.J != Scalar(0)) {
      J.bottomRows(n()) += gaussian_matrix<Scalar>(n(), n(), this->noise_.J, rng);
    }
    return J;
  }
  Vector sample_outer_gradient(const Vector& u, Rng&) const override {
    return outer_gradient(u);
  }

  OracleSpec<Scalar> spec() const override {
    using std::sqrt;
    auto out = CompositeProblem<Scalar>::spec();
    out.sigma_G = this->noise_.G * sqrt(Scalar(n()));
    out.sigma_J = this->noise_.J * Scalar(n());
    out.sigma_s = 0;
    return out;
  }

  std::optional<Lipschitz<Scalar>> lipschitz() const override {
    Lipschitz<Scalar> lip;
    lip.g = lip_g_;
    lip.grad_f = gap_gradient_lipschitz<Scalar>();
    lip.grad_g = 0;
    return lip;
  }
  std::optional<Scalar> optimal_value() const override {
    if (solution_) return Scalar(0);
    return std::nullopt;
  }
  std::optional<Vector> minimizer() const override { return solution_; }

  const Matrix& M() const { return M_; }
  const Vector& q() const { return q_; }

 private:
  Matrix M_;
  Vector q_;
  FeasibleSet<Scalar> set_;
  Scalar lip_g_ = 0;
  std::optional<Vector> solution_;
};

/// Lifted gap F(x) = f(x, E[H(x)]) >= 0; zero exactly at solutions.
template <typename Scalar>
Scalar svi_residual(const SviProblem<Scalar>& problem, const Vec<Scalar>& x) {
  return problem.objective(x);
}

/// Strongly monotone instance (in the "<=" convention: -M has positive
/// definite symmetric part) with a known solution. When the set has a
/// boundary the solution lies on it with a nonzero normal component.
template <typename Scalar>
SviProblem<Scalar> make_svi(FeasibleSet<Scalar> set, std::uint64_t seed) {
  const Eigen::Index n = set.dim();
  Rng rng = detail::instance_rng(seed);
  const auto cert = random_certificate(set, rng);
  const Mat<Scalar> Q = detail::orthonormal_columns<Scalar>(n, n, rng);
  const Vec<Scalar> spectrum = detail::uniform_vector<Scalar>(n, Scalar(0.5), Scalar(1), rng);
  const Mat<Scalar> sym = Q * spectrum.asDiagonal() * Q.transpose();
  const Mat<Scalar> raw = gaussian_matrix<Scalar>(n, n, Scalar(0.3) / std::sqrt(Scalar(n)), rng);
  const Mat<Scalar> skew = raw - raw.transpose();
  const Mat<Scalar> M = -(sym + skew);
  // E[H(x*)] = -normal lies in N_X(x*).
  const Vec<Scalar> q = -cert.normal - M * cert.point;
  SviProblem<Scalar> problem(M, q, std::move(set));
  problem.certify(cert.point);
  return problem;
}

// ---------------------------------------------------------------------------
// Policy evaluation: min_w || S (Phi w - r - gamma E[Phat] Phi w) ||^2.

template <typename Scalar>
class PolicyEvalProblem : public CompositeProblem<Scalar> {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  PolicyEvalProblem(Matrix P, Vector r, Scalar gamma, Matrix Phi, Matrix S)
      : P_(std::move(P)), r_(std::move(r)), gamma_(gamma), Phi_(std::move(Phi)),
        S_(std::move(S)), set_(FeasibleSet<Scalar>::full_space(Phi_.cols())) {
    const Eigen::Index states = P_.rows();
    if (P_.cols() != states || r_.size() != states || Phi_.rows() != states ||
        S_.cols() != states) {
      throw std::invalid_argument("PolicyEvalProblem: inconsistent dimensions");
    }
    if (!(gamma_ >= Scalar(0) && gamma_ < Scalar(1))) {
      throw std::invalid_argument("PolicyEvalProblem: discount must lie in [0, 1)");
    }
    if ((P_.array() < Scalar(0)).any() ||
        ((P_.rowwise().sum().array() - Scalar(1)).abs() > Scalar(1e-9)).any()) {
      throw std::invalid_argument("PolicyEvalProblem: P must be row-stochastic");
    }
    cumulative_ = P_;
    for (Eigen::Index i = 0; i < states; ++i) {
      for (Eigen::Index j = 1; j < states; ++j) cumulative_(i, j) += cumulative_(i, j - 1);
      cumulative_(i, states - 1) = Scalar(1);
    }
    B_ = S_ * (Matrix::Identity(states, states) - gamma_ * P_) * Phi_;
    Sr_ = S_ * r_;
    lip_g_ = detail::spectral_norm(B_);
    w_star_ = B_.completeOrthogonalDecomposition().solve(Sr_);
    f_star_ = this->objective(w_star_);
  }

  Eigen::Index states() const { return P_.rows(); }
  Eigen::Index n() const override { return Phi_.cols(); }
  Eigen::Index m() const override { return S_.rows(); }
  const FeasibleSet<Scalar>& set() const override { return set_; }

  Vector inner_value(const Vector& w) const override { return B_ * w - Sr_; }
  Matrix inner_jacobian(const Vector&) const override { return B_; }
  Scalar outer_value(const Vector& u) const override { return u.squaredNorm(); }
  Vector outer_gradient(const Vector& u) const override { return Scalar(2) * u; }

  /// One simulated next state per state: row i of Phat is e_{next[i]}.
  std::vector<Eigen::Index> sample_transitions(Rng& rng) const {
    std::uniform_real_distribution<Scalar> unit(Scalar(0), Scalar(1));
    std::vector<Eigen::Index> next(static_cast<std::size_t>(states()));
    for (Eigen::Index i = 0; i < states(); ++i) {
      const Scalar draw = unit(rng);
      // First column whose cumulative probability exceeds the draw.
      Eigen::Index lo = 0, hi = states() - 1;
      while (lo < hi) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (cumulative_(i, mid) > draw) hi = mid; else lo = mid + 1;
      }
      next[static_cast<std::size_t>(i)] = lo;
    }
    return next;
  }

  Matrix sample_transition_matrix(Rng& rng) const {
    const auto next = sample_transitions(rng);
    Matrix Phat = Matrix::Zero(states(), states());
    for (Eigen::Index i = 0; i < states(); ++i) Phat(i, next[static_cast<std::size_t>(i)]) = 1;
    return Phat;
  }

  Vector sample_inner_value(const Vector& w, Rng& rng) const override {
    const auto next = sample_transitions(rng);
    const Vector values = Phi_ * w;
    Vector residual = values - r_;
    for (Eigen::Index i = 0; i < states(); ++i) {
      residual[i] -= gamma_ * values[next[static_cast<std::size_t>(i)]];
    }
    Vector G = S_ * residual;
    if (this->noise_.G != Scalar(0)) G += gaussian_vector<Scalar>(m(), this->noise_.G, rng);
    return G;
  }

  Matrix sample_inner_jacobian(const Vector&, Rng& rng) const override {
    const auto next = sample_transitions(rng);
    Matrix inner = Phi_;
    for (Eigen::Index i = 0; i < states(); ++i) {
      inner.row(i) -= gamma_ * Phi_.row(next[static_cast<std::size_t>(i)]);
    }
    Matrix J = S_ * inner;
    if (this->noise_.J != Scalar(0)) J += gaussian_matrix<Scalar>(m(), n(), this->noise_.J, rng);
    return J;
  }

  std::optional<Lipschitz<Scalar>> lipschitz() const override {
    Lipschitz<Scalar> lip;
    lip.g = lip_g_;
    lip.grad_f = 2;
    lip.grad_g = 0;
    return lip;
  }
  std::optional<Scalar> optimal_value() const override { return f_star_; }
  std::optional<Vector> minimizer() const override { return w_star_; }

  const Vector& solution() const { return w_star_; }
  const Matrix& transition() const { return P_; }
  const Matrix& features() const { return Phi_; }
  const Matrix& sketch() const { return S_; }
  const Vector& reward() const { return r_; }
  Scalar discount() const { return gamma_; }

 private:
  Matrix P_;
  Vector r_;
  Scalar gamma_;
  Matrix Phi_;
  Matrix S_;
  FeasibleSet<Scalar> set_;
  Matrix cumulative_;
  Matrix B_;
  Vector Sr_;
  Scalar lip_g_ = 0;
  Vector w_star_;
  Scalar f_star_ = 0;
};

/// Random chain with dense row-stochastic P, orthonormal features and a
/// Gaussian sketch with `sketch_rows` rows. The default of 4 |X| rows makes
/// S^T S close to the identity, so the sketched residual tracks the plain one.
template <typename Scalar>
PolicyEvalProblem<Scalar> build_policy_eval(Eigen::Index states, Eigen::Index d, Scalar gamma,
                                            std::uint64_t seed, Eigen::Index sketch_rows = 0) {
  if (!(gamma > Scalar(0) && gamma < Scalar(1))) {
    throw std::invalid_argument("build_policy_eval: discount must lie in (0, 1)");
  }
  if (d <= 0 || d > states) {
    throw std::invalid_argument("build_policy_eval: need 0 < d <= states");
  }
  if (sketch_rows <= 0) sketch_rows = 4 * states;
  Rng rng = detail::instance_rng(seed);
  Mat<Scalar> P(states, states);
  std::exponential_distribution<Scalar> expo(Scalar(1));
  for (Eigen::Index i = 0; i < states; ++i) {
    for (Eigen::Index j = 0; j < states; ++j) P(i, j) = expo(rng);
    P.row(i) /= P.row(i).sum();
  }
  const Vec<Scalar> r = detail::uniform_vector<Scalar>(states, Scalar(0), Scalar(1), rng);
  const Mat<Scalar> Phi = detail::orthonormal_columns<Scalar>(states, d, rng);
  using std::sqrt;
  const Mat<Scalar> S =
      gaussian_matrix<Scalar>(sketch_rows, states, Scalar(1) / sqrt(Scalar(sketch_rows)), rng);
  return PolicyEvalProblem<Scalar>(P, r, gamma, Phi, S);
}

// ---------------------------------------------------------------------------
// Low-rank estimation: min_{(U,V) in ball} || E[X] - U V^T ||_F^2.

template <typename Scalar>
class LowRankProblem : public CompositeProblem<Scalar> {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  LowRankProblem(Matrix target, Eigen::Index rank, Scalar radius)
      : target_(std::move(target)), rank_(rank),
        set_(FeasibleSet<Scalar>::ball(2 * target_.rows() * rank, radius)) {
    if (target_.rows() != target_.cols() || rank_ <= 0 || rank_ >= target_.rows()) {
      throw std::invalid_argument("LowRankProblem: need square target and 0 < k < n");
    }
    start_ = Vector::Zero(set_.dim());
  }

  Eigen::Index size() const { return target_.rows(); }
  Eigen::Index rank() const { return rank_; }
  Scalar radius() const { return set_.as_ball()->radius; }

  Eigen::Index n() const override { return set_.dim(); }
  Eigen::Index m() const override { return size() * size(); }
  const FeasibleSet<Scalar>& set() const override { return set_; }

  /// x = [vec(U); vec(V)], column-major.
  Matrix factor_u(const Vector& x) const {
    return Eigen::Map<const Matrix>(x.data(), size(), rank_);
  }
  Matrix factor_v(const Vector& x) const {
    return Eigen::Map<const Matrix>(x.data() + size() * rank_, size(), rank_);
  }
  Vector join(const Matrix& U, const Matrix& V) const {
    Vector x(n());
    Eigen::Map<Matrix>(x.data(), size(), rank_) = U;
    Eigen::Map<Matrix>(x.data() + size() * rank_, size(), rank_) = V;
    return x;
  }

  Vector inner_value(const Vector& x) const override {
    const Matrix residual = target_ - factor_u(x) * factor_v(x).transpose();
    return Eigen::Map<const Vector>(residual.data(), m());
  }

  Matrix inner_jacobian(const Vector& x) const override {
    const Matrix U = factor_u(x);
    const Matrix V = factor_v(x);
    const Eigen::Index p = size();
    Matrix J = Matrix::Zero(m(), n());
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::Index row = i + p * j;
        for (Eigen::Index l = 0; l < rank_; ++l) {
          J(row, i + p * l) = -V(j, l);
          J(row, p * rank_ + j + p * l) = -U(i, l);
        }
      }
    }
    return J;
  }

  Scalar outer_value(const Vector& u) const override { return u.squaredNorm(); }
  Vector outer_gradient(const Vector& u) const override { return Scalar(2) * u; }

  std::optional<Lipschitz<Scalar>> lipschitz() const override {
    Lipschitz<Scalar> lip;
    const Scalar rho = radius();
    lip.g = rho;
    lip.grad_g = 1;
    lip.f = Scalar(2) * (target_.norm() + Scalar(0.5) * rho * rho);
    lip.grad_f = 2;
    return lip;
  }
  std::optional<Scalar> optimal_value() const override { return optimal_value_; }
  std::optional<Vector> minimizer() const override { return minimizer_; }

  Vector initial_point() const override { return start_; }
  void set_initial_point(Vector x) { start_ = set_.project(x); }

  void certify(Vector minimizer) {
    optimal_value_ = this->objective(minimizer);
    minimizer_ = std::move(minimizer);
  }

  const Matrix& target() const { return target_; }

 private:
  Matrix target_;
  Eigen::Index rank_;
  FeasibleSet<Scalar> set_;
  Vector start_;
  std::optional<Vector> minimizer_;
  std::optional<Scalar> optimal_value_;
};

/// Exactly rank-k target U0 V0^T, ball radius twice ||(U0, V0)||, and a
/// random start of norm radius / 4.
template <typename Scalar>
LowRankProblem<Scalar> make_low_rank(Eigen::Index size, Eigen::Index rank, std::uint64_t seed) {
  if (size <= 1 || rank <= 0 || rank >= size) {
    throw std::invalid_argument("make_low_rank: need 0 < k < n");
  }
  Rng rng = detail::instance_rng(seed);
  using std::sqrt;
  const Scalar scale = Scalar(1) / sqrt(sqrt(Scalar(size * rank)));
  const Mat<Scalar> U0 = gaussian_matrix<Scalar>(size, rank, scale, rng);
  const Mat<Scalar> V0 = gaussian_matrix<Scalar>(size, rank, scale, rng);
  const Scalar pair_norm = sqrt(U0.squaredNorm() + V0.squaredNorm());
  LowRankProblem<Scalar> problem(U0 * V0.transpose(), rank, Scalar(2) * pair_norm);
  problem.certify(problem.join(U0, V0));
  Vec<Scalar> start = gaussian_vector<Scalar>(problem.n(), Scalar(1), rng);
  start *= problem.radius() / (Scalar(4) * start.norm());
  problem.set_initial_point(start);
  return problem;
}

}  // namespace nestopt

#endif  // NESTOPT_PROBLEMS_HPP
