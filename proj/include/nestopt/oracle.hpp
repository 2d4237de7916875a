#ifndef NESTOPT_ORACLE_HPP
#define NESTOPT_ORACLE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "nestopt/geometry.hpp"

namespace nestopt {

/// SplitMix64 as a standard uniform random bit generator. Seeding is free,
/// so a fresh stream per (seed, replication, iteration, tag) costs nothing.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  bool operator==(const SplitMix64&) const = default;

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

enum class StreamTag : std::uint64_t {
  kValue = 1,     // G samples
  kJacobian = 2,  // J samples
  kGradient = 3,  // s samples
  kOutputIndex = 4,
  kInitial = 5,
};

/// Identifies one independent random stream.
struct StreamKey {
  std::uint64_t base_seed = 0;
  std::uint64_t replication = 0;
  std::int64_t iteration = 0;
  StreamTag tag = StreamTag::kValue;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) { return SplitMix64(x)(); }

}  // namespace detail

inline Rng make_stream(const StreamKey& key) {
  std::uint64_t h = detail::splitmix64(key.base_seed);
  h = detail::splitmix64(h ^ key.replication);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(key.iteration));
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(key.tag));
  return Rng(h);
}

/// The three per-iteration streams. s and J never share state.
struct OracleStreams {
  Rng value;
  Rng jacobian;
  Rng gradient;

  static OracleStreams at(std::uint64_t base_seed, std::uint64_t replication,
                          std::int64_t iteration) {
    return {make_stream({base_seed, replication, iteration, StreamTag::kValue}),
            make_stream({base_seed, replication, iteration, StreamTag::kJacobian}),
            make_stream({base_seed, replication, iteration, StreamTag::kGradient})};
  }
};

template <typename Scalar>
struct OracleSample {
  Vec<Scalar> G;  // sample of g(x), size m
  Mat<Scalar> J;  // sample of grad g(x), m x n
  Vec<Scalar> s;  // sample of grad f(u), size m
};

/// Lipschitz constants of f, g and their derivatives. L_f is only needed
/// when g is nonlinear.
template <typename Scalar>
struct Lipschitz {
  std::optional<Scalar> f;
  Scalar g = 0;
  Scalar grad_f = 0;
  Scalar grad_g = 0;

  /// L_{grad F} = L_g^2 L_{grad f} + L_f L_{grad g}.
  Scalar grad_F() const {
    Scalar value = g * g * grad_f;
    if (grad_g != Scalar(0)) {
      if (!f) throw std::logic_error("Lipschitz: L_f required when L_grad_g > 0");
      value += *f * grad_g;
    }
    return value;
  }
};

/// Declared oracle metadata. sigma_* are root expected squared deviations of
/// the samples from their means.
template <typename Scalar>
struct OracleSpec {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Scalar sigma_G = 0;
  Scalar sigma_J = 0;
  Scalar sigma_s = 0;
  std::optional<Lipschitz<Scalar>> lipschitz;
};

/// Standard deviations of the additive entrywise Gaussian noise model.
template <typename Scalar>
struct NoiseLevels {
  Scalar G = 0;
  Scalar J = 0;
  Scalar s = 0;

  static NoiseLevels uniform(Scalar sd) { return {sd, sd, sd}; }
};

template <typename Scalar>
Vec<Scalar> gaussian_vector(Eigen::Index size, Scalar sd, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Vec<Scalar> out(size);
  for (Eigen::Index i = 0; i < size; ++i) out[i] = sd * normal(rng);
  return out;
}

template <typename Scalar>
Mat<Scalar> gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Scalar sd, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Mat<Scalar> out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = sd * normal(rng);
  return out;
}

/// A composite problem min_{x in X} f(g(x)) with f: R^m -> R, g: R^n -> R^m.
///
/// Subclasses provide the exact quantities (used only by diagnostics and
/// tests) and may override the samplers. The default samplers add
/// independent Gaussian noise with the configured standard deviations.
template <typename Scalar>
class CompositeProblem {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  virtual ~CompositeProblem() = default;

  virtual Eigen::Index n() const = 0;
  virtual Eigen::Index m() const = 0;
  virtual const FeasibleSet<Scalar>& set() const = 0;

  virtual Vector inner_value(const Vector& x) const = 0;
  virtual Matrix inner_jacobian(const Vector& x) const = 0;
  virtual Scalar outer_value(const Vector& u) const = 0;
  virtual Vector outer_gradient(const Vector& u) const = 0;

  virtual std::optional<Lipschitz<Scalar>> lipschitz() const { return std::nullopt; }
  virtual std::optional<Scalar> optimal_value() const { return std::nullopt; }
  virtual std::optional<Vector> minimizer() const { return std::nullopt; }

  /// True when g is the identity map (then m == n, G = x and J = I exactly).
  virtual bool identity_inner() const { return false; }

  virtual Vector initial_point() const { return set().project(Vector::Zero(n())); }

  const NoiseLevels<Scalar>& noise() const { return noise_; }
  void set_noise(const NoiseLevels<Scalar>& noise) { noise_ = noise; }

  virtual Vector sample_inner_value(const Vector& x, Rng& rng) const {
    Vector g = inner_value(x);
    if (noise_.G != Scalar(0)) g += gaussian_vector<Scalar>(g.size(), noise_.G, rng);
    return g;
  }

  virtual Matrix sample_inner_jacobian(const Vector& x, Rng& rng) const {
    Matrix J = inner_jacobian(x);
    if (noise_.J != Scalar(0)) J += gaussian_matrix<Scalar>(J.rows(), J.cols(), noise_.J, rng);
    return J;
  }

  virtual Vector sample_outer_gradient(const Vector& u, Rng& rng) const {
    Vector s = outer_gradient(u);
    if (noise_.s != Scalar(0)) s += gaussian_vector<Scalar>(s.size(), noise_.s, rng);
    return s;
  }

  virtual OracleSpec<Scalar> spec() const {
    using std::sqrt;
    OracleSpec<Scalar> out;
    out.n = n();
    out.m = m();
    out.sigma_G = noise_.G * sqrt(Scalar(m()));
    out.sigma_J = noise_.J * sqrt(Scalar(m() * n()));
    out.sigma_s = noise_.s * sqrt(Scalar(m()));
    out.lipschitz = lipschitz();
    return out;
  }

  Scalar objective(const Vector& x) const { return outer_value(inner_value(x)); }

  Vector objective_gradient(const Vector& x) const {
    return inner_jacobian(x).transpose() * outer_gradient(inner_value(x));
  }

 protected:
  NoiseLevels<Scalar> noise_;
};

/// One oracle call: s at u from the gradient stream, G and J at x from their
/// own streams.
template <typename Scalar>
OracleSample<Scalar> sample(const CompositeProblem<Scalar>& problem, const Vec<Scalar>& x,
                            const Vec<Scalar>& u, OracleStreams& streams) {
  if (x.size() != problem.n() || u.size() != problem.m()) {
    throw std::invalid_argument("sample: dimension mismatch");
  }
  OracleSample<Scalar> out;
  out.G = problem.sample_inner_value(x, streams.value);
  out.J = problem.sample_inner_jacobian(x, streams.jacobian);
  out.s = problem.sample_outer_gradient(u, streams.gradient);
  return out;
}

template <typename Scalar>
struct TrueValues {
  Vec<Scalar> g;
  Mat<Scalar> grad_g;
  Scalar F;
  Vec<Scalar> grad_F;
};

/// Exact g, grad g, F and grad F = grad g^T grad f(g). Diagnostics only.
template <typename Scalar>
TrueValues<Scalar> true_values(const CompositeProblem<Scalar>& problem, const Vec<Scalar>& x) {
  if (x.size() != problem.n()) throw std::invalid_argument("true_values: dimension mismatch");
  TrueValues<Scalar> out;
  out.g = problem.inner_value(x);
  out.grad_g = problem.inner_jacobian(x);
  out.F = problem.outer_value(out.g);
  out.grad_F = out.grad_g.transpose() * problem.outer_gradient(out.g);
  return out;
}

}  // namespace nestopt

#endif  // NESTOPT_ORACLE_HPP
