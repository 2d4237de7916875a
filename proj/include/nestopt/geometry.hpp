#ifndef NESTOPT_GEOMETRY_HPP
#define NESTOPT_GEOMETRY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>

#include "nestopt/errors.hpp"

namespace nestopt {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Iterates are produced by projections and convex combinations, so they are
// feasible up to roundoff. Membership checks use this Euclidean tolerance.
inline constexpr double kMembershipTolerance = 1e-12;

enum class SetKind { kFullSpace, kBox, kBall, kSimplex };

inline const char* to_string(SetKind kind) {
  switch (kind) {
    case SetKind::kFullSpace: return "full";
    case SetKind::kBox: return "box";
    case SetKind::kBall: return "ball";
    case SetKind::kSimplex: return "simplex";
  }
  return "unknown";
}

/// Closed convex set with an exact Euclidean projection.
///
/// Four shapes are supported: the whole space, a box [lower, upper], a ball
/// of positive radius, and the probability simplex {x >= 0, sum(x) = 1}.
template <typename Scalar>
class FeasibleSet {
 public:
  using Vector = Vec<Scalar>;

  struct FullSpace {};
  struct Box {
    Vector lower;
    Vector upper;
  };
  struct Ball {
    Vector center;
    Scalar radius;
  };
  struct Simplex {};

  static FeasibleSet full_space(Eigen::Index dim) {
    check_dim(dim);
    return FeasibleSet(dim, FullSpace{});
  }

  static FeasibleSet box(Vector lower, Vector upper) {
    if (lower.size() != upper.size()) {
      throw std::invalid_argument("box: lower and upper bounds differ in size");
    }
    check_dim(lower.size());
    if ((lower.array() > upper.array()).any()) {
      throw std::invalid_argument("box: lower bound exceeds upper bound");
    }
    const Eigen::Index dim = lower.size();
    return FeasibleSet(dim, Box{std::move(lower), std::move(upper)});
  }

  static FeasibleSet box(Eigen::Index dim, Scalar lower, Scalar upper) {
    check_dim(dim);
    return box(Vector::Constant(dim, lower), Vector::Constant(dim, upper));
  }

  static FeasibleSet ball(Vector center, Scalar radius) {
    check_dim(center.size());
    if (!(radius > Scalar(0))) {
      throw std::invalid_argument("ball: radius must be positive");
    }
    const Eigen::Index dim = center.size();
    return FeasibleSet(dim, Ball{std::move(center), radius});
  }

  static FeasibleSet ball(Eigen::Index dim, Scalar radius) {
    check_dim(dim);
    return ball(Vector::Zero(dim), radius);
  }

  static FeasibleSet simplex(Eigen::Index dim) {
    check_dim(dim);
    return FeasibleSet(dim, Simplex{});
  }

  Eigen::Index dim() const { return dim_; }

  SetKind kind() const {
    return static_cast<SetKind>(shape_.index());
  }

  const Box* as_box() const { return std::get_if<Box>(&shape_); }
  const Ball* as_ball() const { return std::get_if<Ball>(&shape_); }

  /// Same set with another scalar type.
  template <typename Other>
  FeasibleSet<Other> cast() const {
    using Target = FeasibleSet<Other>;
    switch (kind()) {
      case SetKind::kBox:
        return Target::box(as_box()->lower.template cast<Other>(),
                           as_box()->upper.template cast<Other>());
      case SetKind::kBall:
        return Target::ball(as_ball()->center.template cast<Other>(),
                            static_cast<Other>(as_ball()->radius));
      case SetKind::kSimplex:
        return Target::simplex(dim_);
      case SetKind::kFullSpace:
        break;
    }
    return Target::full_space(dim_);
  }

  /// argmin over the set of ||xi - p||.
  Vector project(const Vector& p) const {
    if (p.size() != dim_) {
      throw std::invalid_argument("project: dimension mismatch (" +
                                  std::to_string(p.size()) + " vs " +
                                  std::to_string(dim_) + ")");
    }
    return std::visit([&](const auto& s) { return project_onto(s, p); }, shape_);
  }

  Scalar distance(const Vector& p) const { return (project(p) - p).norm(); }

  bool contains(const Vector& p, Scalar tol = Scalar(kMembershipTolerance)) const {
    return distance(p) <= tol;
  }

 private:
  using Shape = std::variant<FullSpace, Box, Ball, Simplex>;

  FeasibleSet(Eigen::Index dim, Shape shape) : dim_(dim), shape_(std::move(shape)) {}

  static void check_dim(Eigen::Index dim) {
    if (dim <= 0) throw std::invalid_argument("feasible set: dimension must be positive");
  }

  static Vector project_onto(const FullSpace&, const Vector& p) { return p; }

  static Vector project_onto(const Box& b, const Vector& p) {
    return p.cwiseMax(b.lower).cwiseMin(b.upper);
  }

  static Vector project_onto(const Ball& b, const Vector& p) {
    const Vector offset = p - b.center;
    const Scalar norm = offset.norm();
    if (norm <= b.radius) return p;
    return b.center + (b.radius / norm) * offset;
  }

  // Sort-and-threshold: the projection is max(p - theta, 0) where theta is
  // fixed by the largest prefix of sorted entries that stays positive.
  static Vector project_onto(const Simplex&, const Vector& p) {
    Vector sorted = p;
    std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<Scalar>());
    Scalar cumulative(0);
    Scalar theta(0);
    for (Eigen::Index j = 0; j < sorted.size(); ++j) {
      cumulative += sorted[j];
      const Scalar candidate = (cumulative - Scalar(1)) / Scalar(j + 1);
      if (sorted[j] - candidate > Scalar(0)) theta = candidate;
    }
    return (p.array() - theta).cwiseMax(Scalar(0)).matrix();
  }

  Eigen::Index dim_;
  Shape shape_;
};

template <typename Scalar>
Vec<Scalar> project(const FeasibleSet<Scalar>& set, const Vec<Scalar>& p) {
  return set.project(p);
}

/// Minimizer and optimal value of  min_{y in X} <z, y - x> + (beta/2)||y - x||^2.
template <typename Scalar>
struct SubproblemSolution {
  Vec<Scalar> y;
  Scalar eta;  // optimal value, always <= 0
  Vec<Scalar> d;  // y - x
};

template <typename Scalar>
void require_feasible(const FeasibleSet<Scalar>& set, const Vec<Scalar>& x,
                      const char* who) {
  if (x.size() != set.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
  const Scalar dist = set.distance(x);
  if (!(dist <= Scalar(kMembershipTolerance))) {
    throw PreconditionError(std::string(who) + ": point is not in the feasible set");
  }
}

template <typename Scalar>
SubproblemSolution<Scalar> solve_subproblem(const FeasibleSet<Scalar>& set,
                                            const Vec<Scalar>& x,
                                            const Vec<Scalar>& z, Scalar beta) {
  if (!(beta > Scalar(0))) {
    throw std::invalid_argument("solve_subproblem: beta must be positive");
  }
  if (z.size() != set.dim()) {
    throw std::invalid_argument("solve_subproblem: dimension mismatch");
  }
  require_feasible(set, x, "solve_subproblem");
  SubproblemSolution<Scalar> sol;
  sol.y = set.project(x - z / beta);
  sol.d = sol.y - x;
  // Evaluated from the definition for every set shape.
  sol.eta = z.dot(sol.d) + Scalar(0.5) * beta * sol.d.squaredNorm();
  return sol;
}

/// Optimal value of the subproblem at (x, z) with regularization beta.
template <typename Scalar>
Scalar subproblem_value(const FeasibleSet<Scalar>& set, const Vec<Scalar>& x,
                        const Vec<Scalar>& z, Scalar beta) {
  return solve_subproblem(set, x, z, beta).eta;
}

/// V(x, z) = ||ybar(x, z, 1) - x||^2 + ||z - grad F(x)||^2.
template <typename Scalar>
Scalar optimality_measure(const FeasibleSet<Scalar>& set, const Vec<Scalar>& x,
                          const Vec<Scalar>& z, const Vec<Scalar>& grad_F) {
  if (grad_F.size() != set.dim() || z.size() != set.dim()) {
    throw std::invalid_argument("optimality_measure: dimension mismatch");
  }
  const auto sol = solve_subproblem(set, x, z, Scalar(1));
  return sol.d.squaredNorm() + (z - grad_F).squaredNorm();
}

/// Lipschitz constant of grad eta with respect to (x, z) for fixed beta.
template <typename Scalar>
Scalar eta_gradient_lipschitz(Scalar beta) {
  if (!(beta > Scalar(0))) {
    throw std::invalid_argument("eta_gradient_lipschitz: beta must be positive");
  }
  using std::sqrt;
  const Scalar p = Scalar(1) + beta;
  const Scalar q = Scalar(1) + Scalar(1) / (Scalar(2) * beta);
  return Scalar(2) * sqrt(p * p + q * q);
}

}  // namespace nestopt

#endif  // NESTOPT_GEOMETRY_HPP
