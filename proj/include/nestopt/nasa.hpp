#ifndef NESTOPT_NASA_HPP
#define NESTOPT_NASA_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nestopt/diagnostics.hpp"
#include "nestopt/errors.hpp"
#include "nestopt/geometry.hpp"
#include "nestopt/oracle.hpp"

namespace nestopt {

enum class TauRule {
  kStandard,     // tau_0 = 1/a, tau_k = 1/sqrt(N)
  kConstant,  // tau_0 = 1/a, tau_k = constant
  kCustom,    // explicit tau_0 .. tau_{N-1}
};

template <typename Scalar>
struct NasaParams {
  Scalar a = 1;
  Scalar b = 1;
  Scalar alpha = 1;
  std::optional<Scalar> beta;  // empty: derive from the Lipschitz constants
  long N = 1000;
  TauRule tau_rule = TauRule::kStandard;
  Scalar tau_constant = 0;
  std::vector<Scalar> tau_custom;
  bool override_validation = false;
};

/// Deterministic (tau_k, beta) sequence with its validity flags.
template <typename Scalar>
struct StepSchedule {
  std::vector<Scalar> tau;  // tau_0 .. tau_{N-1}
  Scalar beta = 1;
  Scalar a = 1;
  Scalar b = 1;
  bool initial_step_ok = false;      // tau_0 == 1/a
  bool step_cap_ok = false;          // a tau_k <= 1/sqrt(2), k >= 1
  std::optional<bool> descent_ok;    // empty when Lipschitz constants are unknown
  std::vector<std::string> warnings;
};

template <typename Scalar>
std::vector<Scalar> tau_sequence(TauRule rule, Scalar a, long N, Scalar constant,
                                 const std::vector<Scalar>& custom) {
  if (N < 1) throw std::invalid_argument("tau_sequence: N must be positive");
  std::vector<Scalar> tau;
  switch (rule) {
    case TauRule::kStandard: {
      using std::sqrt;
      tau.assign(static_cast<std::size_t>(N), Scalar(1) / sqrt(Scalar(N)));
      tau[0] = Scalar(1) / a;
      break;
    }
    case TauRule::kConstant:
      tau.assign(static_cast<std::size_t>(N), constant);
      tau[0] = Scalar(1) / a;
      break;
    case TauRule::kCustom:
      if (static_cast<long>(custom.size()) != N) {
        throw std::invalid_argument("tau_sequence: custom schedule must have N entries");
      }
      tau = custom;
      break;
  }
  return tau;
}

/// beta = ((1 + alpha)^2 / alpha L_g^2 + alpha / 4) L_{grad f}.
template <typename Scalar>
Scalar auto_beta(Scalar alpha, const Lipschitz<Scalar>& lip) {
  return ((Scalar(1) + alpha) * (Scalar(1) + alpha) / alpha * lip.g * lip.g + alpha / Scalar(4)) *
         lip.grad_f;
}

/// Builds and validates the schedule. Throws std::invalid_argument on any
/// violated condition unless params.override_validation is set, in which
/// case the violation is kept as a warning.
template <typename Scalar>
StepSchedule<Scalar> make_schedule(const NasaParams<Scalar>& params,
                                   const std::optional<Lipschitz<Scalar>>& lip) {
  if (!(params.a > Scalar(0)) || !(params.b > Scalar(0)) || !(params.alpha > Scalar(0))) {
    throw std::invalid_argument("NASA: a, b and alpha must be positive");
  }
  if (params.N < 2) throw std::invalid_argument("NASA: N must be at least 2");

  StepSchedule<Scalar> s;
  s.a = params.a;
  s.b = params.b;
  s.tau = tau_sequence(params.tau_rule, params.a, params.N, params.tau_constant,
                       params.tau_custom);
  for (const Scalar t : s.tau) {
    if (!(t > Scalar(0)) || t > Scalar(1) / params.a * (Scalar(1) + Scalar(1e-12))) {
      throw std::invalid_argument("NASA: every tau_k must lie in (0, 1/a]");
    }
  }

  if (params.beta) {
    if (!(*params.beta > Scalar(0))) throw std::invalid_argument("NASA: beta must be positive");
    s.beta = *params.beta;
  } else {
    if (!lip) {
      throw std::invalid_argument("NASA: automatic beta needs Lipschitz constants");
    }
    if (params.a != Scalar(1) || params.b != Scalar(1)) {
      throw std::invalid_argument("NASA: automatic beta is defined for a = b = 1");
    }
    s.beta = auto_beta(params.alpha, *lip);
  }

  using std::abs;
  using std::sqrt;
  s.initial_step_ok = abs(s.tau[0] * params.a - Scalar(1)) <= Scalar(1e-12);
  s.step_cap_ok = true;
  for (std::size_t k = 1; k < s.tau.size(); ++k) {
    if (params.a * s.tau[k] > Scalar(1) / sqrt(Scalar(2)) * (Scalar(1) + Scalar(1e-12))) {
      s.step_cap_ok = false;
    }
  }
  if (lip) {
    const auto k = standard_merit_constants(params.a, params.b, params.alpha, s.beta, *lip,
                                         std::optional<Scalar>());
    s.descent_ok = descent_condition_holds(k);
  } else {
    s.warnings.emplace_back("Lipschitz constants unknown; descent condition not checked");
  }

  auto fail = [&](const std::string& what) {
    if (!params.override_validation) throw std::invalid_argument("NASA: " + what);
    s.warnings.push_back(what);
  };
  if (!s.initial_step_ok) fail("tau_0 must equal 1/a");
  if (!s.step_cap_ok) fail("a tau_k must not exceed 1/sqrt(2) for k >= 1");
  if (s.descent_ok && !*s.descent_ok) fail("beta violates the descent condition");
  return s;
}

/// Gamma_1 .. Gamma_L for tau_0 .. tau_{L-1}:
/// Gamma_1 = 1 if tau_0 = 1/a (else 1 - a tau_0), Gamma_k = Gamma_1 prod_{i=1}^{k-1} (1 - a tau_i).
template <typename Scalar>
std::vector<Scalar> gamma_sequence(Scalar a, const std::vector<Scalar>& tau) {
  if (tau.empty()) return {};
  if (tau[0] > Scalar(1) / a * (Scalar(1) + Scalar(1e-12))) {
    throw std::invalid_argument("gamma_sequence: tau_0 must not exceed 1/a");
  }
  using std::abs;
  std::vector<Scalar> gamma(tau.size());
  gamma[0] = abs(a * tau[0] - Scalar(1)) <= Scalar(1e-12) ? Scalar(1) : Scalar(1) - a * tau[0];
  for (std::size_t k = 1; k < tau.size(); ++k) gamma[k] = gamma[k - 1] * (Scalar(1) - a * tau[k]);
  return gamma;
}

/// sum_{i=k+1}^{N} tau_i Gamma_i <= cbar Gamma_{k+1} for all 0 <= k < N, where
/// tau holds tau_0 .. tau_N.
template <typename Scalar>
bool stepsize_condition_holds(Scalar a, const std::vector<Scalar>& tau, Scalar cbar,
                              Scalar rel_tol = Scalar(1e-12)) {
  if (tau.size() < 2) throw std::invalid_argument("stepsize_condition_holds: need tau_0..tau_N");
  const auto gamma = gamma_sequence(a, tau);  // gamma[i-1] = Gamma_i
  const std::size_t N = tau.size() - 1;
  Scalar tail = 0;  // sum_{i=k+1}^{N} tau_i Gamma_i, built from the back
  for (std::size_t k = N; k-- > 0;) {
    tail += tau[k + 1] * gamma[k];
    if (tail > cbar * gamma[k] * (Scalar(1) + rel_tol)) return false;
  }
  return true;
}

/// P[R = k] = tau_k / sum_{j=1}^{N-1} tau_j on {1, .., N-1}.
template <typename Scalar>
std::vector<double> output_index_distribution(const std::vector<Scalar>& tau) {
  if (tau.size() < 2) throw std::invalid_argument("output index: need N >= 2");
  double total = 0;
  for (std::size_t k = 1; k < tau.size(); ++k) total += static_cast<double>(tau[k]);
  std::vector<double> p(tau.size(), 0.0);
  for (std::size_t k = 1; k < tau.size(); ++k) p[k] = static_cast<double>(tau[k]) / total;
  return p;
}

template <typename Scalar>
long draw_output_index(const std::vector<Scalar>& tau, Rng& rng) {
  const auto p = output_index_distribution(tau);
  std::discrete_distribution<long> dist(p.begin() + 1, p.end());
  return 1 + dist(rng);
}

/// Iterate (x^k, z^k, u^k) together with the last subproblem solution.
template <typename Scalar>
struct SolverState {
  long k = 0;
  Vec<Scalar> x;
  Vec<Scalar> z;
  Vec<Scalar> u;
  Vec<Scalar> y;  // y^{k-1}
  Vec<Scalar> d;  // d^{k-1} = y^{k-1} - x^{k-1}
};

template <typename Scalar>
void require_finite(const SolverState<Scalar>& s, const char* who) {
  if (!s.x.allFinite() || !s.z.allFinite() || !s.u.allFinite()) {
    throw NumericalFailure(std::string(who) + ": non-finite iterate", s.k);
  }
}

/// What one step produced besides the new state.
template <typename Scalar>
struct StepRecord {
  SubproblemSolution<Scalar> subproblem;
  OracleSample<Scalar> sample;
};

/// One NASA iteration. `oracle(x_next, u)` must return a sample with G, J at
/// x^{k+1} and s at u^k; it is called after x^{k+1} is formed.
template <typename Scalar, typename Oracle>
SolverState<Scalar> nasa_step(const FeasibleSet<Scalar>& set, const SolverState<Scalar>& state,
                              Scalar tau, Scalar beta, Scalar a, Scalar b, Oracle&& oracle,
                              StepRecord<Scalar>* record = nullptr) {
  if (!(a > Scalar(0)) || !(b > Scalar(0))) throw std::invalid_argument("nasa_step: a, b > 0");
  if (!(tau > Scalar(0)) || tau > Scalar(1) / a * (Scalar(1) + Scalar(1e-12))) {
    throw std::invalid_argument("nasa_step: tau must lie in (0, 1/a]");
  }
  if (!(beta > Scalar(0))) throw std::invalid_argument("nasa_step: beta must be positive");
  require_finite(state, "nasa_step");

  auto sub = solve_subproblem(set, state.x, state.z, beta);
  SolverState<Scalar> next;
  next.k = state.k + 1;
  next.x = state.x + tau * sub.d;
  OracleSample<Scalar> smp = oracle(static_cast<const Vec<Scalar>&>(next.x), state.u);
  if (smp.G.size() != state.u.size() || smp.J.rows() != state.u.size() ||
      smp.J.cols() != state.x.size() || smp.s.size() != state.u.size()) {
    throw std::invalid_argument("nasa_step: oracle sample has wrong shape");
  }
  next.z = (Scalar(1) - a * tau) * state.z + a * tau * (smp.J.transpose() * smp.s);
  next.u = (Scalar(1) - b * tau) * state.u + b * tau * smp.G;
  next.y = sub.y;
  next.d = sub.d;
  require_finite(next, "nasa_step");
  if (record != nullptr) {
    record->subproblem = std::move(sub);
    record->sample = std::move(smp);
  }
  return next;
}

struct RunSeed {
  std::uint64_t base = 0;
  std::uint64_t replication = 0;
};

template <typename Scalar>
struct RunOptions {
  bool record_trajectory = false;
  std::optional<MeritConstants<Scalar>> merit;  // defaults to the standard constants
  std::optional<Vec<Scalar>> x0;
  std::optional<Vec<Scalar>> z0;  // default 0
  std::optional<Vec<Scalar>> u0;  // default: one G sample at x0
  // Also compute E[metrics | iterates] = sum_k P[R = k] metrics(x^k, z^k, u^k).
  bool expected_over_R = false;
};

/// Diagnostics at the output index (NaN where ground truth is missing).
template <typename Scalar>
struct OutputMetrics {
  Scalar V = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar g_gap_sq = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar z_err_sq = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar F_gap = std::numeric_limits<Scalar>::quiet_NaN();
};

template <typename Scalar>
struct RunResult {
  long N = 0;
  long R = 0;
  Vec<Scalar> x_R;
  Vec<Scalar> z_R;
  Vec<Scalar> u_R;
  OutputMetrics<Scalar> metrics;
  std::optional<OutputMetrics<Scalar>> expected;  // averaged over the law of R
  std::vector<TrajectoryRow<Scalar>> trajectory;
  std::optional<MeritConstants<Scalar>> merit;
  StepSchedule<Scalar> schedule;
  RunSeed seed;
  SolverState<Scalar> final_state;
};

/// Thrown when a run hits a non-finite iterate; keeps what was recorded.
template <typename Scalar>
class RunFailure : public NumericalFailure {
 public:
  RunFailure(const NumericalFailure& cause, RunResult<Scalar> partial)
      : NumericalFailure(cause), partial_(std::move(partial)) {}
  const RunResult<Scalar>& partial() const { return partial_; }

 private:
  RunResult<Scalar> partial_;
};

template <typename Scalar>
OutputMetrics<Scalar> output_metrics(const CompositeProblem<Scalar>& problem,
                                     const Vec<Scalar>& x, const Vec<Scalar>& z,
                                     const Vec<Scalar>& u) {
  const auto truth = true_values(problem, x);
  OutputMetrics<Scalar> m;
  m.V = optimality_measure(problem.set(), x, z, truth.grad_F);
  m.g_gap_sq = (truth.g - u).squaredNorm();
  m.z_err_sq = (z - truth.grad_F).squaredNorm();
  if (auto fstar = problem.optimal_value()) m.F_gap = truth.F - *fstar;
  return m;
}

namespace detail {

/// Accumulates sum_k p_k metrics(x^k, z^k, u^k).
template <typename Scalar>
class ExpectedMetrics {
 public:
  explicit ExpectedMetrics(std::vector<double> p) : p_(std::move(p)) {
    sum_.V = sum_.g_gap_sq = sum_.z_err_sq = sum_.F_gap = Scalar(0);
  }

  void add(const CompositeProblem<Scalar>& problem, const SolverState<Scalar>& s) {
    const auto k = static_cast<std::size_t>(s.k);
    if (k >= p_.size() || p_[k] == 0.0) return;
    const auto m = output_metrics(problem, s.x, s.z, s.u);
    const Scalar w = static_cast<Scalar>(p_[k]);
    sum_.V += w * m.V;
    sum_.g_gap_sq += w * m.g_gap_sq;
    sum_.z_err_sq += w * m.z_err_sq;
    sum_.F_gap += w * m.F_gap;
  }

  const OutputMetrics<Scalar>& value() const { return sum_; }

 private:
  std::vector<double> p_;
  OutputMetrics<Scalar> sum_;
};

template <typename Scalar>
std::optional<MeritConstants<Scalar>> default_merit(const CompositeProblem<Scalar>& problem,
                                                    Scalar a, Scalar b, Scalar alpha,
                                                    Scalar beta) {
  const auto lip = problem.lipschitz();
  if (!lip) return std::nullopt;
  return standard_merit_constants(a, b, alpha, beta, *lip, problem.optimal_value());
}

template <typename Scalar>
TrajectoryRow<Scalar> state_row(const CompositeProblem<Scalar>& problem,
                                const SolverState<Scalar>& s, Scalar tau,
                                const std::optional<MeritConstants<Scalar>>& merit,
                                bool single_level) {
  TrajectoryRow<Scalar> row;
  row.k = s.k;
  row.tau = tau;
  const auto truth = true_values(problem, s.x);
  row.V = optimality_measure(problem.set(), s.x, s.z, truth.grad_F);
  row.g_gap_sq = (truth.g - s.u).squaredNorm();
  row.z_err_sq = (s.z - truth.grad_F).squaredNorm();
  if (merit && merit->F_star) {
    row.W = single_level ? merit_asa(problem, s.x, s.z, *merit)
                         : merit_nasa(problem, s.x, s.z, s.u, *merit);
  }
  return row;
}

}  // namespace detail

/// Runs N NASA iterations and returns the iterate at the randomized index R.
///
/// R is drawn before the run from its own stream; the stepsizes are
/// deterministic so its law does not depend on the iterates. Iteration k
/// draws from OracleStreams::at(seed.base, seed.replication, k).
template <typename Scalar>
RunResult<Scalar> nasa_run(const CompositeProblem<Scalar>& problem,
                           const NasaParams<Scalar>& params, RunSeed seed,
                           const RunOptions<Scalar>& options = {}) {
  RunResult<Scalar> result;
  result.N = params.N;
  result.seed = seed;
  result.schedule = make_schedule(params, problem.lipschitz());
  const auto& sched = result.schedule;
  const FeasibleSet<Scalar>& set = problem.set();

  Rng index_rng = make_stream({seed.base, seed.replication, 0, StreamTag::kOutputIndex});
  result.R = draw_output_index(sched.tau, index_rng);

  SolverState<Scalar> state;
  state.x = options.x0 ? *options.x0 : problem.initial_point();
  require_feasible(set, state.x, "nasa_run");
  state.z = options.z0 ? *options.z0 : Vec<Scalar>::Zero(problem.n());
  if (options.u0) {
    state.u = *options.u0;
  } else {
    Rng init = make_stream({seed.base, seed.replication, -1, StreamTag::kInitial});
    state.u = problem.sample_inner_value(state.x, init);
  }
  if (state.z.size() != problem.n() || state.u.size() != problem.m()) {
    throw std::invalid_argument("nasa_run: initial point has wrong shape");
  }

  if (options.record_trajectory) {
    result.merit = options.merit ? options.merit
                                 : detail::default_merit(problem, params.a, params.b,
                                                         params.alpha, sched.beta);
    result.trajectory.reserve(static_cast<std::size_t>(params.N));
  }

  auto oracle = [&](const Vec<Scalar>& x_next, const Vec<Scalar>& u) {
    OracleStreams streams = OracleStreams::at(seed.base, seed.replication, state.k);
    return sample(problem, x_next, u, streams);
  };

  std::optional<detail::ExpectedMetrics<Scalar>> expected;
  if (options.expected_over_R) expected.emplace(output_index_distribution(sched.tau));

  try {
    for (long k = 0; k < params.N; ++k) {
      if (k == result.R) {
        result.x_R = state.x;
        result.z_R = state.z;
        result.u_R = state.u;
      }
      if (expected) expected->add(problem, state);
      const Scalar tau = sched.tau[static_cast<std::size_t>(k)];
      if (!options.record_trajectory) {
        state = nasa_step(set, state, tau, sched.beta, sched.a, sched.b, oracle);
        continue;
      }
      auto row = detail::state_row(problem, state, tau, result.merit, false);
      StepRecord<Scalar> rec;
      SolverState<Scalar> next =
          nasa_step(set, state, tau, sched.beta, sched.a, sched.b, oracle, &rec);
      const Vec<Scalar> g_next = problem.inner_value(next.x);
      const Vec<Scalar> noise_g = g_next - rec.sample.G;
      const Vec<Scalar> exact_dir =
          problem.inner_jacobian(next.x).transpose() * problem.outer_gradient(state.u);
      const Vec<Scalar> noise_F = exact_dir - rec.sample.J.transpose() * rec.sample.s;
      row.d_sq = rec.subproblem.d.squaredNorm();
      row.z_step_sq = (next.z - state.z).squaredNorm();
      row.g_noise_sq = noise_g.squaredNorm();
      row.cross_g = (g_next - state.u).dot(noise_g);
      row.cross_F = rec.subproblem.d.dot(noise_F);
      result.trajectory.push_back(row);
      state = std::move(next);
    }
  } catch (const NumericalFailure& failure) {
    result.final_state = state;
    throw RunFailure<Scalar>(failure, std::move(result));
  }
  result.final_state = state;
  result.metrics = output_metrics(problem, result.x_R, result.z_R, result.u_R);
  if (expected) result.expected = expected->value();
  return result;
}

}  // namespace nestopt

#endif  // NESTOPT_NASA_HPP
