#ifndef NESTOPT_ASA_HPP
#define NESTOPT_ASA_HPP

#include <optional>
#include <stdexcept>
#include <string>

#include "nestopt/nasa.hpp"

namespace nestopt {

enum class AsaRegime {
  kBoundedMoment,    // any beta > 0; reads no problem constants
  kBoundedVariance,  // beta must clear the variance-regime threshold
};

template <typename Scalar>
struct AsaParams {
  Scalar a = 1;
  Scalar beta = 1;
  long N = 1000;
  AsaRegime regime = AsaRegime::kBoundedMoment;
  TauRule tau_rule = TauRule::kStandard;
  Scalar tau_constant = 0;
  std::vector<Scalar> tau_custom;
  // Certified Lipschitz constant of grad eta for the variance regime. When
  // empty the generic bound at the candidate beta is used.
  std::optional<Scalar> eta_lipschitz;
};

/// 2 (3 L_{grad f} + L_{grad eta} + chat L_{grad eta} L_{grad f}^2) / 3.
template <typename Scalar>
Scalar asa_beta_threshold(Scalar L_grad_f, Scalar L_grad_eta, Scalar chat = Scalar(1)) {
  return Scalar(2) *
         (Scalar(3) * L_grad_f + L_grad_eta + chat * L_grad_eta * L_grad_f * L_grad_f) /
         Scalar(3);
}

/// The bounded-moment regime never looks at `lip`.
template <typename Scalar>
StepSchedule<Scalar> make_asa_schedule(const AsaParams<Scalar>& params,
                                       const std::optional<Lipschitz<Scalar>>& lip) {
  if (!(params.a > Scalar(0))) throw std::invalid_argument("ASA: a must be positive");
  if (!(params.beta > Scalar(0))) throw std::invalid_argument("ASA: beta must be positive");
  if (params.N < 2) throw std::invalid_argument("ASA: N must be at least 2");

  StepSchedule<Scalar> s;
  s.a = params.a;
  s.b = params.a;
  s.beta = params.beta;
  s.tau = tau_sequence(params.tau_rule, params.a, params.N, params.tau_constant,
                       params.tau_custom);
  using std::abs;
  using std::sqrt;
  for (const Scalar t : s.tau) {
    if (!(t > Scalar(0)) || t > Scalar(1) / params.a * (Scalar(1) + Scalar(1e-12))) {
      throw std::invalid_argument("ASA: every tau_k must lie in (0, 1/a]");
    }
  }
  s.initial_step_ok = abs(s.tau[0] * params.a - Scalar(1)) <= Scalar(1e-12);
  s.step_cap_ok = true;
  for (std::size_t k = 1; k < s.tau.size(); ++k) {
    if (params.a * s.tau[k] > Scalar(1) / sqrt(Scalar(2)) * (Scalar(1) + Scalar(1e-12))) {
      s.step_cap_ok = false;
    }
  }
  if (!s.initial_step_ok) throw std::invalid_argument("ASA: tau_0 must equal 1/a");
  if (!s.step_cap_ok) throw std::invalid_argument("ASA: a tau_k must not exceed 1/sqrt(2)");

  if (params.regime == AsaRegime::kBoundedVariance) {
    if (!lip) throw std::invalid_argument("ASA: variance regime needs L_grad_f");
    const Scalar L_eta =
        params.eta_lipschitz ? *params.eta_lipschitz : eta_gradient_lipschitz(params.beta);
    const Scalar threshold = asa_beta_threshold(lip->grad_f, L_eta);
    if (params.beta < threshold) {
      throw std::invalid_argument("ASA: beta " + std::to_string(static_cast<double>(params.beta)) +
                                  " is below the variance-regime threshold " +
                                  std::to_string(static_cast<double>(threshold)));
    }
  }
  return s;
}

/// One ASA iteration: s^{k+1} is sampled at x^k, z^{k+1} averages it in.
/// `oracle(x)` returns a sample of grad f(x). u is kept equal to x.
template <typename Scalar, typename Oracle>
SolverState<Scalar> asa_step(const FeasibleSet<Scalar>& set, const SolverState<Scalar>& state,
                             Scalar tau, Scalar beta, Scalar a, Oracle&& oracle,
                             SubproblemSolution<Scalar>* sub_out = nullptr,
                             Vec<Scalar>* sample_out = nullptr) {
  if (!(a > Scalar(0))) throw std::invalid_argument("asa_step: a must be positive");
  if (!(tau > Scalar(0)) || tau > Scalar(1) / a * (Scalar(1) + Scalar(1e-12))) {
    throw std::invalid_argument("asa_step: tau must lie in (0, 1/a]");
  }
  if (!(beta > Scalar(0))) throw std::invalid_argument("asa_step: beta must be positive");
  if (!state.x.allFinite() || !state.z.allFinite()) {
    throw NumericalFailure("asa_step: non-finite iterate", state.k);
  }
  auto sub = solve_subproblem(set, state.x, state.z, beta);
  Vec<Scalar> s = oracle(static_cast<const Vec<Scalar>&>(state.x));
  if (s.size() != state.x.size()) throw std::invalid_argument("asa_step: sample has wrong shape");

  SolverState<Scalar> next;
  next.k = state.k + 1;
  next.x = state.x + tau * sub.d;
  next.z = (Scalar(1) - a * tau) * state.z + a * tau * s;
  next.u = next.x;
  next.y = sub.y;
  next.d = sub.d;
  if (!next.x.allFinite() || !next.z.allFinite()) {
    throw NumericalFailure("asa_step: non-finite iterate", next.k);
  }
  if (sub_out != nullptr) *sub_out = std::move(sub);
  if (sample_out != nullptr) *sample_out = std::move(s);
  return next;
}

/// ASA run on a problem whose inner map is the identity. Same output rule
/// and stream layout as nasa_run (s uses the gradient stream).
template <typename Scalar>
RunResult<Scalar> asa_run(const CompositeProblem<Scalar>& problem, const AsaParams<Scalar>& params,
                          RunSeed seed, const RunOptions<Scalar>& options = {}) {
  if (!problem.identity_inner()) {
    throw std::invalid_argument("asa_run: inner map is not the identity; use nasa_run");
  }
  RunResult<Scalar> result;
  result.N = params.N;
  result.seed = seed;
  const bool needs_constants = params.regime == AsaRegime::kBoundedVariance;
  result.schedule = make_asa_schedule(
      params, needs_constants ? problem.lipschitz() : std::optional<Lipschitz<Scalar>>());
  const auto& sched = result.schedule;
  const FeasibleSet<Scalar>& set = problem.set();

  Rng index_rng = make_stream({seed.base, seed.replication, 0, StreamTag::kOutputIndex});
  result.R = draw_output_index(sched.tau, index_rng);

  SolverState<Scalar> state;
  state.x = options.x0 ? *options.x0 : problem.initial_point();
  require_feasible(set, state.x, "asa_run");
  state.z = options.z0 ? *options.z0 : Vec<Scalar>::Zero(problem.n());
  state.u = state.x;

  if (options.record_trajectory) {
    if (options.merit) {
      result.merit = options.merit;
    } else if (const auto lip = problem.lipschitz()) {
      result.merit = standard_merit_constants(params.a, params.a, Scalar(1), params.beta, *lip,
                                           problem.optimal_value());
      result.merit->gamma = 0;
      result.merit->c = 0;
    }
    result.trajectory.reserve(static_cast<std::size_t>(params.N));
  }

  auto oracle = [&](const Vec<Scalar>& x) {
    Rng rng = make_stream({seed.base, seed.replication, state.k, StreamTag::kGradient});
    return problem.sample_outer_gradient(x, rng);
  };

  std::optional<detail::ExpectedMetrics<Scalar>> expected;
  if (options.expected_over_R) expected.emplace(output_index_distribution(sched.tau));

  try {
    for (long k = 0; k < params.N; ++k) {
      if (k == result.R) {
        result.x_R = state.x;
        result.z_R = state.z;
        result.u_R = state.x;
      }
      if (expected) expected->add(problem, state);
      const Scalar tau = sched.tau[static_cast<std::size_t>(k)];
      if (!options.record_trajectory) {
        state = asa_step(set, state, tau, sched.beta, sched.a, oracle);
        continue;
      }
      auto row = detail::state_row(problem, state, tau, result.merit, true);
      SubproblemSolution<Scalar> sub;
      Vec<Scalar> s;
      SolverState<Scalar> next = asa_step(set, state, tau, sched.beta, sched.a, oracle, &sub, &s);
      row.d_sq = sub.d.squaredNorm();
      row.z_step_sq = (next.z - state.z).squaredNorm();
      row.cross_F = sub.d.dot(problem.outer_gradient(state.x) - s);
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

#endif  // NESTOPT_ASA_HPP
