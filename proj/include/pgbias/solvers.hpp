#pragma once

#include <optional>
#include <string>

#include "pgbias/mdp.hpp"
#include "pgbias/policy.hpp"
#include "pgbias/types.hpp"

namespace pgbias {

/// Reciprocal-condition threshold below which a transient solve is refused.
inline constexpr double kSingularRcond = 1e-13;

/// Dense LU solve with partial pivoting. The conditioning check runs on the
/// plain values so it behaves the same for dual numbers.
template <typename Scalar>
Matrix<Scalar> solve_dense(const Matrix<Scalar>& lhs, const Matrix<Scalar>& rhs) {
  Eigen::PartialPivLU<Eigen::MatrixXd> plain(values_of(lhs));
  if (!(plain.rcond() > kSingularRcond))
    throw SingularSystemError("transient system is singular (rcond " + std::to_string(plain.rcond()) +
                              "); the MDP is not episodic under this policy");
  if constexpr (std::is_same_v<Scalar, double>) {
    return plain.solve(rhs);
  } else {
    return lhs.partialPivLu().solve(rhs);
  }
}

/// P_π(s, s') = Σ_a π(s, a) P(s, a, s') over all states.
template <typename Scalar>
Matrix<Scalar> policy_transition(const TabularMDP& mdp, const Matrix<Scalar>& probs) {
  const Index n = mdp.num_states();
  Matrix<Scalar> out = Matrix<Scalar>::Constant(n, n, Scalar(0.0));
  for (Index a = 0; a < mdp.num_actions(); ++a)
    out += probs.col(a).asDiagonal() * mdp.transitions[a].template cast<Scalar>();
  return out;
}

/// r_π(s) = Σ_a π(s, a) R(s, a).
template <typename Scalar>
Vector<Scalar> policy_reward(const TabularMDP& mdp, const Matrix<Scalar>& probs) {
  return probs.cwiseProduct(mdp.reward.template cast<Scalar>()).rowwise().sum();
}

template <typename Scalar>
struct ValueBundle {
  Vector<Scalar> V;     // per state, V(terminal) = 0
  Matrix<Scalar> Q;     // (state, action)
  Matrix<Scalar> adv;   // Q - V
  double gamma = 1.0;
};

/// Values of a fixed stochastic policy: V on transient states solves
/// (I - γ P_π) V = r_π; Q and the advantage follow from V.
template <typename Scalar>
ValueBundle<Scalar> solve_values(const TabularMDP& mdp, const Matrix<Scalar>& probs, double gamma) {
  const auto transient = mdp.transient_states();
  const Index nt = static_cast<Index>(transient.size());
  const Matrix<Scalar> p_pi = policy_transition(mdp, probs);
  const Vector<Scalar> r_pi = policy_reward(mdp, probs);

  Matrix<Scalar> lhs = Matrix<Scalar>::Identity(nt, nt) - Scalar(gamma) * p_pi(transient, transient);
  Matrix<Scalar> rhs = r_pi(transient);

  ValueBundle<Scalar> out;
  out.gamma = gamma;
  out.V = Vector<Scalar>::Constant(mdp.num_states(), Scalar(0.0));
  if (nt > 0) out.V(transient) = solve_dense<Scalar>(lhs, rhs).col(0);

  out.Q = mdp.reward.template cast<Scalar>();
  for (Index a = 0; a < mdp.num_actions(); ++a)
    out.Q.col(a) += Scalar(gamma) * (mdp.transitions[a].template cast<Scalar>() * out.V);
  out.adv = out.Q.colwise() - out.V;
  return out;
}

template <typename Scalar>
ValueBundle<Scalar> solve_values(const TabularMDP& mdp, const PolicyParameterization& policy,
                                 const Vector<Scalar>& theta, double gamma) {
  return solve_values<Scalar>(mdp, policy_probs(policy, theta), gamma);
}

/// x_β(s) = Σ_t β^t Pr(S_t = s) on transient states; the terminal entry is 0
/// (the series diverges there for β = 1). Solves (I - β P_π)ᵀ x = d0.
template <typename Scalar>
Vector<Scalar> discounted_visitation(const TabularMDP& mdp, const Matrix<Scalar>& probs, double beta) {
  const auto transient = mdp.transient_states();
  const Index nt = static_cast<Index>(transient.size());
  const Matrix<Scalar> p_pi = policy_transition(mdp, probs);
  Matrix<Scalar> lhs = (Matrix<Scalar>::Identity(nt, nt) - Scalar(beta) * p_pi(transient, transient)).transpose();
  Matrix<Scalar> rhs = mdp.initial(transient).template cast<Scalar>();
  Vector<Scalar> x = Vector<Scalar>::Constant(mdp.num_states(), Scalar(0.0));
  if (nt > 0) x(transient) = solve_dense<Scalar>(lhs, rhs).col(0);
  return x;
}

/// Occupancy weights d(s) = d0(s) + (1 - γ) Σ_{t≥1} Pr(S_t = s) on transient
/// states, from the fundamental system d0ᵀ P (I - P)^{-1}. At γ = 1 this
/// returns d0 itself without any solve.
template <typename Scalar>
Vector<Scalar> occupancy_weights(const TabularMDP& mdp, const Matrix<Scalar>& probs, double gamma) {
  const auto transient = mdp.transient_states();
  const Index nt = static_cast<Index>(transient.size());
  Vector<Scalar> d = Vector<Scalar>::Constant(mdp.num_states(), Scalar(0.0));
  d(transient) = mdp.initial(transient).template cast<Scalar>();
  if (gamma == 1.0 || nt == 0) return d;

  const Matrix<Scalar> p_tt = policy_transition(mdp, probs)(transient, transient);
  Matrix<Scalar> lhs = (Matrix<Scalar>::Identity(nt, nt) - p_tt).transpose();
  Matrix<Scalar> rhs = p_tt.transpose() * mdp.initial(transient).template cast<Scalar>();
  const Vector<Scalar> later = solve_dense<Scalar>(lhs, rhs).col(0);
  for (Index i = 0; i < nt; ++i) d(transient[i]) += Scalar(1.0 - gamma) * later(i);
  return d;
}

/// Submultiplicative bound on the transient block: with c = ‖Pᵐ‖∞ < 1,
/// Σ_{k≥1} ‖x Pᵏ‖₁ ≤ ‖x‖₁ · tail_factor for every row vector x.
struct ContractionBound {
  int power = 1;
  double norm = 0.0;
  double tail_factor = 0.0;
  bool contracting = false;
};

ContractionBound transient_contraction(const Eigen::MatrixXd& transient_block, int max_power = 4096);

struct VisitationSeries {
  Eigen::MatrixXd probability;  // row t: Pr(S_t = s) over all states
  double tail_bound = 0.0;      // bound on Σ_{t>T} Pr(S_t ≠ terminal)
};

VisitationSeries visitation_series(const TabularMDP& mdp, const PolicyParameterization& policy,
                                   const Eigen::VectorXd& theta, int horizon);

struct OccupancyMeasure {
  Eigen::VectorXd d;                      // closed form, terminal entry 0
  Eigen::VectorXd series_d;               // truncated-series evaluation of the same weights
  Eigen::VectorXd visitation_discounted;  // x_β
  double beta = 1.0;
  int truncation_horizon = 0;
  double tail_bound = 0.0;                // certified bound on |d - series_d|₁
};

/// Tolerance used to pick the truncation horizon of the audit series.
inline constexpr double kSeriesTolerance = 1e-12;

OccupancyMeasure occupancy_measure(const TabularMDP& mdp, const PolicyParameterization& policy,
                                   const Eigen::VectorXd& theta, double gamma,
                                   std::optional<double> beta = std::nullopt);

/// max_i |Σ_{t≤i} w(t) γ^{i-t} - 1| for w(0) = 1, w(t) = 1 - γ, by direct summation.
double weight_sequence_check(double gamma, int i_max);

/// Largest expected number of steps before absorption, over start states.
double expected_absorption_time(const TabularMDP& mdp, const Eigen::MatrixXd& probs);

}  // namespace pgbias
