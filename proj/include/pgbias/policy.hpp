#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pgbias/mdp.hpp"
#include "pgbias/types.hpp"

namespace pgbias {

enum class PolicyKind { tabular_sigmoid, tabular_softmax, tied };

std::string to_string(PolicyKind kind);

/// Softmax over per-(state, action) logits, where each logit is either a
/// parameter θ_k or the constant 0. Several slots may share one parameter
/// (tied policies). A state with no parameterized slot acts uniformly.
///
/// The sigmoid kind is the two-action special case with logits (θ_i, 0), so
/// π(s, a1) = σ(θ_i).
struct PolicyParameterization {
  PolicyKind kind = PolicyKind::tabular_softmax;
  Eigen::MatrixXi slots;  // (state, action) -> parameter index, -1 for a fixed zero logit
  Index num_params = 0;
  Eigen::VectorXd theta;  // default parameter vector (zeros)

  /// One parameter per listed state; π(s, a1) = σ(θ_i) for the i-th state.
  static PolicyParameterization sigmoid(const TabularMDP& mdp, const std::vector<std::string>& parameterized_states);
  /// Independent logit for every non-terminal (state, action).
  static PolicyParameterization softmax(const TabularMDP& mdp);
  /// Sigmoid policy whose states share parameters: (state, parameter index) pairs.
  static PolicyParameterization tied(const TabularMDP& mdp, const std::vector<std::pair<std::string, Index>>& state_to_param);

  /// States that carry at least one parameterized slot.
  std::vector<Index> parameterized_states() const;
};

void check_theta(const PolicyParameterization& policy, Index theta_size);

/// π(s, a) as a states x actions table.
template <typename Scalar>
Matrix<Scalar> policy_probs(const PolicyParameterization& policy, const Vector<Scalar>& theta) {
  using std::exp;
  check_theta(policy, theta.size());
  const Index ns = policy.slots.rows();
  const Index na = policy.slots.cols();
  Matrix<Scalar> probs(ns, na);
  for (Index s = 0; s < ns; ++s) {
    Vector<Scalar> logits(na);
    Index top = 0;
    for (Index a = 0; a < na; ++a) {
      const int k = policy.slots(s, a);
      logits(a) = k >= 0 ? theta(k) : Scalar(0.0);
      if (value_of(logits(a)) > value_of(logits(top))) top = a;
    }
    const Scalar shift = logits(top);
    Scalar total(0.0);
    for (Index a = 0; a < na; ++a) {
      logits(a) = exp(logits(a) - shift);
      total += logits(a);
    }
    for (Index a = 0; a < na; ++a) probs(s, a) = logits(a) / total;
  }
  return probs;
}

/// Compatible features ψ(s, a) = ∂ ln π(s, a) / ∂θ, stored as row
/// s * |A| + a of a (|S||A|) x |θ| matrix.
template <typename Scalar>
Matrix<Scalar> compatible_features(const PolicyParameterization& policy, const Matrix<Scalar>& probs) {
  const Index ns = policy.slots.rows();
  const Index na = policy.slots.cols();
  Matrix<Scalar> psi = Matrix<Scalar>::Constant(ns * na, policy.num_params, Scalar(0.0));
  for (Index s = 0; s < ns; ++s) {
    for (Index a = 0; a < na; ++a) {
      const Index row = s * na + a;
      const int k = policy.slots(s, a);
      if (k >= 0) psi(row, k) += Scalar(1.0);
      for (Index b = 0; b < na; ++b) {
        const int kb = policy.slots(s, b);
        if (kb >= 0) psi(row, kb) -= probs(s, b);
      }
    }
  }
  return psi;
}

template <typename Scalar>
Matrix<Scalar> compatible_features(const PolicyParameterization& policy, const Vector<Scalar>& theta) {
  return compatible_features(policy, policy_probs(policy, theta));
}

/// ∂π(s, a) / ∂θ = π(s, a) ψ(s, a), same row layout as compatible_features.
template <typename Scalar>
Matrix<Scalar> probability_gradients(const PolicyParameterization& policy, const Matrix<Scalar>& probs) {
  Matrix<Scalar> grads = compatible_features(policy, probs);
  const Index na = probs.cols();
  for (Index row = 0; row < grads.rows(); ++row) grads.row(row) *= probs(row / na, row % na);
  return grads;
}

}  // namespace pgbias
