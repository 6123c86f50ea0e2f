#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "pgbias/mdp.hpp"
#include "pgbias/policy.hpp"
#include "pgbias/solvers.hpp"

namespace pgbias {

/// Which critic multiplies ∂π/∂θ. The advantage form subtracts V(s) as a
/// baseline; both give the same field because Σ_a ∂π(s, a)/∂θ = 0.
enum class CriticForm { action_value, advantage };

/// G(s, k) = Σ_a ∂π(s, a)/∂θ_k · Q_γ(s, a) (or A_γ), zero on the terminal row.
template <typename Scalar>
Matrix<Scalar> policy_gradient_terms(const TabularMDP& mdp, const PolicyParameterization& policy,
                                     const Matrix<Scalar>& probs, const ValueBundle<Scalar>& values,
                                     CriticForm form) {
  const Matrix<Scalar> dpi = probability_gradients(policy, probs);
  const Matrix<Scalar>& critic = form == CriticForm::action_value ? values.Q : values.adv;
  const Index na = mdp.num_actions();
  Matrix<Scalar> terms = Matrix<Scalar>::Constant(mdp.num_states(), policy.num_params, Scalar(0.0));
  for (Index s : mdp.transient_states())
    for (Index a = 0; a < na; ++a) terms.row(s) += critic(s, a) * dpi.row(s * na + a);
  return terms;
}

/// J_γ(θ) = Σ_s d0(s) V_γ(s).
template <typename Scalar>
Scalar objective(const TabularMDP& mdp, const PolicyParameterization& policy, const Vector<Scalar>& theta,
                 double gamma) {
  const auto values = solve_values(mdp, policy, theta, gamma);
  return mdp.initial.template cast<Scalar>().dot(values.V);
}

/// True gradient of J_γ: Σ_s x_γ(s) Σ_a ∂π(s, a)/∂θ Q_γ(s, a), with x_γ the
/// γ-discounted visitation.
template <typename Scalar>
Vector<Scalar> grad_discounted(const TabularMDP& mdp, const PolicyParameterization& policy,
                               const Vector<Scalar>& theta, double gamma,
                               CriticForm form = CriticForm::action_value) {
  const Matrix<Scalar> probs = policy_probs(policy, theta);
  const auto values = solve_values<Scalar>(mdp, probs, gamma);
  const Vector<Scalar> visits = discounted_visitation<Scalar>(mdp, probs, gamma);
  return policy_gradient_terms<Scalar>(mdp, policy, probs, values, form).transpose() * visits;
}

/// The update most algorithms follow: same terms as grad_discounted, but
/// weighted by the undiscounted visitation x_1 while Q keeps its γ.
template <typename Scalar>
Vector<Scalar> grad_biased(const TabularMDP& mdp, const PolicyParameterization& policy,
                           const Vector<Scalar>& theta, double gamma,
                           CriticForm form = CriticForm::action_value) {
  const Matrix<Scalar> probs = policy_probs(policy, theta);
  const auto values = solve_values<Scalar>(mdp, probs, gamma);
  const Vector<Scalar> visits = discounted_visitation<Scalar>(mdp, probs, 1.0);
  return policy_gradient_terms<Scalar>(mdp, policy, probs, values, form).transpose() * visits;
}

/// ∂V_γ(s)/∂θ_k from the differentiated Bellman system
///   (I - γ P_π) u_k = ∂r_π/∂θ_k + γ (∂P_π/∂θ_k) V.
/// Rows are states (terminal row zero), columns parameters.
template <typename Scalar>
Matrix<Scalar> value_gradient(const TabularMDP& mdp, const PolicyParameterization& policy,
                              const Matrix<Scalar>& probs, const ValueBundle<Scalar>& values) {
  const auto transient = mdp.transient_states();
  const Index nt = static_cast<Index>(transient.size());
  const Index na = mdp.num_actions();
  const Index k = policy.num_params;
  const double gamma = values.gamma;
  const Matrix<Scalar> dpi = probability_gradients(policy, probs);

  Matrix<Scalar> d_reward = Matrix<Scalar>::Constant(nt, k, Scalar(0.0));
  Matrix<Scalar> d_transition_v = Matrix<Scalar>::Constant(nt, k, Scalar(0.0));
  for (Index a = 0; a < na; ++a) {
    const Vector<Scalar> next_v = mdp.transitions[a].template cast<Scalar>() * values.V;
    for (Index i = 0; i < nt; ++i) {
      const Index s = transient[i];
      d_reward.row(i) += Scalar(mdp.reward(s, a)) * dpi.row(s * na + a);
      d_transition_v.row(i) += next_v(s) * dpi.row(s * na + a);
    }
  }
  const Matrix<Scalar> p_tt = policy_transition(mdp, probs)(transient, transient);
  Matrix<Scalar> lhs = Matrix<Scalar>::Identity(nt, nt) - Scalar(gamma) * p_tt;
  Matrix<Scalar> rhs = d_reward + Scalar(gamma) * d_transition_v;

  Matrix<Scalar> out = Matrix<Scalar>::Constant(mdp.num_states(), k, Scalar(0.0));
  if (nt > 0 && k > 0) out(transient, Eigen::all) = solve_dense<Scalar>(lhs, rhs);
  return out;
}

/// Second construction of the biased update: Σ_s d_γ(s) ∂V_γ(s)/∂θ, with d_γ
/// the occupancy weights. Agrees with grad_biased by the occupancy identity.
template <typename Scalar>
Vector<Scalar> grad_biased_via_lemma(const TabularMDP& mdp, const PolicyParameterization& policy,
                                     const Vector<Scalar>& theta, double gamma) {
  const Matrix<Scalar> probs = policy_probs(policy, theta);
  const auto values = solve_values<Scalar>(mdp, probs, gamma);
  const Vector<Scalar> weights = occupancy_weights<Scalar>(mdp, probs, gamma);
  return value_gradient<Scalar>(mdp, policy, probs, values).transpose() * weights;
}

template <typename Scalar>
Vector<Scalar> grad_undiscounted(const TabularMDP& mdp, const PolicyParameterization& policy,
                                 const Vector<Scalar>& theta, CriticForm form = CriticForm::action_value) {
  return grad_discounted<Scalar>(mdp, policy, theta, 1.0, form);
}

enum class FieldKind { discounted, biased, biased_via_lemma, undiscounted };

std::string to_string(FieldKind kind);
FieldKind parse_field_kind(const std::string& name);

/// A vector field over θ. Built-in kinds evaluate in closed form and provide
/// exact Jacobians by forward-mode differentiation; custom fields only
/// support finite differences.
class ParameterField {
 public:
  using Function = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  ParameterField(FieldKind kind, TabularMDP mdp, PolicyParameterization policy, double gamma,
                 CriticForm form = CriticForm::action_value);

  static ParameterField custom(std::string name, Index dimension, Function fn);

  const std::string& name() const { return name_; }
  Index dimension() const { return dimension_; }
  Eigen::VectorXd operator()(const Eigen::VectorXd& theta) const;

  bool has_exact_jacobian() const { return context_ != nullptr; }
  /// J(i, j) = ∂F_i/∂θ_j.
  Eigen::MatrixXd exact_jacobian(const Eigen::VectorXd& theta) const;

  /// Context of built-in kinds; null for custom fields.
  const TabularMDP* mdp() const { return context_ ? &context_->mdp : nullptr; }
  const PolicyParameterization* policy() const { return context_ ? &context_->policy : nullptr; }
  double gamma() const;
  std::optional<FieldKind> kind() const;

 private:
  struct Context {
    FieldKind kind;
    TabularMDP mdp;
    PolicyParameterization policy;
    double gamma;
    CriticForm form;
  };

  ParameterField() = default;

  template <typename Scalar>
  Vector<Scalar> evaluate(const Vector<Scalar>& theta) const;

  std::string name_;
  Index dimension_ = 0;
  std::shared_ptr<const Context> context_;
  Function custom_;
};

}  // namespace pgbias
