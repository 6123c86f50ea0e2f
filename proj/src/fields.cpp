#include "pgbias/fields.hpp"

#include <limits>
#include <stdexcept>

namespace pgbias {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::discounted: return "grad_discounted";
    case FieldKind::biased: return "grad_biased";
    case FieldKind::biased_via_lemma: return "grad_biased_via_lemma";
    case FieldKind::undiscounted: return "grad_undiscounted";
  }
  return "unknown";
}

FieldKind parse_field_kind(const std::string& name) {
  if (name == "grad_discounted" || name == "discounted") return FieldKind::discounted;
  if (name == "grad_biased" || name == "biased") return FieldKind::biased;
  if (name == "grad_biased_via_lemma" || name == "lemma") return FieldKind::biased_via_lemma;
  if (name == "grad_undiscounted" || name == "undiscounted") return FieldKind::undiscounted;
  throw std::invalid_argument("unknown field '" + name + "'");
}

ParameterField::ParameterField(FieldKind kind, TabularMDP mdp, PolicyParameterization policy, double gamma,
                               CriticForm form)
    : name_(to_string(kind)),
      dimension_(policy.num_params),
      context_(std::make_shared<const Context>(
          Context{kind, std::move(mdp), std::move(policy), kind == FieldKind::undiscounted ? 1.0 : gamma, form})) {}

ParameterField ParameterField::custom(std::string name, Index dimension, Function fn) {
  ParameterField field;
  field.name_ = std::move(name);
  field.dimension_ = dimension;
  field.custom_ = std::move(fn);
  return field;
}

double ParameterField::gamma() const {
  return context_ ? context_->gamma : std::numeric_limits<double>::quiet_NaN();
}

std::optional<FieldKind> ParameterField::kind() const {
  if (!context_) return std::nullopt;
  return context_->kind;
}

template <typename Scalar>
Vector<Scalar> ParameterField::evaluate(const Vector<Scalar>& theta) const {
  const auto& c = *context_;
  switch (c.kind) {
    case FieldKind::discounted: return grad_discounted<Scalar>(c.mdp, c.policy, theta, c.gamma, c.form);
    case FieldKind::biased: return grad_biased<Scalar>(c.mdp, c.policy, theta, c.gamma, c.form);
    case FieldKind::biased_via_lemma: return grad_biased_via_lemma<Scalar>(c.mdp, c.policy, theta, c.gamma);
    case FieldKind::undiscounted: return grad_undiscounted<Scalar>(c.mdp, c.policy, theta, c.form);
  }
  throw std::logic_error("unhandled field kind");
}

Eigen::VectorXd ParameterField::operator()(const Eigen::VectorXd& theta) const {
  if (theta.size() != dimension_) throw std::invalid_argument("theta dimension mismatch for field " + name_);
  if (!context_) return custom_(theta);
  return evaluate<double>(theta);
}

Eigen::MatrixXd ParameterField::exact_jacobian(const Eigen::VectorXd& theta) const {
  if (!context_) throw std::logic_error("field " + name_ + " has no exact Jacobian");
  if (theta.size() != dimension_) throw std::invalid_argument("theta dimension mismatch for field " + name_);
  const Index k = dimension_;
  Vector<Dual> seeded(k);
  for (Index i = 0; i < k; ++i) seeded(i) = Dual(theta(i), k, i);
  const Vector<Dual> out = evaluate<Dual>(seeded);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(out.size(), k);
  for (Index i = 0; i < out.size(); ++i)
    if (out(i).derivatives().size() == k) jac.row(i) = out(i).derivatives().transpose();
  return jac;
}

}  // namespace pgbias
