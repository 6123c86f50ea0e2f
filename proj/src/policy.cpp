#include "pgbias/policy.hpp"

#include <stdexcept>

namespace pgbias {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::tabular_sigmoid: return "tabular-sigmoid";
    case PolicyKind::tabular_softmax: return "tabular-softmax";
    case PolicyKind::tied: return "tied";
  }
  return "unknown";
}

void check_theta(const PolicyParameterization& policy, Index theta_size) {
  if (theta_size != policy.num_params)
    throw std::invalid_argument("theta has " + std::to_string(theta_size) + " entries, policy expects " +
                                std::to_string(policy.num_params));
}

PolicyParameterization PolicyParameterization::sigmoid(const TabularMDP& mdp,
                                                       const std::vector<std::string>& parameterized_states) {
  if (mdp.num_actions() != 2) throw std::invalid_argument("sigmoid policies need exactly two actions");
  PolicyParameterization p;
  p.kind = PolicyKind::tabular_sigmoid;
  p.slots = Eigen::MatrixXi::Constant(mdp.num_states(), 2, -1);
  for (std::size_t i = 0; i < parameterized_states.size(); ++i) {
    const Index s = mdp.state_index(parameterized_states[i]);
    if (p.slots(s, 0) >= 0) throw std::invalid_argument("state listed twice: " + parameterized_states[i]);
    p.slots(s, 0) = static_cast<int>(i);
  }
  p.num_params = static_cast<Index>(parameterized_states.size());
  p.theta = Eigen::VectorXd::Zero(p.num_params);
  return p;
}

PolicyParameterization PolicyParameterization::softmax(const TabularMDP& mdp) {
  PolicyParameterization p;
  p.kind = PolicyKind::tabular_softmax;
  p.slots = Eigen::MatrixXi::Constant(mdp.num_states(), mdp.num_actions(), -1);
  int next = 0;
  for (Index s : mdp.transient_states())
    for (Index a = 0; a < mdp.num_actions(); ++a) p.slots(s, a) = next++;
  p.num_params = next;
  p.theta = Eigen::VectorXd::Zero(p.num_params);
  return p;
}

PolicyParameterization PolicyParameterization::tied(const TabularMDP& mdp,
                                                    const std::vector<std::pair<std::string, Index>>& state_to_param) {
  if (mdp.num_actions() != 2) throw std::invalid_argument("tied sigmoid policies need exactly two actions");
  PolicyParameterization p;
  p.kind = PolicyKind::tied;
  p.slots = Eigen::MatrixXi::Constant(mdp.num_states(), 2, -1);
  Index count = 0;
  for (const auto& [name, k] : state_to_param) {
    if (k < 0) throw std::invalid_argument("negative parameter index for " + name);
    p.slots(mdp.state_index(name), 0) = static_cast<int>(k);
    count = std::max(count, k + 1);
  }
  p.num_params = count;
  p.theta = Eigen::VectorXd::Zero(count);
  return p;
}

std::vector<Index> PolicyParameterization::parameterized_states() const {
  std::vector<Index> out;
  for (Index s = 0; s < slots.rows(); ++s)
    if ((slots.row(s).array() >= 0).any()) out.push_back(s);
  return out;
}

}  // namespace pgbias
