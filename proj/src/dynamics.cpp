#include "pgbias/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace pgbias {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::gradient_vanished: return "gradient_vanished";
    case StopReason::stalled: return "stalled";
    case StopReason::saturated: return "saturated";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

/// States with identical slot rows move together; each group can be driven
/// to any action whose logit it can isolate.
struct PolicyGroup {
  std::vector<Index> states;
  std::vector<Index> reachable_actions;
};

std::optional<std::vector<PolicyGroup>> deterministic_groups(const PolicyParameterization& policy,
                                                             std::string& notice) {
  std::map<std::vector<int>, std::vector<Index>> by_row;
  for (Index s : policy.parameterized_states()) {
    std::vector<int> row;
    for (Index a = 0; a < policy.slots.cols(); ++a) row.push_back(policy.slots(s, a));
    by_row[row].push_back(s);
  }

  std::map<int, int> owner;  // parameter -> group
  std::vector<PolicyGroup> groups;
  for (const auto& [row, states] : by_row) {
    const int g = static_cast<int>(groups.size());
    PolicyGroup group;
    group.states = states;
    const Index na = static_cast<Index>(row.size());
    const auto unparameterized = std::count(row.begin(), row.end(), -1);
    for (Index a = 0; a < na; ++a) {
      const int k = row[a];
      if (k < 0) {
        if (unparameterized == 1) group.reachable_actions.push_back(a);
        continue;
      }
      if (std::count(row.begin(), row.end(), k) == 1) group.reachable_actions.push_back(a);
      auto [it, inserted] = owner.emplace(k, g);
      if (!inserted && it->second != g) {
        notice = "parameter " + std::to_string(k) + " is shared by states with different slot layouts";
        return std::nullopt;
      }
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

double exact_objective(const TabularMDP& mdp, const Eigen::MatrixXd& probs, double gamma) {
  return mdp.initial.dot(solve_values<double>(mdp, probs, gamma).V);
}

}  // namespace

bool policy_saturated(const PolicyParameterization& policy, const Eigen::MatrixXd& probs, double tol) {
  for (Index s : policy.parameterized_states())
    if (probs.row(s).maxCoeff() < 1.0 - tol) return false;
  return true;
}

PolicyScores score_policy(const TabularMDP& mdp, const PolicyParameterization& policy, const Eigen::VectorXd& theta,
                          double gamma, long budget) {
  PolicyScores scores;
  scores.gamma = gamma;
  const Eigen::MatrixXd probs = policy_probs(policy, theta);
  scores.discounted = exact_objective(mdp, probs, gamma);
  scores.undiscounted = exact_objective(mdp, probs, 1.0);

  std::string notice;
  const auto groups = deterministic_groups(policy, notice);
  if (!groups) {
    scores.envelope.notice = "envelope skipped: " + notice;
    return scores;
  }

  long total = 1;
  for (const auto& g : *groups) {
    if (g.reachable_actions.empty()) {
      scores.envelope.notice = "envelope skipped: a parameter group cannot reach any deterministic action";
      return scores;
    }
    total *= static_cast<long>(g.reachable_actions.size());
    if (total > budget) {
      scores.envelope.notice = "envelope skipped: more than " + std::to_string(budget) + " deterministic policies";
      return scores;
    }
  }

  auto deterministic = [&](const std::vector<Index>& choice) {
    Eigen::MatrixXd p = probs;
    for (std::size_t g = 0; g < groups->size(); ++g)
      for (Index s : (*groups)[g].states) {
        p.row(s).setZero();
        p(s, (*groups)[g].reachable_actions[choice[g]]) = 1.0;
      }
    return p;
  };

  // Rounded policy: each group takes its currently most likely reachable action.
  std::vector<Index> rounded(groups->size(), 0);
  for (std::size_t g = 0; g < groups->size(); ++g) {
    const auto& group = (*groups)[g];
    const Index s = group.states.front();
    for (std::size_t i = 1; i < group.reachable_actions.size(); ++i)
      if (probs(s, group.reachable_actions[i]) > probs(s, group.reachable_actions[rounded[g]])) rounded[g] = i;
  }
  try {
    const Eigen::MatrixXd p = deterministic(rounded);
    scores.rounded_discounted = exact_objective(mdp, p, gamma);
    scores.rounded_undiscounted = exact_objective(mdp, p, 1.0);
    scores.rounded_policy = p;
  } catch (const SingularSystemError&) {
  }

  auto& env = scores.envelope;
  env.discounted_min = env.undiscounted_min = std::numeric_limits<double>::infinity();
  env.discounted_max = env.undiscounted_max = -std::numeric_limits<double>::infinity();
  std::vector<Index> choice(groups->size(), 0);
  for (long n = 0; n < total; ++n) {
    long rest = n;
    for (std::size_t g = 0; g < groups->size(); ++g) {
      const long size = static_cast<long>((*groups)[g].reachable_actions.size());
      choice[g] = rest % size;
      rest /= size;
    }
    const Eigen::MatrixXd p = deterministic(choice);
    try {
      const double jd = exact_objective(mdp, p, gamma);
      const double ju = exact_objective(mdp, p, 1.0);
      env.discounted_min = std::min(env.discounted_min, jd);
      env.discounted_max = std::max(env.discounted_max, jd);
      env.undiscounted_min = std::min(env.undiscounted_min, ju);
      env.undiscounted_max = std::max(env.undiscounted_max, ju);
      ++env.policies_evaluated;
    } catch (const SingularSystemError&) {
      ++env.non_episodic_skipped;
    }
  }
  env.available = env.policies_evaluated > 0;
  if (!env.available) env.notice = "envelope skipped: no deterministic policy terminates";
  else if (env.non_episodic_skipped > 0)
    env.notice = std::to_string(env.non_episodic_skipped) + " non-terminating deterministic policies excluded";
  return scores;
}

FlowResult flow(const ParameterField& field, const Eigen::VectorXd& theta0, const FlowOptions& options) {
  if (!(options.step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  FlowResult result;
  const auto* policy = field.policy();
  const long decimation = std::max(1L, options.decimation);

  Eigen::VectorXd theta = theta0;
  Eigen::VectorXd anchor = theta0;
  result.trajectory_iters.push_back(0);
  result.trajectory.push_back(theta);

  long it = 0;
  for (;; ++it) {
    const Eigen::VectorXd f = field(theta);
    if (!f.allFinite()) {
      result.reason = StopReason::diverged;
      break;
    }
    result.final_field_norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    if (result.final_field_norm < options.tol_grad) {
      result.reason = StopReason::gradient_vanished;
      break;
    }
    if (policy && policy_saturated(*policy, policy_probs(*policy, theta), options.saturation)) {
      result.reason = StopReason::saturated;
      break;
    }
    if (it >= options.max_iters) {
      result.reason = StopReason::max_iterations;
      break;
    }
    theta += options.step_size * f;
    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > options.divergence_bound) {
      ++it;
      result.reason = StopReason::diverged;
      break;
    }
    if ((it + 1) % decimation == 0) {
      result.trajectory_iters.push_back(it + 1);
      result.trajectory.push_back(theta);
    }
    if ((it + 1) % options.stall_window == 0) {
      if ((theta - anchor).cwiseAbs().maxCoeff() < options.tol_step) {
        ++it;
        result.reason = StopReason::stalled;
        break;
      }
      anchor = theta;
    }
  }

  result.iterations = it;
  result.theta_final = theta;
  if (result.trajectory_iters.back() != it) {
    result.trajectory_iters.push_back(it);
    result.trajectory.push_back(theta);
  }
  result.diverged = result.reason == StopReason::diverged;
  result.saturated = result.reason == StopReason::saturated;
  result.converged = result.reason == StopReason::gradient_vanished || result.reason == StopReason::stalled ||
                     result.reason == StopReason::saturated;

  if (policy && !result.diverged) {
    result.terminal_policy = policy_probs(*policy, theta);
    result.scores = score_policy(*field.mdp(), *policy, theta, options.score_gamma.value_or(field.gamma()),
                                 options.envelope_budget);
  } else if (policy && theta.allFinite()) {
    result.terminal_policy = policy_probs(*policy, theta);
  }
  return result;
}

}  // namespace pgbias
