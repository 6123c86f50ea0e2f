#include "pgbias/report_json.hpp"

namespace pgbias {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

json to_json(const SymmetryReport& r) {
  return {{"field", r.field},       {"gamma", r.gamma},   {"theta", to_json(r.theta)},
          {"method", to_string(r.method)}, {"h", r.step}, {"jacobian", to_json(r.jacobian)},
          {"defect", r.defect}};
}

json to_json(const CirculationReport& r) {
  return {{"field", r.field},
          {"gamma", r.gamma},
          {"rect", {r.rect.lo1, r.rect.hi1, r.rect.lo2, r.rect.hi2}},
          {"slice", {r.slice.first, r.slice.second}},
          {"orientation", r.orientation == Orientation::clockwise ? "clockwise" : "counterclockwise"},
          {"steps", r.steps},
          {"value", r.value},
          {"trapezoid", r.trapezoid},
          {"refined", r.refined},
          {"error_bound", r.error_bound}};
}

json to_json(const PolicyScores& s) {
  json out = {{"gamma", s.gamma}, {"J_gamma", s.discounted}, {"J", s.undiscounted}};
  json env = {{"available", s.envelope.available}, {"notice", s.envelope.notice},
              {"policies_evaluated", s.envelope.policies_evaluated},
              {"non_episodic_skipped", s.envelope.non_episodic_skipped}};
  if (s.envelope.available) {
    env["J_gamma_min"] = s.envelope.discounted_min;
    env["J_gamma_max"] = s.envelope.discounted_max;
    env["J_min"] = s.envelope.undiscounted_min;
    env["J_max"] = s.envelope.undiscounted_max;
  }
  out["envelope"] = std::move(env);
  if (s.rounded_policy) {
    out["rounded"] = {{"policy", to_json(*s.rounded_policy)},
                      {"J_gamma", s.rounded_discounted},
                      {"J", s.rounded_undiscounted}};
  }
  return out;
}

json to_json(const FlowResult& r) {
  json traj = json::array();
  for (std::size_t i = 0; i < r.trajectory.size(); ++i)
    traj.push_back({{"iter", r.trajectory_iters[i]}, {"theta", to_json(r.trajectory[i])}});
  json out = {{"iterations", r.iterations},
              {"stop_reason", to_string(r.reason)},
              {"converged", r.converged},
              {"saturated", r.saturated},
              {"diverged", r.diverged},
              {"final_field_norm", r.final_field_norm},
              {"theta_final", to_json(r.theta_final)},
              {"terminal_policy", to_json(r.terminal_policy)},
              {"trajectory", std::move(traj)}};
  out["scores"] = r.scores ? to_json(*r.scores) : json(nullptr);
  return out;
}

json to_json(const EstimatorReport& r) {
  return {{"estimator", r.estimator}, {"gamma", r.gamma},       {"seed", r.seed},
          {"episodes", r.episodes},   {"mean", to_json(r.mean)}, {"standard_error", to_json(r.standard_error)}};
}

json to_json(const Trajectory& t, const TabularMDP& mdp) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back({mdp.states[s.state], mdp.actions[s.action], s.reward});
  return {{"episode", t.episode}, {"truncated", t.truncated}, {"steps", std::move(steps)}};
}

json describe(const GalleryEntry& e) {
  return {{"name", e.name},
          {"gamma_probe", e.gamma_probe},
          {"policy_kind", to_string(e.policy.kind)},
          {"num_params", e.policy.num_params},
          {"provenance", e.provenance},
          {"expected_behavior", e.expected_behavior}};
}

}  // namespace pgbias
