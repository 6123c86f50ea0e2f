#include "pgbias/gallery.hpp"

#include <stdexcept>

#include "pgbias/sampling.hpp"

namespace pgbias {

GalleryEntry figure1() {
  GalleryEntry e;
  e.name = "figure1";
  e.gamma_probe = 0.5;
  auto mdp = TabularMDP::make({"s1", "s2", "sInf"}, {"a1", "a2"}, "sInf", e.gamma_probe);
  mdp.set_transition("s1", "a1", "s2", 1.0);
  mdp.set_transition("s1", "a2", "sInf", 1.0);
  mdp.set_transition("s2", "a1", "sInf", 1.0);
  mdp.set_transition("s2", "a2", "sInf", 1.0);
  // +1 sits on (s2, a1), matching the derivation where Q(s2, a1) = 1.
  mdp.set_reward("s2", "a1", 1.0);
  mdp.set_initial("s1", 1.0);
  e.policy = PolicyParameterization::sigmoid(mdp, {"s1", "s2"});
  e.mdp = std::move(mdp);
  e.provenance =
      "exact construction: the +1 sits on (s2, a1) so the closed-form values and partial derivatives below hold "
      "verbatim; placing it on a2 instead only relabels the actions in s2";
  e.expected_behavior = {
      "V(s1) = gamma * sigma(theta1) * sigma(theta2)",
      "occupancy d(s1) = 1, d(s2) = (1 - gamma) * sigma(theta1)",
      "biased update has mixed partials gamma*s'(t1)s'(t2) and s'(t1)s'(t2): asymmetric for every gamma < 1",
      "biased update has nonzero circulation (gamma - 1)(sigma(1) - sigma(-1))^2 around [-1, 1]^2",
  };
  return e;
}

GalleryEntry figure2(int chain_delay, double gamma_probe) {
  if (chain_delay < 2) throw std::invalid_argument("figure2 chain delay must be at least 2");
  GalleryEntry e;
  e.name = "figure2";
  e.gamma_probe = gamma_probe;
  std::vector<std::string> states = {"s1", "s2"};
  for (int i = 0; i < chain_delay; ++i) states.push_back("s" + std::to_string(3 + i));
  const std::string last_chain = states.back();
  const std::string goal = "s" + std::to_string(3 + chain_delay);
  states.push_back(goal);
  states.push_back("sInf");

  auto mdp = TabularMDP::make(states, {"a1", "a2"}, "sInf", gamma_probe);
  mdp.set_transition("s1", "a1", "s2", 1.0);
  mdp.set_reward("s1", "a1", 1.0);
  mdp.set_transition("s1", "a2", "s3", 1.0);
  mdp.set_action_independent("s2", "sInf", 0.0);
  for (int i = 0; i + 1 < chain_delay; ++i)
    mdp.set_action_independent("s" + std::to_string(3 + i), "s" + std::to_string(4 + i), 0.0);
  mdp.set_action_independent(last_chain, goal, 2.0);
  mdp.set_action_independent(goal, "sInf", 0.0);
  mdp.set_initial("s1", 1.0);
  e.policy = PolicyParameterization::sigmoid(mdp, {"s1"});
  e.mdp = std::move(mdp);
  e.provenance = "reconstruction (original diagram unavailable) built to exhibit the expected behaviour below";
  const std::string delayed = "2 * gamma^" + std::to_string(chain_delay);
  e.expected_behavior = {
      "a1 path: J = 1, J_gamma = 1; a2 path: J = 2, J_gamma = " + delayed,
      "advantage is zero in every state except s1",
      "biased-update flow chooses a1 when " + delayed + " < 1 (discount-optimal, undiscounted-pessimal)",
      "the chosen action flips at gamma* = 2^(-1/" + std::to_string(chain_delay) + ")",
  };
  return e;
}

GalleryEntry figure3() {
  GalleryEntry e;
  e.name = "figure3";
  e.gamma_probe = 0.0;
  auto mdp = TabularMDP::make({"s1", "s2", "s3", "s5", "sInf"}, {"a1", "a2"}, "sInf", e.gamma_probe);
  mdp.set_transition("s1", "a1", "s2", 1.0);
  mdp.set_reward("s1", "a1", 1.0);
  mdp.set_transition("s1", "a2", "s2", 1.0);
  mdp.set_transition("s2", "a1", "s3", 1.0);
  mdp.set_transition("s2", "a2", "s5", 1.0);
  mdp.set_reward("s2", "a2", 2.0);
  mdp.set_action_independent("s3", "sInf", 100.0);
  mdp.set_action_independent("s5", "sInf", 0.0);
  mdp.set_initial("s1", 1.0);
  e.policy = PolicyParameterization::tied(mdp, {{"s1", 0}, {"s2", 0}, {"s3", 0}, {"s5", 0}});
  e.mdp = std::move(mdp);
  e.provenance =
      "reconstruction (original diagram unavailable) built to exhibit the expected behaviour below; studied at "
      "gamma = 0; long-horizon analogues (e.g. gamma = 0.99) are not constructed";
  e.expected_behavior = {
      "always-a1 maximizes both J (= 101) and J_0 (= 1)",
      "advantages at s3 and s5 are zero",
      "biased update at gamma = 0 equals -sigma(theta)(1 - sigma(theta)) < 0 for every theta",
      "biased-update flow ends at always-a2: the minimum of both J (= 2) and J_0 (= 0)",
  };
  return e;
}

GalleryEntry random_mdp(int n_states, int n_actions, std::uint64_t seed, double reward_scale, double min_exit_prob) {
  if (n_states < 2) throw std::invalid_argument("random_mdp needs at least 2 states");
  if (n_actions < 1) throw std::invalid_argument("random_mdp needs at least 1 action");
  if (!(min_exit_prob > 0.0 && min_exit_prob <= 1.0)) throw std::invalid_argument("min_exit_prob must lie in (0, 1]");

  std::vector<std::string> states, actions;
  for (int i = 0; i + 1 < n_states; ++i) states.push_back("s" + std::to_string(i + 1));
  states.push_back("sInf");
  for (int a = 0; a < n_actions; ++a) actions.push_back("a" + std::to_string(a + 1));

  CounterRng rng(seed, 0);
  auto mdp = TabularMDP::make(states, actions, "sInf", 0.9);
  const Index terminal = mdp.terminal;
  for (Index s : mdp.transient_states()) {
    for (Index a = 0; a < n_actions; ++a) {
      // Exponential weights give a flat Dirichlet row.
      Eigen::VectorXd w(n_states);
      for (Index t = 0; t < n_states; ++t) w(t) = -std::log1p(-rng.uniform());
      w /= w.sum();
      Eigen::RowVectorXd row = (1.0 - min_exit_prob) * w.transpose();
      row(terminal) += min_exit_prob;
      mdp.transitions[a].row(s) = row / row.sum();
      mdp.reward(s, a) = reward_scale * (2.0 * rng.uniform() - 1.0);
    }
  }
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(n_states);
  for (Index s : mdp.transient_states()) d0(s) = -std::log1p(-rng.uniform());
  mdp.initial = d0 / d0.sum();

  GalleryEntry e;
  e.name = "random-" + std::to_string(n_states) + "x" + std::to_string(n_actions) + "-" + std::to_string(seed);
  e.gamma_probe = mdp.gamma;
  e.policy = PolicyParameterization::softmax(mdp);
  e.mdp = std::move(mdp);
  e.provenance = "randomly generated";
  e.expected_behavior = {"passes validation including the episodicity certificate"};
  return e;
}

std::vector<std::string> gallery_names() { return {"figure1", "figure2", "figure3"}; }

GalleryEntry gallery_entry(const std::string& name) {
  if (name == "figure1") return figure1();
  if (name == "figure2") return figure2();
  if (name == "figure3") return figure3();
  throw std::invalid_argument("unknown gallery entry '" + name + "'");
}

}  // namespace pgbias
