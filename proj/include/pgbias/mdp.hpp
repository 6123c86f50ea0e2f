#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pgbias/types.hpp"

namespace pgbias {

/// Finite episodic MDP with dense tables and one absorbing, zero-reward
/// terminal state. States and actions are addressed by declaration order;
/// names exist for I/O.
struct TabularMDP {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  Index terminal = 0;
  std::vector<Eigen::MatrixXd> transitions;  // transitions[a](s, s')
  Eigen::MatrixXd reward;                    // reward(s, a)
  Eigen::VectorXd initial;                   // d0(s)
  double gamma = 1.0;

  /// Zero tables except the terminal self-loops.
  static TabularMDP make(std::vector<std::string> states, std::vector<std::string> actions,
                         std::string_view terminal, double gamma);

  Index num_states() const { return static_cast<Index>(states.size()); }
  Index num_actions() const { return static_cast<Index>(actions.size()); }
  Index state_index(std::string_view name) const;
  Index action_index(std::string_view name) const;

  /// Every state except the terminal one, in declaration order.
  std::vector<Index> transient_states() const;

  void set_transition(std::string_view s, std::string_view a, std::string_view to, double p);
  void set_reward(std::string_view s, std::string_view a, double r);
  void set_initial(std::string_view s, double p);

  /// Same action applied everywhere: P(s, a, to) = 1 for both actions.
  void set_action_independent(std::string_view s, std::string_view to, double r);
};

bool structurally_equal(const TabularMDP& a, const TabularMDP& b);

struct Violation {
  std::string code;      // e.g. "row_sum", "episodicity"
  std::string location;  // "(s1, a2)", "d0", ...
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> notices;  // permitted but worth flagging

  bool ok() const { return violations.empty(); }
};

struct EpisodicityCertificate {
  std::vector<Index> reachable;       // states reachable from supp(d0), uniform policy
  std::vector<Index> trapped;         // reachable states with no path to the terminal state
  double spectral_radius = 0.0;       // of the uniform policy's transient block
  bool ok = false;
};

/// Structural episodicity check under the uniform-random policy. Since every
/// representable policy is strictly positive, the same support graph applies
/// to all of them.
EpisodicityCertificate certify_episodicity(const TabularMDP& mdp);

ValidationReport validate_mdp(const TabularMDP& mdp);

}  // namespace pgbias
