#include "pgbias/mdp.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace pgbias {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string pair_location(const TabularMDP& mdp, Index s, Index a) {
  return "(" + mdp.states[s] + ", " + mdp.actions[a] + ")";
}

template <typename T>
Index find_name(const std::vector<T>& names, std::string_view name, const char* what) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Index>(i);
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

}  // namespace

TabularMDP TabularMDP::make(std::vector<std::string> states, std::vector<std::string> actions,
                            std::string_view terminal, double gamma) {
  TabularMDP mdp;
  mdp.states = std::move(states);
  mdp.actions = std::move(actions);
  mdp.terminal = mdp.state_index(terminal);
  mdp.gamma = gamma;
  const Index n = mdp.num_states();
  mdp.transitions.assign(mdp.actions.size(), Eigen::MatrixXd::Zero(n, n));
  for (auto& p : mdp.transitions) p(mdp.terminal, mdp.terminal) = 1.0;
  mdp.reward = Eigen::MatrixXd::Zero(n, mdp.num_actions());
  mdp.initial = Eigen::VectorXd::Zero(n);
  return mdp;
}

Index TabularMDP::state_index(std::string_view name) const { return find_name(states, name, "state"); }
Index TabularMDP::action_index(std::string_view name) const { return find_name(actions, name, "action"); }

std::vector<Index> TabularMDP::transient_states() const {
  std::vector<Index> out;
  out.reserve(states.size());
  for (Index s = 0; s < num_states(); ++s)
    if (s != terminal) out.push_back(s);
  return out;
}

void TabularMDP::set_transition(std::string_view s, std::string_view a, std::string_view to, double p) {
  transitions[action_index(a)](state_index(s), state_index(to)) = p;
}

void TabularMDP::set_reward(std::string_view s, std::string_view a, double r) {
  reward(state_index(s), action_index(a)) = r;
}

void TabularMDP::set_initial(std::string_view s, double p) { initial(state_index(s)) = p; }

void TabularMDP::set_action_independent(std::string_view s, std::string_view to, double r) {
  for (const auto& a : actions) {
    transitions[action_index(a)].row(state_index(s)).setZero();
    set_transition(s, a, to, 1.0);
    set_reward(s, a, r);
  }
}

bool structurally_equal(const TabularMDP& a, const TabularMDP& b) {
  if (a.states != b.states || a.actions != b.actions || a.terminal != b.terminal || a.gamma != b.gamma)
    return false;
  if (a.transitions.size() != b.transitions.size()) return false;
  for (std::size_t i = 0; i < a.transitions.size(); ++i)
    if (a.transitions[i].rows() != b.transitions[i].rows() ||
        a.transitions[i].cols() != b.transitions[i].cols() || a.transitions[i] != b.transitions[i])
      return false;
  if (a.reward.rows() != b.reward.rows() || a.reward.cols() != b.reward.cols()) return false;
  if (a.initial.size() != b.initial.size()) return false;
  return a.reward == b.reward && a.initial == b.initial;
}

EpisodicityCertificate certify_episodicity(const TabularMDP& mdp) {
  EpisodicityCertificate cert;
  const Index n = mdp.num_states();
  const Index na = mdp.num_actions();

  Eigen::MatrixXd uniform = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : mdp.transitions) uniform += p / static_cast<double>(na);

  std::vector<char> seen(n, 0);
  std::deque<Index> queue;
  for (Index s = 0; s < n; ++s)
    if (mdp.initial(s) > 0.0) {
      seen[s] = 1;
      queue.push_back(s);
    }
  while (!queue.empty()) {
    const Index s = queue.front();
    queue.pop_front();
    cert.reachable.push_back(s);
    for (Index t = 0; t < n; ++t)
      if (uniform(s, t) > 0.0 && !seen[t]) {
        seen[t] = 1;
        queue.push_back(t);
      }
  }

  // Backward search from the terminal state.
  std::vector<char> exits(n, 0);
  exits[mdp.terminal] = 1;
  queue.push_back(mdp.terminal);
  while (!queue.empty()) {
    const Index t = queue.front();
    queue.pop_front();
    for (Index s = 0; s < n; ++s)
      if (uniform(s, t) > 0.0 && !exits[s]) {
        exits[s] = 1;
        queue.push_back(s);
      }
  }
  for (Index s : cert.reachable)
    if (!exits[s]) cert.trapped.push_back(s);

  const auto transient = mdp.transient_states();
  if (!transient.empty()) {
    Eigen::MatrixXd block = uniform(transient, transient);
    cert.spectral_radius = block.eigenvalues().cwiseAbs().maxCoeff();
  }
  cert.ok = cert.trapped.empty() && cert.spectral_radius < 1.0 - 1e-12;
  return cert;
}

ValidationReport validate_mdp(const TabularMDP& mdp) {
  ValidationReport report;
  auto fail = [&](std::string code, std::string loc, std::string msg) {
    report.violations.push_back({std::move(code), std::move(loc), std::move(msg)});
  };

  const Index n = mdp.num_states();
  const Index na = mdp.num_actions();
  if (n == 0 || na == 0) {
    fail("shape", "mdp", "state and action lists must be non-empty");
    return report;
  }
  if (mdp.terminal < 0 || mdp.terminal >= n) {
    fail("shape", "terminal", "terminal state index out of range");
    return report;
  }
  bool shapes_ok = static_cast<Index>(mdp.transitions.size()) == na && mdp.reward.rows() == n &&
                   mdp.reward.cols() == na && mdp.initial.size() == n;
  for (const auto& p : mdp.transitions) shapes_ok = shapes_ok && p.rows() == n && p.cols() == n;
  if (!shapes_ok) {
    fail("shape", "tables", "transition, reward or d0 table has the wrong dimensions");
    return report;
  }
  if (!(mdp.gamma >= 0.0 && mdp.gamma <= 1.0)) fail("gamma", "gamma", "discount must lie in [0, 1]");

  bool rows_ok = true;
  for (Index a = 0; a < na; ++a) {
    const auto& p = mdp.transitions[a];
    for (Index s = 0; s < n; ++s) {
      if ((p.row(s).array() < 0.0).any() || (p.row(s).array() > 1.0).any() || !p.row(s).allFinite()) {
        fail("probability_range", pair_location(mdp, s, a), "transition probability outside [0, 1]");
        rows_ok = false;
      }
      const double sum = p.row(s).sum();
      if (std::abs(sum - 1.0) > kSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transition row sums to " << sum;
        fail("row_sum", pair_location(mdp, s, a), msg.str());
        rows_ok = false;
      }
    }
    if (p(mdp.terminal, mdp.terminal) != 1.0)
      fail("terminal_absorbing", pair_location(mdp, mdp.terminal, a), "terminal state must self-loop with probability 1");
    if (mdp.reward(mdp.terminal, a) != 0.0)
      fail("terminal_reward", pair_location(mdp, mdp.terminal, a), "terminal state must have zero reward");
  }
  if (!mdp.reward.allFinite()) fail("reward", "rewards", "non-finite reward");

  if ((mdp.initial.array() < 0.0).any()) fail("d0_range", "d0", "negative initial probability");
  if (std::abs(mdp.initial.sum() - 1.0) > kSumTolerance) fail("d0_sum", "d0", "initial distribution must sum to 1");
  if (mdp.initial(mdp.terminal) > 0.0)
    report.notices.push_back({"d0_terminal", "d0", "episodes may start in the terminal state"});

  if (rows_ok) {
    const auto cert = certify_episodicity(mdp);
    for (Index s : cert.trapped)
      fail("episodicity", mdp.states[s], "terminal state unreachable from reachable state " + mdp.states[s]);
    if (cert.trapped.empty() && !(cert.spectral_radius < 1.0 - 1e-12)) {
      std::ostringstream msg;
      msg << "uniform-policy transient block has spectral radius " << cert.spectral_radius;
      fail("episodicity", "transitions", msg.str());
    }
  }
  return report;
}

}  // namespace pgbias
