#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgbias/mdp.hpp"
#include "pgbias/policy.hpp"

namespace pgbias {

struct GalleryEntry {
  std::string name;
  TabularMDP mdp;
  PolicyParameterization policy;
  double gamma_probe = 0.0;               // discount the entry is meant to be studied at
  std::string provenance;
  std::vector<std::string> expected_behavior;  // each covered by an acceptance check
};

/// Two-parameter counterexample: s1 -a1-> s2, s1 -a2-> end, s2 -a1-> end with
/// reward +1, s2 -a2-> end with reward 0. π(s_i, a1) = σ(θ_i).
GalleryEntry figure1();

/// Short path worth +1 against a delayed +2: s1 -a1-> s2 (+1) -> end, or
/// s1 -a2-> s3 -> ... -> s_{delay+2} -> s_{delay+3} (+2) -> end. Only s1 is
/// parameterized.
GalleryEntry figure2(int chain_delay = 4, double gamma_probe = 0.5);

/// One tied parameter across all states: s1 -a1-> s2 (+1), s1 -a2-> s2 (0);
/// s2 -a1-> s3 (0), s2 -a2-> s5 (+2); s3 -> end (+100); s5 -> end (0).
GalleryEntry figure3();

/// Random episodic MDP with `n_states` states including the terminal one.
/// Every non-terminal row sends at least `min_exit_prob` to the terminal
/// state. Uses an independent softmax logit per (state, action).
GalleryEntry random_mdp(int n_states, int n_actions, std::uint64_t seed, double reward_scale = 1.0,
                        double min_exit_prob = 0.1);

std::vector<std::string> gallery_names();
/// figure1 | figure2 | figure3
GalleryEntry gallery_entry(const std::string& name);

}  // namespace pgbias
