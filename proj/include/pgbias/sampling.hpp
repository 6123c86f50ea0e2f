#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pgbias/mdp.hpp"
#include "pgbias/policy.hpp"

namespace pgbias {

/// Philox4x32-10 counter-based generator. The key is the seed and the
/// counter's upper half selects a stream, so episode i of a run always draws
/// the same numbers no matter which worker generates it.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }
  result_type operator()();

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// One Philox4x32-10 block for an explicit counter and key.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

struct Step {
  Index state = 0;
  Index action = 0;
  double reward = 0.0;
};

struct Trajectory {
  std::uint64_t episode = 0;
  std::vector<Step> steps;  // stops before the terminal state
  bool truncated = false;   // horizon cap reached before absorption
};

struct TrajectoryBatch {
  Eigen::VectorXd theta;
  std::uint64_t seed = 0;
  long horizon_cap = 0;
  std::vector<Trajectory> episodes;
  long truncated_count = 0;
};

struct SimulationOptions {
  long horizon_cap = 0;  // 0: 100 x expected absorption time
  int jobs = 1;
};

long default_horizon_cap(const TabularMDP& mdp, const Eigen::MatrixXd& probs);

TrajectoryBatch simulate(const TabularMDP& mdp, const PolicyParameterization& policy, const Eigen::VectorXd& theta,
                         long n_episodes, std::uint64_t seed, const SimulationOptions& options = {});

struct EstimatorReport {
  std::string estimator;  // "weighted" or "unweighted"
  Eigen::VectorXd mean;
  Eigen::VectorXd standard_error;  // sample std / √N
  long episodes = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

/// Per-episode REINFORCE sums with the sampled return G_t in place of Q:
/// weighted Σ_t γ^t ψ(S_t, A_t) G_t, unweighted Σ_t ψ(S_t, A_t) G_t.
/// Throws std::invalid_argument if θ differs from the batch's θ.
EstimatorReport mc_gradient(const TrajectoryBatch& batch, const PolicyParameterization& policy,
                            const Eigen::VectorXd& theta, double gamma, bool weighted);

struct ReturnEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  long episodes = 0;
};

ReturnEstimate discounted_returns(const TrajectoryBatch& batch, double gamma);

/// Row t: fraction of episodes in each state at time t (absorbed episodes
/// count toward the terminal state).
Eigen::MatrixXd empirical_visitation(const TabularMDP& mdp, const TrajectoryBatch& batch, int horizon);

}  // namespace pgbias
