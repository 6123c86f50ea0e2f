#include "pgbias/sampling.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "pgbias/solvers.hpp"

namespace pgbias {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

Index sample_index(const auto& weights, double u) {
  double cumulative = 0.0;
  Index last = -1;
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    cumulative += weights(i);
    last = i;
    if (u < cumulative) return i;
  }
  return last;  // round-off left u above the final cumulative sum
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

std::array<std::uint32_t, 4> CounterRng::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

CounterRng::result_type CounterRng::operator()() {
  if (used_ == 4) {
    buffer_ = block({static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                    key_);
    ++position_;
    used_ = 0;
  }
  return buffer_[used_++];
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t hi = (*this)();
  return (hi << 32) | (*this)();
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

long default_horizon_cap(const TabularMDP& mdp, const Eigen::MatrixXd& probs) {
  const double expected = expected_absorption_time(mdp, probs);
  return std::max(1L, static_cast<long>(std::ceil(100.0 * std::max(expected, 1.0))));
}

TrajectoryBatch simulate(const TabularMDP& mdp, const PolicyParameterization& policy, const Eigen::VectorXd& theta,
                         long n_episodes, std::uint64_t seed, const SimulationOptions& options) {
  if (n_episodes < 0) throw std::invalid_argument("episode count must be non-negative");
  const Eigen::MatrixXd probs = policy_probs(policy, theta);
  TrajectoryBatch batch;
  batch.theta = theta;
  batch.seed = seed;
  batch.horizon_cap = options.horizon_cap > 0 ? options.horizon_cap : default_horizon_cap(mdp, probs);
  if (batch.horizon_cap < 1) throw std::invalid_argument("horizon cap must be at least 1");
  batch.episodes.resize(n_episodes);

  auto run = [&](long begin, long end) {
    for (long e = begin; e < end; ++e) {
      CounterRng rng(seed, static_cast<std::uint64_t>(e));
      Trajectory& traj = batch.episodes[e];
      traj.episode = static_cast<std::uint64_t>(e);
      Index state = sample_index(mdp.initial, rng.uniform());
      while (state != mdp.terminal) {
        if (static_cast<long>(traj.steps.size()) >= batch.horizon_cap) {
          traj.truncated = true;
          break;
        }
        const Index action = sample_index(probs.row(state), rng.uniform());
        traj.steps.push_back({state, action, mdp.reward(state, action)});
        state = sample_index(mdp.transitions[action].row(state), rng.uniform());
      }
    }
  };

  const long jobs = std::clamp<long>(options.jobs, 1, std::max(1L, n_episodes));
  if (jobs == 1) {
    run(0, n_episodes);
  } else {
    std::vector<std::thread> workers;
    const long chunk = (n_episodes + jobs - 1) / jobs;
    for (long j = 0; j < jobs; ++j) {
      const long begin = j * chunk;
      const long end = std::min(n_episodes, begin + chunk);
      if (begin < end) workers.emplace_back(run, begin, end);
    }
    for (auto& w : workers) w.join();
  }
  for (const auto& t : batch.episodes) batch.truncated_count += t.truncated ? 1 : 0;
  return batch;
}

EstimatorReport mc_gradient(const TrajectoryBatch& batch, const PolicyParameterization& policy,
                            const Eigen::VectorXd& theta, double gamma, bool weighted) {
  if (theta.size() != batch.theta.size() || theta != batch.theta)
    throw std::invalid_argument("trajectories were generated under a different theta");
  const Eigen::MatrixXd psi = compatible_features(policy, policy_probs(policy, theta));
  const Index na = policy.slots.cols();
  const Index k = policy.num_params;

  EstimatorReport report;
  report.estimator = weighted ? "weighted" : "unweighted";
  report.gamma = gamma;
  report.seed = batch.seed;
  report.episodes = static_cast<long>(batch.episodes.size());

  // Welford accumulation in episode order keeps the result bit-reproducible.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd sample(k);
  long n = 0;
  for (const auto& traj : batch.episodes) {
    sample.setZero();
    double ret = 0.0;
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
      ret = it->reward + gamma * ret;
      const auto t = static_cast<int>(traj.steps.rend() - it - 1);
      const double weight = weighted ? std::pow(gamma, t) : 1.0;
      sample += (weight * ret) * psi.row(it->state * na + it->action).transpose();
    }
    ++n;
    const Eigen::VectorXd delta = sample - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(sample - mean);
  }
  report.mean = mean;
  report.standard_error = n > 1 ? Eigen::VectorXd((m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt())
                                : Eigen::VectorXd::Zero(k);
  return report;
}

ReturnEstimate discounted_returns(const TrajectoryBatch& batch, double gamma) {
  ReturnEstimate est;
  double mean = 0.0, m2 = 0.0;
  long n = 0;
  for (const auto& traj : batch.episodes) {
    double ret = 0.0;
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) ret = it->reward + gamma * ret;
    ++n;
    const double delta = ret - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (ret - mean);
  }
  est.mean = mean;
  est.episodes = n;
  est.standard_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return est;
}

Eigen::MatrixXd empirical_visitation(const TabularMDP& mdp, const TrajectoryBatch& batch, int horizon) {
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(horizon + 1, mdp.num_states());
  for (const auto& traj : batch.episodes) {
    for (int t = 0; t <= horizon; ++t) {
      if (t < static_cast<int>(traj.steps.size())) freq(t, traj.steps[t].state) += 1.0;
      else if (!traj.truncated) freq(t, mdp.terminal) += 1.0;
    }
  }
  if (!batch.episodes.empty()) freq /= static_cast<double>(batch.episodes.size());
  return freq;
}

}  // namespace pgbias
