#include "pgbias/solvers.hpp"

#include <cmath>
#include <limits>

namespace pgbias {

namespace {

constexpr int kMaxSeriesHorizon = 1'000'000;

double row_sum_norm(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

ContractionBound transient_contraction(const Eigen::MatrixXd& block, int max_power) {
  ContractionBound bound;
  if (block.rows() == 0) {
    bound.contracting = true;
    return bound;
  }
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(block.rows(), block.cols());
  double partial = 0.0;  // Σ_{j<m} ‖P^j‖∞
  for (int m = 1; m <= max_power; ++m) {
    partial += row_sum_norm(power);
    power = power * block;
    const double norm = row_sum_norm(power);
    if (norm < 1.0) {
      bound.power = m;
      bound.norm = norm;
      bound.tail_factor = partial / (1.0 - norm) - 1.0;
      bound.contracting = true;
      return bound;
    }
  }
  bound.power = max_power;
  bound.norm = row_sum_norm(power);
  bound.tail_factor = std::numeric_limits<double>::infinity();
  return bound;
}

VisitationSeries visitation_series(const TabularMDP& mdp, const PolicyParameterization& policy,
                                   const Eigen::VectorXd& theta, int horizon) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  const Eigen::MatrixXd probs = policy_probs(policy, theta);
  const Eigen::MatrixXd p_pi = policy_transition(mdp, probs);
  const auto transient = mdp.transient_states();

  VisitationSeries out;
  out.probability.resize(horizon + 1, mdp.num_states());
  Eigen::RowVectorXd row = mdp.initial.transpose();
  out.probability.row(0) = row;
  for (int t = 1; t <= horizon; ++t) {
    row = row * p_pi;
    out.probability.row(t) = row;
  }
  const auto bound = transient_contraction(p_pi(transient, transient));
  const double last = row(transient).cwiseAbs().sum();
  out.tail_bound = last == 0.0 ? 0.0 : last * bound.tail_factor;
  return out;
}

OccupancyMeasure occupancy_measure(const TabularMDP& mdp, const PolicyParameterization& policy,
                                   const Eigen::VectorXd& theta, double gamma, std::optional<double> beta) {
  const Eigen::MatrixXd probs = policy_probs(policy, theta);
  OccupancyMeasure out;
  out.beta = beta.value_or(gamma);
  out.d = occupancy_weights<double>(mdp, probs, gamma);
  out.visitation_discounted = discounted_visitation<double>(mdp, probs, out.beta);

  const auto transient = mdp.transient_states();
  const Eigen::MatrixXd p_tt = policy_transition(mdp, probs)(transient, transient);
  const auto bound = transient_contraction(p_tt);

  Eigen::RowVectorXd row = mdp.initial(transient).transpose();
  Eigen::RowVectorXd later = Eigen::RowVectorXd::Zero(row.size());
  int t = 0;
  auto tail = [&] {
    const double mass = row.cwiseAbs().sum();
    return mass == 0.0 ? 0.0 : mass * bound.tail_factor;
  };
  while (!(tail() < kSeriesTolerance) && t < kMaxSeriesHorizon) {
    row = row * p_tt;
    later += row;
    ++t;
  }
  out.truncation_horizon = t;
  out.tail_bound = (1.0 - gamma) * tail();
  out.series_d = Eigen::VectorXd::Zero(mdp.num_states());
  out.series_d(transient) = mdp.initial(transient) + (1.0 - gamma) * later.transpose();
  return out;
}

double weight_sequence_check(double gamma, int i_max) {
  double worst = 0.0;
  for (int i = 0; i <= i_max; ++i) {
    double sum = 0.0;
    for (int t = 0; t <= i; ++t) {
      const double w = t == 0 ? 1.0 : 1.0 - gamma;
      sum += w * std::pow(gamma, i - t);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

double expected_absorption_time(const TabularMDP& mdp, const Eigen::MatrixXd& probs) {
  const auto transient = mdp.transient_states();
  const Index nt = static_cast<Index>(transient.size());
  if (nt == 0) return 0.0;
  const Eigen::MatrixXd p_tt = policy_transition(mdp, probs)(transient, transient);
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(nt, nt) - p_tt;
  Eigen::MatrixXd ones = Eigen::VectorXd::Ones(nt);
  return solve_dense<double>(lhs, ones).maxCoeff();
}

}  // namespace pgbias
