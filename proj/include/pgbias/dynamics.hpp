#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgbias/fields.hpp"

namespace pgbias {

enum class StopReason { gradient_vanished, stalled, saturated, max_iterations, diverged };

std::string to_string(StopReason reason);

struct FlowOptions {
  double step_size = 0.05;
  long max_iters = 200'000;
  double tol_grad = 1e-8;         // stop when ‖F(θ)‖∞ falls below this
  double tol_step = 1e-12;        // ... or θ moves less than this over a window
  long stall_window = 1000;
  double saturation = 1e-3;       // ... or every parameterized state is this close to deterministic
  double divergence_bound = 1e6;  // ‖θ‖∞ beyond this is reported as divergence
  long decimation = 100;          // keep every n-th iterate in the trajectory
  std::optional<double> score_gamma;  // discount for the J_γ score; default is the field's γ
  long envelope_budget = 1L << 20;
};

struct EnvelopeScores {
  bool available = false;
  std::string notice;
  double discounted_min = 0.0, discounted_max = 0.0;
  double undiscounted_min = 0.0, undiscounted_max = 0.0;
  long policies_evaluated = 0;
  long non_episodic_skipped = 0;  // deterministic policies that never terminate
};

struct PolicyScores {
  double gamma = 0.0;
  double discounted = 0.0;    // J_γ(θ)
  double undiscounted = 0.0;  // J(θ)
  EnvelopeScores envelope;
  /// Deterministic policy the current θ points toward (argmax per parameter
  /// group) and its exact scores.
  std::optional<Eigen::MatrixXd> rounded_policy;
  double rounded_discounted = 0.0;
  double rounded_undiscounted = 0.0;
};

/// Exact objectives at θ plus the min/max of both objectives over every
/// deterministic policy the parameterization can approach (one action per
/// group of states that share a parameter row).
PolicyScores score_policy(const TabularMDP& mdp, const PolicyParameterization& policy, const Eigen::VectorXd& theta,
                          double gamma, long budget = 1L << 20);

/// True when every parameterized state puts at least 1 - tol on one action.
bool policy_saturated(const PolicyParameterization& policy, const Eigen::MatrixXd& probs, double tol);

struct FlowResult {
  std::vector<long> trajectory_iters;
  std::vector<Eigen::VectorXd> trajectory;  // decimated iterates, first and last included
  Eigen::VectorXd theta_final;
  long iterations = 0;
  StopReason reason = StopReason::max_iterations;
  bool converged = false;
  bool saturated = false;
  bool diverged = false;
  double final_field_norm = 0.0;
  Eigen::MatrixXd terminal_policy;     // empty for custom fields
  std::optional<PolicyScores> scores;  // absent for custom fields or after divergence
};

/// Fixed-step explicit ascent θ ← θ + α F(θ).
FlowResult flow(const ParameterField& field, const Eigen::VectorXd& theta0, const FlowOptions& options = {});

}  // namespace pgbias
