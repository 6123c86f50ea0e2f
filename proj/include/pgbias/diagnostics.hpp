#pragma once

#include <string>
#include <utility>

#include "pgbias/fields.hpp"

namespace pgbias {

enum class JacobianMethod { analytic, finite_difference };

std::string to_string(JacobianMethod method);

/// Default central-difference step.
inline constexpr double kDefaultStep = 1e-4;

struct SymmetryReport {
  Eigen::MatrixXd jacobian;  // J(i, j) = ∂F_i/∂θ_j
  double defect = 0.0;       // max_ij |J(i, j) - J(j, i)|
  Eigen::VectorXd theta;
  double gamma = 0.0;
  JacobianMethod method = JacobianMethod::finite_difference;
  double step = kDefaultStep;
  std::string field;
};

/// Jacobian of a field at θ plus its asymmetry. Analytic mode uses the
/// field's exact Jacobian; finite-difference mode uses central differences
/// (F(θ + h e_j) - F(θ - h e_j)) / 2h.
SymmetryReport jacobian(const ParameterField& field, const Eigen::VectorXd& theta,
                        JacobianMethod method = JacobianMethod::finite_difference, double step = kDefaultStep);

double sigmoid(double x);
double sigmoid_derivative(double x);

/// Closed-form mixed partials of the biased update on the two-parameter
/// counterexample: (∂F_1/∂θ_2, ∂F_2/∂θ_1) = (γ σ′(θ1) σ′(θ2), σ′(θ1) σ′(θ2)).
std::pair<double, double> figure1_mixed_partials(const Eigen::Vector2d& theta, double gamma);

struct Rectangle {
  double lo1 = -1.0, hi1 = 1.0;  // range of the first slice coordinate
  double lo2 = -1.0, hi2 = 1.0;  // range of the second slice coordinate
};

enum class Orientation { clockwise, counterclockwise };

/// Two coordinates of θ to vary; the remaining ones stay at `base`.
struct Slice {
  Index first = 0;
  Index second = 1;
  Eigen::VectorXd base;  // empty means zeros
};

struct CirculationReport {
  Rectangle rect;
  Slice slice;
  Orientation orientation = Orientation::clockwise;
  double value = 0.0;        // Richardson-extrapolated loop integral
  double trapezoid = 0.0;    // composite trapezoid with `steps` panels per edge
  double refined = 0.0;      // same with 2 * steps panels per edge
  double error_bound = 0.0;  // |refined - trapezoid| plus a round-off floor
  int steps = 0;
  std::string field;
  double gamma = 0.0;
};

/// Loop integral ∮ F · dθ around a coordinate-aligned rectangle in a 2-D
/// slice. The default orientation is clockwise in (first, second), i.e.
/// the negative of the Green's-theorem curl integral ∬ (∂F₂/∂θ₁ - ∂F₁/∂θ₂).
CirculationReport circulation(const ParameterField& field, const Rectangle& rect, int steps = 64,
                              Slice slice = {}, Orientation orientation = Orientation::clockwise);

}  // namespace pgbias
