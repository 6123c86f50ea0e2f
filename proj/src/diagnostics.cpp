#include "pgbias/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pgbias {

std::string to_string(JacobianMethod method) {
  return method == JacobianMethod::analytic ? "analytic" : "finite-difference";
}

SymmetryReport jacobian(const ParameterField& field, const Eigen::VectorXd& theta, JacobianMethod method,
                        double step) {
  SymmetryReport report;
  report.theta = theta;
  report.gamma = field.gamma();
  report.method = method;
  report.field = field.name();
  const Index k = field.dimension();

  if (method == JacobianMethod::analytic) {
    report.step = 0.0;
    report.jacobian = field.exact_jacobian(theta);
  } else {
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    report.step = step;
    report.jacobian.resize(k, k);
    for (Index j = 0; j < k; ++j) {
      Eigen::VectorXd plus = theta;
      Eigen::VectorXd minus = theta;
      plus(j) += step;
      minus(j) -= step;
      report.jacobian.col(j) = (field(plus) - field(minus)) / (2.0 * step);
    }
  }
  report.defect = k == 0 ? 0.0 : (report.jacobian - report.jacobian.transpose()).cwiseAbs().maxCoeff();
  return report;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

std::pair<double, double> figure1_mixed_partials(const Eigen::Vector2d& theta, double gamma) {
  const double product = sigmoid_derivative(theta(0)) * sigmoid_derivative(theta(1));
  return {gamma * product, product};
}

namespace {

struct LoopSum {
  double value = 0.0;
  double magnitude = 0.0;
};

LoopSum trapezoid_loop(const ParameterField& field, const Rectangle& rect, int panels, const Slice& slice,
                       const Eigen::VectorXd& base) {
  LoopSum sum;
  auto edge = [&](double x0, double y0, double x1, double y1) {
    const double dx = (x1 - x0) / panels;
    const double dy = (y1 - y0) / panels;
    for (int i = 0; i <= panels; ++i) {
      Eigen::VectorXd theta = base;
      theta(slice.first) = x0 + i * dx;
      theta(slice.second) = y0 + i * dy;
      const Eigen::VectorXd f = field(theta);
      const double weight = (i == 0 || i == panels) ? 0.5 : 1.0;
      const double term = weight * (f(slice.first) * dx + f(slice.second) * dy);
      sum.value += term;
      sum.magnitude += std::abs(term);
    }
  };
  // Counterclockwise in (first, second).
  edge(rect.lo1, rect.lo2, rect.hi1, rect.lo2);
  edge(rect.hi1, rect.lo2, rect.hi1, rect.hi2);
  edge(rect.hi1, rect.hi2, rect.lo1, rect.hi2);
  edge(rect.lo1, rect.hi2, rect.lo1, rect.lo2);
  return sum;
}

}  // namespace

CirculationReport circulation(const ParameterField& field, const Rectangle& rect, int steps, Slice slice,
                              Orientation orientation) {
  if (steps < 16) throw std::invalid_argument("circulation needs at least 16 panels per edge");
  const Index k = field.dimension();
  if (slice.first == slice.second || slice.first < 0 || slice.second < 0 || slice.first >= k || slice.second >= k)
    throw std::invalid_argument("invalid parameter slice");
  if (slice.base.size() == 0) slice.base = Eigen::VectorXd::Zero(k);
  if (slice.base.size() != k) throw std::invalid_argument("slice base has the wrong dimension");

  const LoopSum coarse = trapezoid_loop(field, rect, steps, slice, slice.base);
  const LoopSum fine = trapezoid_loop(field, rect, 2 * steps, slice, slice.base);
  const double sign = orientation == Orientation::counterclockwise ? 1.0 : -1.0;

  CirculationReport report;
  report.rect = rect;
  report.slice = slice;
  report.orientation = orientation;
  report.steps = steps;
  report.field = field.name();
  report.gamma = field.gamma();
  report.trapezoid = sign * coarse.value;
  report.refined = sign * fine.value;
  // Trapezoid error is O(h²); one Richardson step cancels it.
  report.value = (4.0 * report.refined - report.trapezoid) / 3.0;
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (coarse.magnitude + fine.magnitude);
  report.error_bound = std::abs(report.refined - report.trapezoid) + roundoff;
  return report;
}

}  // namespace pgbias
