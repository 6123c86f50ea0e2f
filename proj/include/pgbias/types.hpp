#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

namespace pgbias {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Forward-mode dual number with a dynamic derivative vector. Every templated
/// numeric routine in this library accepts it, which is how parameter fields
/// get exact Jacobians.
using Dual = Eigen::AutoDiffScalar<Eigen::VectorXd>;

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }

template <typename Derived>
Eigen::MatrixXd values_of(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  return m.unaryExpr([](const Scalar& x) { return value_of(x); });
}

/// The transient linear system (I - beta P) is singular or numerically so.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed MDP document. `field` names the offending JSON location.
class MdpFormatError : public std::runtime_error {
 public:
  MdpFormatError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace pgbias
