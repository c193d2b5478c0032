#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace lagbem {

template <class Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <class Scalar> using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <class Scalar> using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar> using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Configuration / geometry problems. Carries the offending field name;
// the CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Breakdown inside the numeric pipeline. Carries the offending Laguerre
// order; the CLI maps this to exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(int order, const std::string& message)
      : std::runtime_error("order " + std::to_string(order) + ": " + message), order_(order) {}
  int order() const { return order_; }

 private:
  int order_;
};

}  // namespace lagbem
