#pragma once

#include <Eigen/Dense>

namespace pulseopt {

/// Cubic smoothing spline (Reinsch / Green-Silverman formulation).
///
/// Minimizes  sum_i (y_i - g(x_i))^2 + lambda * integral g''(t)^2 dt
/// over natural cubic splines g with knots at the x_i. lambda = 0 gives the
/// natural interpolating cubic spline; larger lambda gives smoother fits.
class SmoothingSpline {
 public:
  /// x must be strictly increasing with at least 2 entries; lambda >= 0.
  SmoothingSpline(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, double lambda = 0.0);

  /// Spline value at t. Beyond the knot span the spline continues linearly
  /// with its boundary slope (natural end conditions).
  double operator()(double t) const;

  Eigen::ArrayXd evaluate(const Eigen::ArrayXd& t) const;

  /// Fitted values at the knots (equal to y when lambda = 0).
  const Eigen::ArrayXd& knot_values() const { return a_; }

  /// Second derivatives at the knots (zero at both ends).
  const Eigen::ArrayXd& second_derivatives() const { return m_; }

 private:
  Eigen::ArrayXd x_, a_, m_;
};

}  // namespace pulseopt
