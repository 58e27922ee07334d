#include "pulseopt/spline.hpp"

#include <stdexcept>

namespace pulseopt {

SmoothingSpline::SmoothingSpline(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y,
                                 double lambda) {
  const Eigen::Index n = x.size();
  if (n < 2) throw std::invalid_argument("spline needs at least 2 knots");
  if (y.size() != n) throw std::invalid_argument("spline: x/y size mismatch");
  if (lambda < 0.0) throw std::invalid_argument("spline: lambda must be >= 0");
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    if (!(x[i] < x[i + 1]))
      throw std::invalid_argument("spline: knots must be strictly increasing");

  x_ = x;
  m_ = Eigen::ArrayXd::Zero(n);
  if (n == 2) {  // no curvature degrees of freedom; straight line through the data
    a_ = y;
    return;
  }

  const Eigen::ArrayXd h = x.tail(n - 1) - x.head(n - 1);
  const Eigen::Index k = n - 2;

  // Q (n x k) maps interior second derivatives to second differences,
  // R (k x k) is the curvature Gram matrix; see Green & Silverman ch. 2.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, k);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Q(j, j) = 1.0 / h[j];
    Q(j + 1, j) = -1.0 / h[j] - 1.0 / h[j + 1];
    Q(j + 2, j) = 1.0 / h[j + 1];
    R(j, j) = (h[j] + h[j + 1]) / 3.0;
    if (j + 1 < k) {
      R(j, j + 1) = h[j + 1] / 6.0;
      R(j + 1, j) = h[j + 1] / 6.0;
    }
  }

  const Eigen::VectorXd rhs = Q.transpose() * y.matrix();
  const Eigen::MatrixXd A = R + lambda * (Q.transpose() * Q);
  const Eigen::VectorXd gamma = A.ldlt().solve(rhs);

  a_ = (y.matrix() - lambda * (Q * gamma)).array();
  m_.segment(1, k) = gamma.array();
}

double SmoothingSpline::operator()(double t) const {
  const Eigen::Index n = x_.size();
  if (n == 2) {
    const double s = (a_[1] - a_[0]) / (x_[1] - x_[0]);
    return a_[0] + s * (t - x_[0]);
  }
  if (t <= x_[0]) {
    const double h = x_[1] - x_[0];
    const double slope = (a_[1] - a_[0]) / h - h * m_[1] / 6.0;
    return a_[0] + slope * (t - x_[0]);
  }
  if (t >= x_[n - 1]) {
    const double h = x_[n - 1] - x_[n - 2];
    const double slope = (a_[n - 1] - a_[n - 2]) / h + h * m_[n - 2] / 6.0;
    return a_[n - 1] + slope * (t - x_[n - 1]);
  }
  // locate the segment by bisection; knot counts are small
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (x_[mid] <= t ? lo : hi) = mid;
  }
  const double h = x_[lo + 1] - x_[lo];
  const double u = x_[lo + 1] - t;
  const double v = t - x_[lo];
  return (m_[lo] * u * u * u + m_[lo + 1] * v * v * v) / (6.0 * h) +
         (a_[lo] / h - m_[lo] * h / 6.0) * u + (a_[lo + 1] / h - m_[lo + 1] * h / 6.0) * v;
}

Eigen::ArrayXd SmoothingSpline::evaluate(const Eigen::ArrayXd& t) const {
  Eigen::ArrayXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = (*this)(t[i]);
  return out;
}

}  // namespace pulseopt
