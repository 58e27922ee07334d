#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace pulseopt {

inline constexpr double kFourLn2 = 2.772588722239781;  // 4 ln 2

/// Gaussian envelope with the given full width at half maximum.
inline double gaussian_fwhm(double t, double center, double fwhm) {
  const double u = (t - center) / fwhm;
  return std::exp(-kFourLn2 * u * u);
}

/// Trapezoid integral of uniformly sampled values with spacing dt.
template <typename Derived>
double trapezoid(const Eigen::DenseBase<Derived>& y, double dt) {
  const auto n = y.size();
  if (n < 2) return 0.0;
  return dt * (y.sum() - 0.5 * (y[0] + y[n - 1]));
}

/// Value of the piecewise-linear interpolant of uniform samples at time t.
/// Outside the sampled span the series is taken as constant at its end values.
template <typename Derived>
double sample_at(const Eigen::DenseBase<Derived>& y, double t0, double dt, double t) {
  const auto n = y.size();
  const double x = (t - t0) / dt;
  if (x <= 0.0) return y[0];
  if (x >= static_cast<double>(n - 1)) return y[n - 1];
  const auto i = static_cast<Eigen::Index>(x);
  const double f = x - static_cast<double>(i);
  return y[i] + f * (y[i + 1] - y[i]);
}

/// Integral of the piecewise-linear interpolant of uniform samples over [a, b].
/// The window is clipped to the sampled span; fractional window edges are
/// handled exactly for the interpolant.
template <typename Derived>
double trapezoid_window(const Eigen::DenseBase<Derived>& y, double t0, double dt,
                        double a, double b) {
  const auto n = y.size();
  if (n < 2 || b <= a) return 0.0;
  const double span_end = t0 + dt * static_cast<double>(n - 1);
  a = std::max(a, t0);
  b = std::min(b, span_end);
  if (b <= a) return 0.0;

  const double xa = (a - t0) / dt;
  const double xb = (b - t0) / dt;
  const auto ia = std::min(static_cast<Eigen::Index>(xa), n - 2);
  const auto ib = std::min(static_cast<Eigen::Index>(xb), n - 2);

  auto seg = [&](Eigen::Index i, double u0, double u1) {
    // integral over fractional positions [u0, u1] within segment i
    const double yl = y[i], yr = y[i + 1];
    const double v0 = yl + u0 * (yr - yl);
    const double v1 = yl + u1 * (yr - yl);
    return 0.5 * (v0 + v1) * (u1 - u0) * dt;
  };

  if (ia == ib) return seg(ia, xa - ia, xb - ia);

  double total = seg(ia, xa - ia, 1.0);
  for (Eigen::Index i = ia + 1; i < ib; ++i)
    total += 0.5 * (y[i] + y[i + 1]) * dt;
  total += seg(ib, 0.0, xb - ib);
  return total;
}

/// Linear-interpolated quantile (the common "type 7" definition) of a sorted
/// sample; p in [0, 1].
inline double quantile_sorted(const Eigen::ArrayXd& sorted, double p) {
  const auto n = sorted.size();
  if (n == 0) throw std::invalid_argument("quantile of empty sample");
  if (n == 1) return sorted[0];
  const double x = p * static_cast<double>(n - 1);
  const auto i = std::min(static_cast<Eigen::Index>(x), n - 2);
  const double f = x - static_cast<double>(i);
  return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

}  // namespace pulseopt
