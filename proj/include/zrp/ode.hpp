#pragma once

#include <cstddef>
#include <vector>

namespace zrp {

/// One classical fourth-order Runge-Kutta step of y' = rhs(t, y), in place.
/// `rhs(t, y, dydt)` must fill dydt (already sized like y).
template <typename Rhs>
void rk4_step(Rhs&& rhs, double t, double h, std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  rhs(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  rhs(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  rhs(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  rhs(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Integrates y' = rhs(t, y) from t0 to t1 with steps no longer than h.
/// The final step is shortened to land exactly on t1.
template <typename Rhs>
void rk4_integrate(Rhs&& rhs, double t0, double t1, double h, std::vector<double>& y) {
  double t = t0;
  while (t < t1) {
    const double step = (t + h >= t1) ? t1 - t : h;
    rk4_step(rhs, t, step, y);
    t = (t + h >= t1) ? t1 : t + h;
  }
}

}  // namespace zrp
