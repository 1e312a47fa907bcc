#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "wavebound/exact.hpp"
#include "wavebound/grid.hpp"
#include "wavebound/objective.hpp"

namespace wavebound {

// Dispersion formulas take the mode number k and use the angular
// wavenumber kappa = k*pi internally. beta is the ratio by which the
// closed-form analysis rescales the continuous wave speed; beta - 1 is the
// reported velocity error.

inline double beta2(double k, double h, double tau) {
  const double kappa = k * std::numbers::pi;
  // kappa * (h / 2) rounds exactly like kappa * tau when tau = h / 2, so beta2 = 1 there.
  const double s = std::sin(kappa * (0.5 * h));
  require(s != 0.0, "beta2: sin(kappa h / 2) vanishes");
  return h * std::sin(kappa * tau) / (2.0 * tau * s);
}

inline double beta4(double k, double h, double tau) {
  const double kappa = k * std::numbers::pi;
  const double denom = 27.0 * tau * std::sin(0.5 * kappa * h) - tau * std::sin(1.5 * kappa * h);
  require(denom != 0.0, "beta4: denominator vanishes");
  return 12.0 * h * std::sin(kappa * tau) / denom;
}

inline double beta_for_order(int order, double k, double h, double tau) {
  if (order == 2) return beta2(k, h, tau);
  if (order == 4) return beta4(k, h, tau);
  throw contract_error("beta_for_order: order must be 2 or 4");
}

/// Boundary cell length, relative to h, that lets a wave of speed error
/// beta cross the whole interval in the exact travel time.
inline double h_modified_ratio(int N, double beta) { return 1.0 - 0.5 * N * (beta - 1.0) / beta; }

inline double predicted_c_u(int N, double beta) { return 1.0 / h_modified_ratio(N, beta); }

/// dp/dx at node 1 spans half of the modified cell and half of a regular one.
inline double predicted_c_p(int N, double beta) { return 2.0 / (h_modified_ratio(N, beta) + 1.0); }

/// Slope of the line of (alpha^p_0, alpha^p_1) pairs giving the same
/// derivative on a cos(k pi x) profile.
inline double kernel_tangent(double k, double h) {
  const double c = std::cos(0.5 * k * std::numbers::pi * h);
  return -1.0 / (4.0 * c * c - 3.0);
}

/// Time after which the numerical wave lags the exact one by a full period.
inline double period_shift_time(double k, double beta) { return (2.0 / k) / (beta - 1.0); }

/// Predicted u-coefficient for the second-order scheme as a function of the
/// angular wavenumber kappa (not restricted to integer modes).
inline double second_order_c(double kappa, double h, double tau) {
  const double st = std::sin(kappa * tau);
  return h * h * st / ((h * h - 0.5 * h) * st + tau * std::sin(0.5 * kappa * h));
}

inline double second_order_c_denominator(double kappa, double h, double tau) {
  return (h * h - 0.5 * h) * std::sin(kappa * tau) + tau * std::sin(0.5 * kappa * h);
}

/// Smallest angular wavenumber at which the second-order coefficient
/// changes sign (the predicted boundary scheme becomes unstable beyond it).
inline double second_order_c_singularity(double h, double tau) {
  const double kappa_max = 2.0 * std::numbers::pi / h;
  const int samples = 4096;
  double a = kappa_max / samples;
  double fa = second_order_c_denominator(a, h, tau);
  for (int i = 2; i <= samples; ++i) {
    double b = kappa_max * i / samples;
    const double fb = second_order_c_denominator(b, h, tau);
    if ((fa > 0.0) != (fb > 0.0)) {
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = second_order_c_denominator(m, h, tau);
        if ((fm > 0.0) == (fa > 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
    a = b;
    fa = fb;
  }
  throw contract_error("second_order_c_singularity: no sign change below 2 pi / h");
}

struct DispersionReport {
  int k = 0;
  double beta2 = 0.0;
  double beta4 = 0.0;
  /// Evaluated with the beta of the requested interior order.
  double h_mod_ratio = 0.0;
  double c_u = 0.0;
  double c_p = 0.0;
  double T_shift = 0.0;
  double kernel_tangent = 0.0;
};

inline DispersionReport dispersion_report(int k, const GridSpec& grid, int order = 2) {
  DispersionReport r;
  r.k = k;
  r.beta2 = beta2(k, grid.h, grid.tau);
  r.beta4 = beta4(k, grid.h, grid.tau);
  const double beta = order == 4 ? r.beta4 : r.beta2;
  r.h_mod_ratio = h_modified_ratio(grid.N, beta);
  r.c_u = predicted_c_u(grid.N, beta);
  r.c_p = predicted_c_p(grid.N, beta);
  r.T_shift = period_shift_time(k, beta);
  r.kernel_tangent = kernel_tangent(k, grid.h);
  return r;
}

/// Plain grid sum of squared u and p errors (all N+1 nodes, all N half-nodes).
/// This is state_norm2 / h; a pi phase slip of the unit mode on 30 cells
/// gives 120.
inline double grid_error_sum(const State& s, const State& ref) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) e += (s.u[i] - ref.u[i]) * (s.u[i] - ref.u[i]);
  for (std::size_t i = 0; i < s.p.size(); ++i) e += (s.p[i] - ref.p[i]) * (s.p[i] - ref.p[i]);
  return e;
}

struct XiPoint {
  double t = 0.0;
  double xi = 0.0;
};

/// Error against the exact solution of `modes` at every leapfrog level.
inline std::vector<XiPoint> xi_series(const Trajectory& traj, const std::vector<ModeSpec>& modes,
                                      const GridSpec& grid) {
  std::vector<XiPoint> out;
  out.reserve(traj.states.size());
  for (const State& s : traj.states) out.push_back({s.t, grid_error_sum(s, sample_state(modes, grid, s.t))});
  return out;
}

/// Same as above against pre-sampled exact fields; obs must cover the trajectory.
inline std::vector<XiPoint> xi_series(const Trajectory& traj, const Observations& obs) {
  require(obs.levels() >= traj.levels(), "xi_series: observations do not cover the trajectory");
  std::vector<XiPoint> out;
  out.reserve(traj.states.size());
  for (int n = 0; n < traj.levels(); ++n) {
    const auto k = static_cast<std::size_t>(n);
    out.push_back({traj.states[k].t, grid_error_sum(traj.states[k], obs.state(n))});
  }
  return out;
}

struct KernelLine {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square vertical distance of the points from the line.
  double residual = 0.0;
};

inline KernelLine fit_kernel_line(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 2, "fit_kernel_line: need at least two points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  require(sxx > 0.0, "fit_kernel_line: abscissae must not all coincide");
  KernelLine line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - (line.slope * x + line.intercept);
    ss += r * r;
  }
  line.residual = std::sqrt(ss / n);
  return line;
}

}  // namespace wavebound
