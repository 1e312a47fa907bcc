#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "wavebound/grid.hpp"

namespace wavebound {

/// One standing mode: u(x,0) = a sin(k pi x), p(x,0) = b cos(k pi x).
/// k = 0 is the steady constant-p mode (u = 0, p = b).
struct ModeSpec {
  int k = 1;
  double a = 1.0;
  double b = 1.0;
};

struct FieldValue {
  double u = 0.0;
  double p = 0.0;
};

/// u = -sqrt2 sin(k pi t - pi/4) sin(k pi x),  p = sqrt2 cos(k pi t - pi/4) cos(k pi x).
inline FieldValue exact_mode(int k, double x, double t) {
  using std::numbers::pi;
  const double kp = k * pi;
  return {-std::numbers::sqrt2 * std::sin(kp * t - pi / 4) * std::sin(kp * x),
          std::numbers::sqrt2 * std::cos(kp * t - pi / 4) * std::cos(kp * x)};
}

inline FieldValue exact_superposition(const std::vector<ModeSpec>& modes, double x, double t) {
  using std::numbers::pi;
  FieldValue out;
  for (const ModeSpec& m : modes) {
    const double w = m.k * pi;
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    out.u += (m.a * c - m.b * s) * std::sin(w * x);
    out.p += (m.b * c + m.a * s) * std::cos(w * x);
  }
  return out;
}

inline void validate_modes(const std::vector<ModeSpec>& modes) {
  std::set<int> seen;
  for (const ModeSpec& m : modes) {
    require(m.k >= 0, "ModeSpec: k must be non-negative");
    require(seen.insert(m.k).second, "ModeSpec: mode numbers must be distinct");
  }
}

using ScalarFunction = std::function<double(double)>;

namespace detail {
// Composite 4-point Gauss-Legendre on `panels` equal panels of [0, 1].
inline double integrate_unit(const ScalarFunction& f, int panels) {
  static constexpr double nodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                      0.8611363115940526};
  static constexpr double weights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                        0.3478548451374538};
  const double w = 1.0 / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * w;
    for (int q = 0; q < 4; ++q) sum += weights[q] * f(mid + 0.5 * w * nodes[q]);
  }
  return 0.5 * w * sum;
}
}  // namespace detail

/// Sine coefficients of u0 and cosine coefficients of p0 for k = 1..k_max,
/// preceded by the k = 0 mean of p0 when it is non-zero.
inline std::vector<ModeSpec> project_initial(const ScalarFunction& u0, const ScalarFunction& p0, int k_max,
                                             int panels = 0) {
  using std::numbers::pi;
  require(k_max >= 1, "project_initial: k_max must be at least 1");
  if (panels <= 0) panels = 10 * (k_max + 1);

  std::vector<ModeSpec> modes;
  const double mean = detail::integrate_unit(p0, panels);
  if (mean != 0.0) modes.push_back({0, 0.0, mean});
  for (int k = 1; k <= k_max; ++k) {
    const double w = k * pi;
    const double a = 2.0 * detail::integrate_unit([&](double x) { return u0(x) * std::sin(w * x); }, panels);
    const double b = 2.0 * detail::integrate_unit([&](double x) { return p0(x) * std::cos(w * x); }, panels);
    modes.push_back({k, a, b});
  }
  return modes;
}

/// Exact fields at every leapfrog level 0..n_steps on the model grid.
struct Observations {
  GridSpec grid;
  std::vector<double> times;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> p;

  int levels() const { return static_cast<int>(times.size()); }

  State state(int level) const {
    const auto k = static_cast<std::size_t>(level);
    return State{u[k], p[k], times[k]};
  }
};

inline State sample_state(const std::vector<ModeSpec>& modes, const GridSpec& grid, double t) {
  State s = State::zero(grid, t);
  for (int i = 1; i < grid.N; ++i) s.u[static_cast<std::size_t>(i)] = exact_superposition(modes, grid.x_u(i), t).u;
  for (int m = 0; m < grid.N; ++m) s.p[static_cast<std::size_t>(m)] = exact_superposition(modes, grid.x_p(m), t).p;
  return s;
}

inline Observations sample_observations(const std::vector<ModeSpec>& modes, const GridSpec& grid) {
  using std::numbers::pi;
  validate_modes(modes);
  for (const ModeSpec& m : modes) require(m.k <= grid.N - 1, "sample_observations: mode not resolvable on this grid");

  // Separable evaluation: spatial profiles once, time factors per level.
  const std::size_t nm = modes.size();
  std::vector<std::vector<double>> sin_u(nm), cos_p(nm);
  for (std::size_t q = 0; q < nm; ++q) {
    const double w = modes[q].k * pi;
    for (int i = 0; i <= grid.N; ++i) sin_u[q].push_back(std::sin(w * grid.x_u(i)));
    for (int m = 0; m < grid.N; ++m) cos_p[q].push_back(std::cos(w * grid.x_p(m)));
  }

  Observations obs{grid, {}, {}, {}};
  const auto levels = static_cast<std::size_t>(grid.n_steps) + 1;
  obs.times.reserve(levels);
  obs.u.reserve(levels);
  obs.p.reserve(levels);
  for (int n = 0; n <= grid.n_steps; ++n) {
    const double t = grid.time(n);
    State s = State::zero(grid, t);
    for (std::size_t q = 0; q < nm; ++q) {
      const ModeSpec& md = modes[q];
      const double c = std::cos(md.k * pi * t);
      const double sn = std::sin(md.k * pi * t);
      const double fu = md.a * c - md.b * sn;
      const double fp = md.b * c + md.a * sn;
      for (int i = 1; i < grid.N; ++i) s.u[static_cast<std::size_t>(i)] += fu * sin_u[q][static_cast<std::size_t>(i)];
      for (std::size_t m = 0; m < grid.p_size(); ++m) s.p[m] += fp * cos_p[q][m];
    }
    obs.times.push_back(t);
    obs.u.push_back(std::move(s.u));
    obs.p.push_back(std::move(s.p));
  }
  return obs;
}

}  // namespace wavebound
