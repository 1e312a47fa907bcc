#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavebound {

/// Raised when a caller breaks a documented precondition (sizes, ranges).
class contract_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw contract_error(what);
}

/// Uniform staggered grid on [0, 1]: u at nodes ih, p at half-nodes ih - h/2.
struct GridSpec {
  int N = 0;
  double h = 0.0;
  double tau = 0.0;
  int n_steps = 0;

  static GridSpec make(int cells, double tau, int n_steps) {
    require(cells >= 4, "GridSpec: need at least 4 cells");
    require(tau > 0.0 && std::isfinite(tau), "GridSpec: tau must be positive");
    require(n_steps >= 1, "GridSpec: n_steps must be positive");
    return GridSpec{cells, 1.0 / cells, tau, n_steps};
  }

  /// Same grid, different number of leapfrog steps.
  GridSpec with_steps(int steps) const {
    require(steps >= 1, "GridSpec: n_steps must be positive");
    GridSpec g = *this;
    g.n_steps = steps;
    return g;
  }

  double courant() const { return tau / h; }
  /// Soft guard only: runs with tau/h up to 1 are legitimate.
  bool cfl_ok() const { return courant() <= 1.0; }

  std::size_t u_size() const { return static_cast<std::size_t>(N) + 1; }
  std::size_t p_size() const { return static_cast<std::size_t>(N); }

  double x_u(int i) const { return i * h; }
  /// Position of p[m], i.e. of p_{m+1/2}.
  double x_p(int m) const { return (m + 0.5) * h; }
  double time(int level) const { return level * tau; }
};

/// Four-point interior stencil a_{-1}, a_0, a_1, a_2 on staggered offsets.
struct InteriorStencil {
  std::array<double, 4> a{};
  int order = 0;

  double operator[](int j) const { return a[static_cast<std::size_t>(j + 1)]; }

  static InteriorStencil second_order() { return {{0.0, -1.0, 1.0, 0.0}, 2}; }
  static InteriorStencil fourth_order() {
    return {{1.0 / 24.0, -27.0 / 24.0, 27.0 / 24.0, -1.0 / 24.0}, 4};
  }
  static InteriorStencil of_order(int order) {
    if (order == 2) return second_order();
    if (order == 4) return fourth_order();
    throw contract_error("InteriorStencil: order must be 2 or 4");
  }
};

/// Control coefficients of the two one-sided boundary rows on each side.
///
/// Left rows:  (dp/dx)_1 = (1/h) sum_j alpha_p[j] p_{j+1/2},
///             (du/dx)_{1/2} = (1/h) sum_j alpha_u[j] u_j.
/// Right rows: (dp/dx)_{N-1} = -(1/h) sum_j alpha_p_tilde[j] p_{N-j-1/2},
///             (du/dx)_{N-1/2} = -(1/h) sum_j alpha_u_tilde[j] u_{N-j}.
struct BoundaryScheme {
  int J = 0;
  std::vector<double> alpha_u;
  std::vector<double> alpha_p;
  std::vector<double> alpha_u_tilde;
  std::vector<double> alpha_p_tilde;

  /// First-order one-sided differences, (f_1 - f_0)/h, padded with zeros.
  static BoundaryScheme classical(int J = 1) {
    require(J >= 1, "BoundaryScheme::classical: J must be at least 1");
    std::vector<double> c(static_cast<std::size_t>(J) + 1, 0.0);
    c[0] = -1.0;
    c[1] = 1.0;
    return BoundaryScheme{J, c, c, c, c};
  }

  static BoundaryScheme zeros(int J) {
    require(J >= 0, "BoundaryScheme: J must be non-negative");
    std::vector<double> z(static_cast<std::size_t>(J) + 1, 0.0);
    return BoundaryScheme{J, z, z, z, z};
  }

  std::size_t width() const { return static_cast<std::size_t>(J) + 1; }
  std::size_t control_size() const { return 4 * width(); }

  void validate(const GridSpec& grid) const {
    require(J >= 0, "BoundaryScheme: J must be non-negative");
    require(alpha_u.size() == width() && alpha_p.size() == width() &&
                alpha_u_tilde.size() == width() && alpha_p_tilde.size() == width(),
            "BoundaryScheme: every group must hold J+1 coefficients");
    require(J + 1 <= grid.N - 1, "BoundaryScheme: stencil reaches the opposite boundary");
  }

  bool operator==(const BoundaryScheme&) const = default;
};

/// Flat control vector, laid out as
/// [a^u_0..a^u_J, ~a^u_J..~a^u_0, a^p_0..a^p_J, ~a^p_J..~a^p_0].
using ControlVector = std::vector<double>;

/// Index arithmetic for ControlVector.
struct ControlLayout {
  int J = 0;

  std::size_t size() const { return 4 * width(); }
  std::size_t width() const { return static_cast<std::size_t>(J) + 1; }
  std::size_t u(int j) const { return static_cast<std::size_t>(j); }
  std::size_t u_tilde(int j) const { return static_cast<std::size_t>(2 * J + 1 - j); }
  std::size_t p(int j) const { return static_cast<std::size_t>(2 * (J + 1) + j); }
  std::size_t p_tilde(int j) const { return static_cast<std::size_t>(4 * J + 3 - j); }
};

inline ControlVector to_control(const BoundaryScheme& bs) {
  const ControlLayout L{bs.J};
  ControlVector c(L.size());
  for (int j = 0; j <= bs.J; ++j) {
    const auto s = static_cast<std::size_t>(j);
    c[L.u(j)] = bs.alpha_u[s];
    c[L.u_tilde(j)] = bs.alpha_u_tilde[s];
    c[L.p(j)] = bs.alpha_p[s];
    c[L.p_tilde(j)] = bs.alpha_p_tilde[s];
  }
  return c;
}

inline BoundaryScheme from_control(const ControlVector& c, int J) {
  const ControlLayout L{J};
  require(c.size() == L.size(), "from_control: control vector must have 4(J+1) entries");
  BoundaryScheme bs = BoundaryScheme::zeros(J);
  for (int j = 0; j <= J; ++j) {
    const auto s = static_cast<std::size_t>(j);
    bs.alpha_u[s] = c[L.u(j)];
    bs.alpha_u_tilde[s] = c[L.u_tilde(j)];
    bs.alpha_p[s] = c[L.p(j)];
    bs.alpha_p_tilde[s] = c[L.p_tilde(j)];
  }
  return bs;
}

/// Fields at one time level. u has N+1 node values with u[0] = u[N] = 0,
/// p has N half-node values with p[m] = p_{m+1/2}.
struct State {
  std::vector<double> u;
  std::vector<double> p;
  double t = 0.0;

  static State zero(const GridSpec& grid, double t = 0.0) {
    return State{std::vector<double>(grid.u_size(), 0.0), std::vector<double>(grid.p_size(), 0.0), t};
  }

  void validate(const GridSpec& grid) const {
    require(u.size() == grid.u_size(), "State: u must have N+1 entries");
    require(p.size() == grid.p_size(), "State: p must have N entries");
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    for (double v : p) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Forward run: the tau/2 stage of the split first step and every leapfrog level.
struct Trajectory {
  State half;
  std::vector<State> states;

  int levels() const { return static_cast<int>(states.size()); }
};

}  // namespace wavebound
