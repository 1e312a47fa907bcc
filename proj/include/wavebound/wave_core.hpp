#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wavebound/grid.hpp"

namespace wavebound {

/// Thrown by integrate() when the solution leaves the blow-up envelope.
class diverged_error : public std::runtime_error {
public:
  diverged_error(double t, double max_abs)
      : std::runtime_error("integration diverged at t = " + std::to_string(t)), t_(t), max_abs_(max_abs) {}

  double time() const { return t_; }
  double max_abs() const { return max_abs_; }

private:
  double t_;
  double max_abs_;
};

// Sparse structure of the two derivative matrices. visit(row, col, coef)
// is called once per non-zero; coef already carries the 1/h factor.
//
// D^(p): rows are u-nodes 1..N-1, columns are p[0..N-1].
// D^(u): rows are p[0..N-1] (half-nodes 1/2..N-1/2), columns are u-nodes 0..N.

template <class Visit>
void visit_dp(const InteriorStencil& stencil, const BoundaryScheme& bs, const GridSpec& grid, Visit&& visit) {
  const int N = grid.N;
  const double inv_h = 1.0 / grid.h;
  for (int j = 0; j <= bs.J; ++j) visit(1, j, bs.alpha_p[static_cast<std::size_t>(j)] * inv_h);
  for (int i = 2; i <= N - 2; ++i)
    for (int j = -1; j <= 2; ++j) {
      const double a = stencil[j];
      if (a != 0.0) visit(i, i + j - 1, a * inv_h);
    }
  for (int j = 0; j <= bs.J; ++j) visit(N - 1, N - j - 1, -bs.alpha_p_tilde[static_cast<std::size_t>(j)] * inv_h);
}

template <class Visit>
void visit_du(const InteriorStencil& stencil, const BoundaryScheme& bs, const GridSpec& grid, Visit&& visit) {
  const int N = grid.N;
  const double inv_h = 1.0 / grid.h;
  for (int j = 0; j <= bs.J; ++j) visit(0, j, bs.alpha_u[static_cast<std::size_t>(j)] * inv_h);
  for (int i = 1; i <= N - 2; ++i)
    for (int j = -1; j <= 2; ++j) {
      const double a = stencil[j];
      if (a != 0.0) visit(i, i + j, a * inv_h);
    }
  for (int j = 0; j <= bs.J; ++j) visit(N - 1, N - j, -bs.alpha_u_tilde[static_cast<std::size_t>(j)] * inv_h);
}

/// out_u[i] += scale * (D^(p) p)_i for interior nodes; out_u[0], out_u[N] untouched.
inline void accumulate_dp(std::span<const double> p, double scale, const InteriorStencil& stencil,
                          const BoundaryScheme& bs, const GridSpec& grid, std::span<double> out_u) {
  visit_dp(stencil, bs, grid, [&](int row, int col, double c) {
    out_u[static_cast<std::size_t>(row)] += scale * c * p[static_cast<std::size_t>(col)];
  });
}

/// out_p += scale * (D^(u) u).
inline void accumulate_du(std::span<const double> u, double scale, const InteriorStencil& stencil,
                          const BoundaryScheme& bs, const GridSpec& grid, std::span<double> out_p) {
  visit_du(stencil, bs, grid, [&](int row, int col, double c) {
    out_p[static_cast<std::size_t>(row)] += scale * c * u[static_cast<std::size_t>(col)];
  });
}

/// out_p += scale * (D^(p))^T w_u. Only interior entries of w_u are read.
inline void accumulate_dp_transpose(std::span<const double> w_u, double scale, const InteriorStencil& stencil,
                                    const BoundaryScheme& bs, const GridSpec& grid, std::span<double> out_p) {
  visit_dp(stencil, bs, grid, [&](int row, int col, double c) {
    out_p[static_cast<std::size_t>(col)] += scale * c * w_u[static_cast<std::size_t>(row)];
  });
}

/// out_u += scale * (D^(u))^T w_p. Boundary entries out_u[0], out_u[N] are left at zero.
inline void accumulate_du_transpose(std::span<const double> w_p, double scale, const InteriorStencil& stencil,
                                    const BoundaryScheme& bs, const GridSpec& grid, std::span<double> out_u) {
  const auto last = static_cast<std::size_t>(grid.N);
  visit_du(stencil, bs, grid, [&](int row, int col, double c) {
    const auto k = static_cast<std::size_t>(col);
    if (k != 0 && k != last) out_u[k] += scale * c * w_p[static_cast<std::size_t>(row)];
  });
}

/// dp/dx at the interior u-nodes; element i-1 holds row i, i = 1..N-1.
inline std::vector<double> derivative_p(std::span<const double> p, const InteriorStencil& stencil,
                                        const BoundaryScheme& bs, const GridSpec& grid) {
  bs.validate(grid);
  require(p.size() == grid.p_size(), "derivative_p: p must have N entries");
  std::vector<double> full(grid.u_size(), 0.0);
  accumulate_dp(p, 1.0, stencil, bs, grid, full);
  return {full.begin() + 1, full.end() - 1};
}

/// du/dx at the half-nodes; element m holds the value at (m + 1/2)h.
inline std::vector<double> derivative_u(std::span<const double> u, const InteriorStencil& stencil,
                                        const BoundaryScheme& bs, const GridSpec& grid) {
  bs.validate(grid);
  require(u.size() == grid.u_size(), "derivative_u: u must have N+1 entries");
  std::vector<double> out(grid.p_size(), 0.0);
  accumulate_du(u, 1.0, stencil, bs, grid, out);
  return out;
}

/// Two-stage start: Euler to tau/2, then a midpoint step to tau.
inline std::pair<State, State> first_step(const State& ic, const InteriorStencil& stencil, const BoundaryScheme& bs,
                                          const GridSpec& grid) {
  bs.validate(grid);
  ic.validate(grid);
  const double tau = grid.tau;

  State half{ic.u, ic.p, ic.t + 0.5 * tau};
  accumulate_dp(ic.p, 0.5 * tau, stencil, bs, grid, half.u);
  accumulate_du(ic.u, 0.5 * tau, stencil, bs, grid, half.p);

  State one{ic.u, ic.p, ic.t + tau};
  accumulate_dp(half.p, tau, stencil, bs, grid, one.u);
  accumulate_du(half.u, tau, stencil, bs, grid, one.p);

  half.u.front() = half.u.back() = 0.0;
  one.u.front() = one.u.back() = 0.0;
  return {std::move(half), std::move(one)};
}

/// u^{n+1} = u^{n-1} + 2 tau D^(p) p^n,  p^{n+1} = p^{n-1} + 2 tau D^(u) u^n.
inline State leapfrog_step(const State& prev, const State& curr, const InteriorStencil& stencil,
                           const BoundaryScheme& bs, const GridSpec& grid) {
  State next{prev.u, prev.p, curr.t + grid.tau};
  accumulate_dp(curr.p, 2.0 * grid.tau, stencil, bs, grid, next.u);
  accumulate_du(curr.u, 2.0 * grid.tau, stencil, bs, grid, next.p);
  next.u.front() = next.u.back() = 0.0;
  return next;
}

struct IntegrateOptions {
  double blowup_threshold = 1e6;
};

/// Runs grid.n_steps leapfrog steps from ic. Throws diverged_error when
/// max(|u|, |p|) exceeds the blow-up threshold.
inline Trajectory integrate(const State& ic, const InteriorStencil& stencil, const BoundaryScheme& bs,
                            const GridSpec& grid, const IntegrateOptions& opts = {}) {
  bs.validate(grid);
  ic.validate(grid);
  require(ic.u.front() == 0.0 && ic.u.back() == 0.0, "integrate: initial u must vanish at the boundary");

  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
  traj.states.push_back(ic);
  auto [half, one] = first_step(ic, stencil, bs, grid);
  traj.half = std::move(half);
  traj.states.push_back(std::move(one));

  for (int n = 1; n < grid.n_steps; ++n) {
    const auto k = static_cast<std::size_t>(n);
    State next = leapfrog_step(traj.states[k - 1], traj.states[k], stencil, bs, grid);
    const double m = next.max_abs();
    if (!(m <= opts.blowup_threshold)) throw diverged_error(next.t, m);
    traj.states.push_back(std::move(next));
  }
  if (const double m = traj.states.back().max_abs(); grid.n_steps == 1 && !(m <= opts.blowup_threshold))
    throw diverged_error(traj.states.back().t, m);
  return traj;
}

}  // namespace wavebound
