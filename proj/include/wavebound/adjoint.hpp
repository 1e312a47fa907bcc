#pragma once

#include <span>
#include <vector>

#include "wavebound/exact.hpp"
#include "wavebound/grid.hpp"
#include "wavebound/wave_core.hpp"

namespace wavebound {

/// Sensitivity of the boundary derivative rows to the control coefficients
/// at one forward state. The operators P^ and U^ act from the control space
/// to the u- and p-fields and are non-zero on the two controlled rows only.
struct SensitivitySource {
  int J = 0;
  int N = 0;
  std::vector<double> p_left;   // p_{j+1/2} / h
  std::vector<double> p_right;  // p_{N-j-1/2} / h
  std::vector<double> u_left;   // u_j / h
  std::vector<double> u_right;  // u_{N-j} / h

  static SensitivitySource from_state(const State& s, int J, const GridSpec& grid) {
    SensitivitySource src{J, grid.N, {}, {}, {}, {}};
    const double inv_h = 1.0 / grid.h;
    for (int j = 0; j <= J; ++j) {
      src.p_left.push_back(s.p[static_cast<std::size_t>(j)] * inv_h);
      src.p_right.push_back(s.p[static_cast<std::size_t>(grid.N - j - 1)] * inv_h);
      src.u_left.push_back(s.u[static_cast<std::size_t>(j)] * inv_h);
      src.u_right.push_back(s.u[static_cast<std::size_t>(grid.N - j)] * inv_h);
    }
    return src;
  }

  /// out_u += scale * P^ d.
  void apply_p(const ControlVector& d, double scale, std::span<double> out_u) const {
    const ControlLayout L{J};
    double left = 0.0, right = 0.0;
    for (int j = 0; j <= J; ++j) {
      left += d[L.p(j)] * p_left[static_cast<std::size_t>(j)];
      right += d[L.p_tilde(j)] * p_right[static_cast<std::size_t>(j)];
    }
    out_u[1] += scale * left;
    out_u[static_cast<std::size_t>(N - 1)] -= scale * right;
  }

  /// out_p += scale * U^ d.
  void apply_u(const ControlVector& d, double scale, std::span<double> out_p) const {
    const ControlLayout L{J};
    double left = 0.0, right = 0.0;
    for (int j = 0; j <= J; ++j) {
      left += d[L.u(j)] * u_left[static_cast<std::size_t>(j)];
      right += d[L.u_tilde(j)] * u_right[static_cast<std::size_t>(j)];
    }
    out_p[0] += scale * left;
    out_p[static_cast<std::size_t>(N - 1)] -= scale * right;
  }

  /// g += scale * (P^)^T w_u.
  void transpose_p(std::span<const double> w_u, double scale, ControlVector& g) const {
    const ControlLayout L{J};
    const double left = scale * w_u[1];
    const double right = -scale * w_u[static_cast<std::size_t>(N - 1)];
    for (int j = 0; j <= J; ++j) {
      g[L.p(j)] += left * p_left[static_cast<std::size_t>(j)];
      g[L.p_tilde(j)] += right * p_right[static_cast<std::size_t>(j)];
    }
  }

  /// g += scale * (U^)^T w_p.
  void transpose_u(std::span<const double> w_p, double scale, ControlVector& g) const {
    const ControlLayout L{J};
    const double left = scale * w_p[0];
    const double right = -scale * w_p[static_cast<std::size_t>(N - 1)];
    for (int j = 0; j <= J; ++j) {
      g[L.u(j)] += left * u_left[static_cast<std::size_t>(j)];
      g[L.u_tilde(j)] += right * u_right[static_cast<std::size_t>(j)];
    }
  }
};

/// Per-level adjoint forcing; u entries have N+1 values, p entries N.
struct LevelFields {
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> p;

  static LevelFields zeros(int levels, const GridSpec& grid) {
    const auto n = static_cast<std::size_t>(levels);
    return {std::vector<std::vector<double>>(n, std::vector<double>(grid.u_size(), 0.0)),
            std::vector<std::vector<double>>(n, std::vector<double>(grid.p_size(), 0.0))};
  }

  int levels() const { return static_cast<int>(u.size()); }
};

/// Tangent-linear run: response of every stored level to a change `dalpha`
/// of the boundary coefficients, starting from a zero perturbation.
/// `traj` must come from integrate() with the same stencil and scheme.
inline Trajectory tlm_run(const Trajectory& traj, const ControlVector& dalpha, const InteriorStencil& stencil,
                          const BoundaryScheme& bs, const GridSpec& grid) {
  bs.validate(grid);
  require(dalpha.size() == bs.control_size(), "tlm_run: control vector has the wrong size");
  require(traj.levels() >= 2, "tlm_run: trajectory must hold at least one step");
  const double tau = grid.tau;
  const int J = bs.J;

  Trajectory d;
  d.states.reserve(traj.states.size());
  d.states.push_back(State::zero(grid, traj.states[0].t));

  const auto src0 = SensitivitySource::from_state(traj.states[0], J, grid);
  d.half = State::zero(grid, traj.half.t);
  src0.apply_p(dalpha, 0.5 * tau, d.half.u);
  src0.apply_u(dalpha, 0.5 * tau, d.half.p);

  const auto src_half = SensitivitySource::from_state(traj.half, J, grid);
  State one = State::zero(grid, traj.states[1].t);
  accumulate_dp(d.half.p, tau, stencil, bs, grid, one.u);
  accumulate_du(d.half.u, tau, stencil, bs, grid, one.p);
  src_half.apply_p(dalpha, tau, one.u);
  src_half.apply_u(dalpha, tau, one.p);
  d.states.push_back(std::move(one));

  for (int n = 1; n + 1 < traj.levels(); ++n) {
    const auto k = static_cast<std::size_t>(n);
    State next = leapfrog_step(d.states[k - 1], d.states[k], stencil, bs, grid);
    const auto src = SensitivitySource::from_state(traj.states[k], J, grid);
    src.apply_p(dalpha, 2.0 * tau, next.u);
    src.apply_u(dalpha, 2.0 * tau, next.p);
    d.states.push_back(std::move(next));
  }
  return d;
}

/// Gradient of sum_n <forcing(n), delta state(n)> with respect to the
/// control, in one backward sweep over the stored trajectory.
///
/// This is the exact transpose of tlm_run. In the first-step block the
/// delta-p row picks up +tau U^{1/2}, as in the forward tangent code.
inline ControlVector adjoint_sweep(const Trajectory& traj, const LevelFields& forcing, const InteriorStencil& stencil,
                                   const BoundaryScheme& bs, const GridSpec& grid) {
  bs.validate(grid);
  require(forcing.levels() == traj.levels(), "adjoint_sweep: forcing must cover every trajectory level");
  require(traj.levels() >= 2, "adjoint_sweep: trajectory must hold at least one step");
  const double tau = grid.tau;
  const int J = bs.J;
  const int last = traj.levels() - 1;

  ControlVector g(bs.control_size(), 0.0);
  std::vector<std::vector<double>> au = forcing.u;
  std::vector<std::vector<double>> ap = forcing.p;

  for (int n = last; n >= 2; --n) {
    const auto k = static_cast<std::size_t>(n);
    const auto src = SensitivitySource::from_state(traj.states[k - 1], J, grid);
    accumulate_dp_transpose(au[k], 2.0 * tau, stencil, bs, grid, ap[k - 1]);
    accumulate_du_transpose(ap[k], 2.0 * tau, stencil, bs, grid, au[k - 1]);
    src.transpose_p(au[k], 2.0 * tau, g);
    src.transpose_u(ap[k], 2.0 * tau, g);
    for (std::size_t i = 0; i < au[k].size(); ++i) au[k - 2][i] += au[k][i];
    for (std::size_t i = 0; i < ap[k].size(); ++i) ap[k - 2][i] += ap[k][i];
  }

  std::vector<double> half_u(grid.u_size(), 0.0);
  std::vector<double> half_p(grid.p_size(), 0.0);
  const auto src_half = SensitivitySource::from_state(traj.half, J, grid);
  accumulate_dp_transpose(au[1], tau, stencil, bs, grid, half_p);
  accumulate_du_transpose(ap[1], tau, stencil, bs, grid, half_u);
  src_half.transpose_p(au[1], tau, g);
  src_half.transpose_u(ap[1], tau, g);

  const auto src0 = SensitivitySource::from_state(traj.states[0], J, grid);
  src0.transpose_p(half_u, 0.5 * tau, g);
  src0.transpose_u(half_p, 0.5 * tau, g);
  return g;
}

/// Trapezoid weight of level n in a time integral over levels 0..last.
inline double time_weight(int n, int last, double tau) {
  return (n == 0 || n == last) ? 0.5 * tau : tau;
}

/// Gradient of sum_n w_n h (|u^n - u_obs^n|^2 + |p^n - p_obs^n|^2) over the
/// trajectory's levels (u boundary nodes excluded).
inline ControlVector misfit_gradient(const Trajectory& traj, const Observations& obs, const InteriorStencil& stencil,
                                     const BoundaryScheme& bs, const GridSpec& grid) {
  require(obs.levels() >= traj.levels(), "misfit_gradient: observations do not cover the trajectory");
  const int last = traj.levels() - 1;
  LevelFields forcing = LevelFields::zeros(traj.levels(), grid);
  for (int n = 0; n <= last; ++n) {
    const auto k = static_cast<std::size_t>(n);
    const double c = 2.0 * time_weight(n, last, grid.tau) * grid.h;
    for (int i = 1; i < grid.N; ++i) {
      const auto s = static_cast<std::size_t>(i);
      forcing.u[k][s] = c * (traj.states[k].u[s] - obs.u[k][s]);
    }
    for (std::size_t m = 0; m < grid.p_size(); ++m) forcing.p[k][m] = c * (traj.states[k].p[m] - obs.p[k][m]);
  }
  return adjoint_sweep(traj, forcing, stencil, bs, grid);
}

}  // namespace wavebound
