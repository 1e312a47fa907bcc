#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "wavebound/adjoint.hpp"
#include "wavebound/exact.hpp"
#include "wavebound/wave_core.hpp"

namespace wavebound {

/// Discrete integral of du^2 + dp^2 over [0, 1]: weight h on interior
/// u-nodes and on every p half-node, zero on the boundary u-nodes.
inline double state_norm2(std::span<const double> du, std::span<const double> dp, const GridSpec& grid) {
  require(du.size() == grid.u_size() && dp.size() == grid.p_size(), "state_norm2: field sizes do not match the grid");
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < du.size(); ++i) s += du[i] * du[i];
  for (double v : dp) s += v * v;
  return grid.h * s;
}

enum class CoefficientGroup { u = 0, u_tilde = 1, p = 2, p_tilde = 3 };

struct CostConfig {
  /// Window length in leapfrog steps; T = window_steps * tau.
  int window_steps = 0;
  double eta = 0.0;
  /// Groups penalised by eta (sum_j alpha_j)^2, indexed by CoefficientGroup.
  std::array<bool, 4> regularized{true, true, true, true};

  static CostConfig for_window(double T, const GridSpec& grid, double eta = 0.0) {
    const double steps = T / grid.tau;
    const double rounded = std::round(steps);
    require(std::abs(steps - rounded) < 1e-6 * std::max(1.0, steps), "CostConfig: window must be a multiple of tau");
    return CostConfig{static_cast<int>(rounded), eta, {true, true, true, true}};
  }

  double window(const GridSpec& grid) const { return window_steps * grid.tau; }
};

struct CostReport {
  double total = 0.0;
  double misfit = 0.0;
  double regularization = 0.0;
  /// state_norm2 of the misfit at each level 0..window_steps.
  std::vector<double> xi;
  bool diverged = false;
};

struct Evaluation {
  CostReport report;
  ControlVector gradient;
};

/// Cost assigned to a scheme whose forward run blows up.
inline constexpr double kBlowupPenalty = 1e12;

inline double group_sum(const ControlVector& alpha, int J, CoefficientGroup group) {
  const ControlLayout L{J};
  double s = 0.0;
  for (int j = 0; j <= J; ++j) {
    switch (group) {
      case CoefficientGroup::u: s += alpha[L.u(j)]; break;
      case CoefficientGroup::u_tilde: s += alpha[L.u_tilde(j)]; break;
      case CoefficientGroup::p: s += alpha[L.p(j)]; break;
      case CoefficientGroup::p_tilde: s += alpha[L.p_tilde(j)]; break;
    }
  }
  return s;
}

/// R = eta * sum over regularized groups of (sum_j alpha_j)^2; its gradient
/// 2 eta (sum_j alpha_j) is added to every coefficient of the group.
inline double add_regularization(const ControlVector& alpha, int J, const CostConfig& cfg, ControlVector* gradient) {
  if (cfg.eta == 0.0) return 0.0;
  const ControlLayout L{J};
  double r = 0.0;
  for (int gi = 0; gi < 4; ++gi) {
    if (!cfg.regularized[static_cast<std::size_t>(gi)]) continue;
    const auto group = static_cast<CoefficientGroup>(gi);
    const double s = group_sum(alpha, J, group);
    r += cfg.eta * s * s;
    if (gradient == nullptr) continue;
    const double d = 2.0 * cfg.eta * s;
    for (int j = 0; j <= J; ++j) {
      switch (group) {
        case CoefficientGroup::u: (*gradient)[L.u(j)] += d; break;
        case CoefficientGroup::u_tilde: (*gradient)[L.u_tilde(j)] += d; break;
        case CoefficientGroup::p: (*gradient)[L.p(j)] += d; break;
        case CoefficientGroup::p_tilde: (*gradient)[L.p_tilde(j)] += d; break;
      }
    }
  }
  return r;
}

/// Misfit over levels 0..last with trapezoid weights in time.
inline double window_misfit(const Trajectory& traj, const Observations& obs, const GridSpec& grid,
                            std::vector<double>* xi = nullptr) {
  const int last = traj.levels() - 1;
  double total = 0.0;
  std::vector<double> du(grid.u_size()), dp(grid.p_size());
  for (int n = 0; n <= last; ++n) {
    const auto k = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < du.size(); ++i) du[i] = traj.states[k].u[i] - obs.u[k][i];
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = traj.states[k].p[i] - obs.p[k][i];
    const double e = state_norm2(du, dp, grid);
    if (xi != nullptr) xi->push_back(e);
    total += time_weight(n, last, grid.tau) * e;
  }
  return total;
}

/// Cost and gradient of the boundary coefficients `alpha` over the window.
/// A diverging forward run yields total = kBlowupPenalty and a zero gradient.
inline Evaluation evaluate(const ControlVector& alpha, int J, const CostConfig& cfg, const Observations& obs,
                           const State& ic, const InteriorStencil& stencil, const GridSpec& grid) {
  require(cfg.window_steps >= 1, "evaluate: window must hold at least one step");
  require(obs.levels() > cfg.window_steps, "evaluate: observations do not cover the window");
  const BoundaryScheme bs = from_control(alpha, J);
  const GridSpec window_grid = grid.with_steps(cfg.window_steps);

  Evaluation ev;
  ev.gradient.assign(alpha.size(), 0.0);
  Trajectory traj;
  try {
    traj = integrate(ic, stencil, bs, window_grid);
  } catch (const diverged_error&) {
    ev.report.total = kBlowupPenalty;
    ev.report.diverged = true;
    return ev;
  }

  ev.report.misfit = window_misfit(traj, obs, window_grid, &ev.report.xi);
  ev.gradient = misfit_gradient(traj, obs, stencil, bs, window_grid);
  ev.report.regularization = add_regularization(alpha, J, cfg, &ev.gradient);
  ev.report.total = ev.report.misfit + ev.report.regularization;
  return ev;
}

inline Evaluation evaluate(const BoundaryScheme& bs, const CostConfig& cfg, const Observations& obs, const State& ic,
                           const InteriorStencil& stencil, const GridSpec& grid) {
  return evaluate(to_control(bs), bs.J, cfg, obs, ic, stencil, grid);
}

}  // namespace wavebound
