#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "wavebound/grid.hpp"

namespace wavebound {

struct MinimizeConfig {
  int memory = 8;
  int max_iters = 500;
  /// Stop when |g| <= grad_tol * max(1, |g0|).
  double grad_tol = 1e-8;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
  /// Values at or above this are treated as +infinity (unstable region).
  double infeasible_value = 1e12;

  void validate() const {
    require(memory >= 1, "MinimizeConfig: memory must be at least 1");
    require(max_iters >= 0, "MinimizeConfig: max_iters must be non-negative");
    require(grad_tol > 0.0 && grad_tol < 1.0, "MinimizeConfig: grad_tol must lie in (0, 1)");
    require(c1 > 0.0 && c1 < c2 && c2 < 1.0, "MinimizeConfig: need 0 < c1 < c2 < 1");
  }
};

enum class Termination { gradient_tolerance, max_iterations, line_search_failed };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::gradient_tolerance: return "GRADIENT_TOLERANCE";
    case Termination::max_iterations: return "MAX_ITERATIONS";
    case Termination::line_search_failed: return "LINE_SEARCH_FAILED";
  }
  return "UNKNOWN";
}

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> gradient;
  std::vector<double> cost_history;
  std::vector<double> grad_norm_history;
  int iterations = 0;
  int n_evaluations = 0;
  Termination termination = Termination::max_iterations;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

/// Minimiser of the cubic matching (a, fa, da) and (b, fb, db), or NaN.
inline double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

struct LinePoint {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> g;
  bool feasible = true;
};

}  // namespace detail

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// `fg(x, g)` returns f(x) and writes the gradient into g. Returned values at
/// or above cfg.infeasible_value (or non-finite) mark x as unusable; the line
/// search then shrinks the step without using that point's derivative.
template <class FG>
MinimizeResult lbfgs(FG&& fg, std::vector<double> x0, const MinimizeConfig& cfg = {}) {
  cfg.validate();
  using detail::dot;
  using detail::LinePoint;
  using detail::norm;

  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  res.gradient.assign(n, 0.0);

  auto eval = [&](const std::vector<double>& x, std::vector<double>& g) {
    ++res.n_evaluations;
    g.assign(n, 0.0);
    return static_cast<double>(fg(x, g));
  };
  auto feasible = [&](double f) { return std::isfinite(f) && f < cfg.infeasible_value; };

  res.f = eval(res.x, res.gradient);
  require(feasible(res.f), "lbfgs: objective is not finite at the starting point");
  res.cost_history.push_back(res.f);
  double gnorm = norm(res.gradient);
  res.grad_norm_history.push_back(gnorm);
  const double gtol = cfg.grad_tol * std::max(1.0, gnorm);

  std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
  std::deque<double> rhos;

  if (gnorm <= gtol) {
    res.termination = Termination::gradient_tolerance;
    return res;
  }

  std::vector<double> d(n);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // Two-loop recursion for d = -H g.
    std::vector<double> q = res.gradient;
    std::vector<double> alphas(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
      alphas[k] = rhos[k] * dot(pairs[k].first, q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alphas[k] * pairs[k].second[i];
    }
    double gamma = 1.0;
    if (!pairs.empty()) gamma = dot(pairs.back().first, pairs.back().second) / dot(pairs.back().second, pairs.back().second);
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double beta = rhos[k] * dot(pairs[k].second, q);
      for (std::size_t i = 0; i < n; ++i) q[i] += (alphas[k] - beta) * pairs[k].first[i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];

    double slope0 = dot(res.gradient, d);
    if (!(slope0 < 0.0)) {
      pairs.clear();
      rhos.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -res.gradient[i];
      slope0 = -gnorm * gnorm;
    }

    const double f0 = res.f;
    LinePoint lo{0.0, f0, slope0, res.x, res.gradient, true};
    auto probe = [&](double step) {
      LinePoint pt;
      pt.step = step;
      pt.x.resize(n);
      for (std::size_t i = 0; i < n; ++i) pt.x[i] = res.x[i] + step * d[i];
      pt.f = eval(pt.x, pt.g);
      pt.feasible = feasible(pt.f);
      pt.slope = pt.feasible ? dot(pt.g, d) : 0.0;
      return pt;
    };
    // Near the minimum f changes by less than its rounding error; there the
    // decrease test falls back to the approximate-Wolfe slope bound.
    const double f_noise = 1e-12 * std::abs(f0);
    auto armijo_fails = [&](const LinePoint& pt) {
      if (!pt.feasible) return true;
      if (pt.f <= f0 + cfg.c1 * pt.step * slope0) return false;
      return !(pt.f <= f0 + f_noise && pt.slope <= (1.0 - 2.0 * cfg.c1) * -slope0);
    };
    auto curvature_ok = [&](const LinePoint& pt) { return std::abs(pt.slope) <= -cfg.c2 * slope0; };
    // f comparisons within rounding noise are left to the slope tests.
    auto rises = [&](const LinePoint& pt, const LinePoint& ref) { return pt.f > ref.f + f_noise; };

    // Zoom between lo (satisfies Armijo) and hi; returns the accepted point if any.
    auto zoom = [&](LinePoint lo_pt, LinePoint hi_pt, int budget, LinePoint& out) {
      for (int k = 0; k < budget; ++k) {
        const double a = lo_pt.step, b = hi_pt.step;
        const double lo_b = std::min(a, b), hi_b = std::max(a, b);
        const double width = hi_b - lo_b;
        if (width <= 1e-16 * std::max(1.0, hi_b)) return false;
        double t = std::numeric_limits<double>::quiet_NaN();
        if (hi_pt.feasible) t = detail::cubic_minimizer(a, lo_pt.f, lo_pt.slope, b, hi_pt.f, hi_pt.slope);
        if (!hi_pt.feasible || !std::isfinite(t) || t < lo_b + 0.1 * width || t > hi_b - 0.1 * width)
          t = hi_pt.feasible ? 0.5 * (a + b) : a + 0.25 * (b - a);
        LinePoint pt = probe(t);
        if (armijo_fails(pt) || rises(pt, lo_pt)) {
          hi_pt = std::move(pt);
        } else {
          if (curvature_ok(pt)) {
            out = std::move(pt);
            return true;
          }
          if (pt.slope * (hi_pt.step - lo_pt.step) >= 0.0) hi_pt = std::move(lo_pt);
          lo_pt = std::move(pt);
        }
      }
      return false;
    };

    double step = 1.0;
    if (pairs.empty()) step = std::min(1.0, 1.0 / gnorm);
    LinePoint accepted;
    bool found = false;
    LinePoint prev = lo;
    int used = 0;
    for (; used < cfg.max_line_search; ++used) {
      LinePoint pt = probe(step);
      if (armijo_fails(pt) || (used > 0 && rises(pt, prev))) {
        found = zoom(prev, std::move(pt), cfg.max_line_search - used, accepted);
        break;
      }
      if (curvature_ok(pt)) {
        accepted = std::move(pt);
        found = true;
        break;
      }
      if (pt.slope >= 0.0) {
        found = zoom(std::move(pt), prev, cfg.max_line_search - used, accepted);
        break;
      }
      prev = std::move(pt);
      step *= 2.0;
    }

    if (!found) {
      res.termination = Termination::line_search_failed;
      res.iterations = iter;
      return res;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = accepted.x[i] - res.x[i];
      y[i] = accepted.g[i] - res.gradient[i];
    }
    const double sy = dot(s, y);
    res.x = std::move(accepted.x);
    res.gradient = std::move(accepted.g);
    res.f = accepted.f;
    gnorm = norm(res.gradient);
    res.cost_history.push_back(res.f);
    res.grad_norm_history.push_back(gnorm);
    res.iterations = iter + 1;

    if (sy > 1e-12 * norm(s) * norm(y)) {
      pairs.emplace_back(std::move(s), std::move(y));
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(pairs.size()) > cfg.memory) {
        pairs.pop_front();
        rhos.pop_front();
      }
    }

    if (gnorm <= gtol) {
      res.termination = Termination::gradient_tolerance;
      return res;
    }
  }
  res.termination = Termination::max_iterations;
  return res;
}

}  // namespace wavebound
