#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wavebound/adjoint.hpp"
#include "wavebound/analysis.hpp"
#include "wavebound/exact.hpp"
#include "wavebound/lbfgs.hpp"
#include "wavebound/objective.hpp"
#include "wavebound/wave_core.hpp"

namespace wavebound {

using json = nlohmann::ordered_json;

/// Everything one experiment needs. JSON keys and CLI flags use the field names.
struct ExperimentConfig {
  std::string name = "custom";
  int N = 30;
  double tau = 1.0 / 120.0;
  int n_steps = 36000;
  int order = 2;
  /// "modes" (superposition of `modes`) or "poly-exp"
  /// (u0 = 20 x^2 (1 - x) e^{-5x}, p0 = (x - 1/2) e^{2x}, projected on k_max modes).
  std::string initial = "modes";
  std::vector<ModeSpec> modes{{3, 1.0, 1.0}};
  int k_max = 0;  // 0: N - 1
  /// "exact" (closed-form solution) or "twin" (the model's own run with the initial scheme).
  std::string observations = "exact";
  int J = 1;
  double eta = 0.0;
  double T_window = 6.0;
  int sweep_from = 600;
  int sweep_to = 2400;
  int sweep_count = 10;
  /// Initial / forward scheme; classical one-sided differences when absent.
  std::optional<BoundaryScheme> alpha;
  int memory = 8;
  int max_iters = 500;
  double grad_tol = 1e-8;
  int xt_stride = 0;  // 0: about 600 time samples
  std::vector<int> dispersion_k;
  std::string out = ".";
};

inline std::vector<std::string> preset_names() {
  return {"single-mode-2nd", "single-mode-4th", "two-modes", "mixed-spectrum"};
}

/// Built-in configurations: N = 30, tau = 1/120, 300 time units.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "single-mode-2nd") return c;
  if (name == "single-mode-4th") {
    c.order = 4;
    return c;
  }
  if (name == "two-modes") {
    c.modes = {{2, 1.0, 1.0}, {5, 1.0, 1.0}};
    return c;
  }
  if (name == "mixed-spectrum") {
    c.initial = "poly-exp";
    c.modes.clear();
    c.T_window = 10.0;
    c.sweep_from = 800;
    c.sweep_to = 5000;
    return c;
  }
  throw contract_error("unknown preset '" + name + "'");
}

namespace detail {

inline double parse_number(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    try {
      std::size_t used = 0;
      const auto slash = s.find('/');
      if (slash == std::string::npos) {
        const double x = std::stod(s, &used);
        if (used == s.size()) return x;
      } else {
        const std::string num_s = s.substr(0, slash), den_s = s.substr(slash + 1);
        std::size_t u1 = 0, u2 = 0;
        const double num = std::stod(num_s, &u1);
        const double den = std::stod(den_s, &u2);
        if (u1 == num_s.size() && u2 == den_s.size() && den != 0.0) return num / den;
      }
    } catch (const std::exception&) {
    }
  }
  throw contract_error("config: '" + key + "' must be a number (or 'a/b')");
}

inline int parse_int(const json& v, const std::string& key) {
  const double x = parse_number(v, key);
  require(std::isfinite(x) && std::floor(x) == x && std::abs(x) < 1e9, "config: '" + key + "' must be an integer");
  return static_cast<int>(x);
}

inline std::vector<double> parse_doubles(const json& v, const std::string& key) {
  require(v.is_array(), "config: '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(parse_number(e, key));
  return out;
}

inline ModeSpec parse_mode(const json& v) {
  if (v.is_array()) {
    require(v.size() == 3, "config: a mode is [k, a, b]");
    return {parse_int(v[0], "modes.k"), parse_number(v[1], "modes.a"), parse_number(v[2], "modes.b")};
  }
  require(v.is_object() && v.contains("k"), "config: a mode is [k, a, b] or {\"k\":..,\"a\":..,\"b\":..}");
  return {parse_int(v.at("k"), "modes.k"), v.contains("a") ? parse_number(v.at("a"), "modes.a") : 1.0,
          v.contains("b") ? parse_number(v.at("b"), "modes.b") : 1.0};
}

inline BoundaryScheme parse_alpha(const json& v) {
  require(v.is_object(), "config: 'alpha' must be an object with u, u_tilde, p, p_tilde");
  BoundaryScheme bs;
  bs.alpha_u = parse_doubles(v.at("u"), "alpha.u");
  bs.alpha_u_tilde = parse_doubles(v.value("u_tilde", v.at("u")), "alpha.u_tilde");
  bs.alpha_p = parse_doubles(v.at("p"), "alpha.p");
  bs.alpha_p_tilde = parse_doubles(v.value("p_tilde", v.at("p")), "alpha.p_tilde");
  require(!bs.alpha_u.empty(), "config: 'alpha' groups must not be empty");
  bs.J = static_cast<int>(bs.alpha_u.size()) - 1;
  return bs;
}

}  // namespace detail

inline json scheme_to_json(const BoundaryScheme& bs) {
  return json{{"u", bs.alpha_u}, {"u_tilde", bs.alpha_u_tilde}, {"p", bs.alpha_p}, {"p_tilde", bs.alpha_p_tilde}};
}

inline json to_json(const ExperimentConfig& c) {
  json modes = json::array();
  for (const ModeSpec& m : c.modes) modes.push_back({m.k, m.a, m.b});
  json j{{"name", c.name},           {"N", c.N},
         {"tau", c.tau},             {"n_steps", c.n_steps},
         {"order", c.order},         {"initial", c.initial},
         {"modes", modes},           {"k_max", c.k_max},
         {"observations", c.observations},
         {"J", c.J},                 {"eta", c.eta},
         {"T_window", c.T_window},   {"sweep_from", c.sweep_from},
         {"sweep_to", c.sweep_to},   {"sweep_count", c.sweep_count},
         {"memory", c.memory},       {"max_iters", c.max_iters},
         {"grad_tol", c.grad_tol},   {"xt_stride", c.xt_stride},
         {"dispersion_k", c.dispersion_k}};
  if (c.alpha) j["alpha"] = scheme_to_json(*c.alpha);
  return j;
}

/// Overwrites the fields present in `j`; unknown keys are rejected.
inline void apply_json(ExperimentConfig& c, const json& j) {
  using namespace detail;
  require(j.is_object(), "config: document must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "name") c.name = v.get<std::string>();
    else if (key == "N") c.N = parse_int(v, key);
    else if (key == "tau") c.tau = parse_number(v, key);
    else if (key == "n_steps") c.n_steps = parse_int(v, key);
    else if (key == "order") c.order = parse_int(v, key);
    else if (key == "initial") c.initial = v.get<std::string>();
    else if (key == "modes") {
      require(v.is_array(), "config: 'modes' must be an array");
      c.modes.clear();
      for (const auto& m : v) c.modes.push_back(parse_mode(m));
    } else if (key == "k_max") c.k_max = parse_int(v, key);
    else if (key == "observations") c.observations = v.get<std::string>();
    else if (key == "J") c.J = parse_int(v, key);
    else if (key == "eta") c.eta = parse_number(v, key);
    else if (key == "T_window") c.T_window = parse_number(v, key);
    else if (key == "sweep_from") c.sweep_from = parse_int(v, key);
    else if (key == "sweep_to") c.sweep_to = parse_int(v, key);
    else if (key == "sweep_count") c.sweep_count = parse_int(v, key);
    else if (key == "alpha") {
      if (v.is_null()) c.alpha.reset();
      else c.alpha = parse_alpha(v);
    } else if (key == "memory") c.memory = parse_int(v, key);
    else if (key == "max_iters") c.max_iters = parse_int(v, key);
    else if (key == "grad_tol") c.grad_tol = parse_number(v, key);
    else if (key == "xt_stride") c.xt_stride = parse_int(v, key);
    else if (key == "dispersion_k") {
      require(v.is_array(), "config: 'dispersion_k' must be an array");
      c.dispersion_k.clear();
      for (const auto& e : v) c.dispersion_k.push_back(parse_int(e, key));
    } else if (key == "out") c.out = v.get<std::string>();
    else throw contract_error("config: unknown field '" + key + "'");
  }
}

inline GridSpec grid_of(const ExperimentConfig& c) { return GridSpec::make(c.N, c.tau, c.n_steps); }

inline int window_steps_of(const ExperimentConfig& c) {
  return CostConfig::for_window(c.T_window, grid_of(c)).window_steps;
}

inline BoundaryScheme initial_scheme(const ExperimentConfig& c) {
  return c.alpha ? *c.alpha : BoundaryScheme::classical(c.J);
}

inline void validate(const ExperimentConfig& c) {
  const GridSpec grid = grid_of(c);
  InteriorStencil::of_order(c.order);
  require(c.initial == "modes" || c.initial == "poly-exp", "config: 'initial' must be 'modes' or 'poly-exp'");
  require(c.observations == "exact" || c.observations == "twin", "config: 'observations' must be 'exact' or 'twin'");
  if (c.initial == "modes") {
    require(!c.modes.empty(), "config: 'modes' must not be empty");
    validate_modes(c.modes);
    for (const ModeSpec& m : c.modes) require(m.k <= c.N - 1, "config: mode k exceeds N - 1");
  }
  require(c.k_max >= 0 && c.k_max <= c.N - 1, "config: 'k_max' must lie in [0, N-1]");
  require(c.J >= 1, "config: 'J' must be at least 1");
  require(c.eta >= 0.0, "config: 'eta' must be non-negative");
  initial_scheme(c).validate(grid);
  if (c.alpha) require(c.alpha->J == c.J, "config: 'alpha' groups must hold J+1 coefficients");
  const int w = window_steps_of(c);
  require(w >= 1 && w <= c.n_steps, "config: need 0 < T_window <= n_steps * tau");
  require(c.sweep_count >= 1 && c.sweep_from >= 1 && c.sweep_from <= c.sweep_to,
          "config: sweep range must satisfy 1 <= sweep_from <= sweep_to, sweep_count >= 1");
  require(c.memory >= 1 && c.max_iters >= 0 && c.grad_tol > 0.0 && c.grad_tol < 1.0,
          "config: invalid minimizer settings");
  require(c.xt_stride >= 0, "config: 'xt_stride' must be non-negative");
}

inline double poly_exp_u0(double x) { return 20.0 * x * x * (1.0 - x) * std::exp(-5.0 * x); }
inline double poly_exp_p0(double x) { return (x - 0.5) * std::exp(2.0 * x); }

inline std::vector<ModeSpec> initial_modes(const ExperimentConfig& c) {
  if (c.initial == "modes") return c.modes;
  const int k_max = c.k_max > 0 ? c.k_max : c.N - 1;
  return project_initial(poly_exp_u0, poly_exp_p0, k_max);
}

/// Grid, observations and initial state shared by all runs of one config.
struct Setup {
  ExperimentConfig config;
  GridSpec grid;
  InteriorStencil stencil;
  std::vector<ModeSpec> modes;
  Observations obs;
  State ic;
};

inline Setup make_setup(const ExperimentConfig& c, int levels_needed = 0) {
  validate(c);
  Setup s;
  s.config = c;
  s.grid = grid_of(c);
  s.stencil = InteriorStencil::of_order(c.order);
  s.modes = initial_modes(c);
  const int steps = std::max({c.n_steps, levels_needed, window_steps_of(c)});
  const GridSpec obs_grid = s.grid.with_steps(steps);
  s.obs = sample_observations(s.modes, obs_grid);
  s.ic = s.obs.state(0);
  if (c.observations == "twin") {
    const Trajectory twin = integrate(s.ic, s.stencil, initial_scheme(c), obs_grid);
    for (int n = 0; n <= steps; ++n) {
      const auto k = static_cast<std::size_t>(n);
      s.obs.u[k] = twin.states[k].u;
      s.obs.p[k] = twin.states[k].p;
    }
  }
  return s;
}

struct AssimilationResult {
  int window_steps = 0;
  BoundaryScheme initial;
  BoundaryScheme optimal;
  MinimizeResult minimization;
  CostReport initial_report;
  CostReport final_report;
};

inline AssimilationResult assimilate(const Setup& s, int window_steps, double eta) {
  const ExperimentConfig& c = s.config;
  AssimilationResult r;
  r.window_steps = window_steps;
  r.initial = initial_scheme(c);
  CostConfig cost{window_steps, eta, {true, true, true, true}};

  auto fg = [&](const std::vector<double>& x, std::vector<double>& g) {
    Evaluation ev = evaluate(x, c.J, cost, s.obs, s.ic, s.stencil, s.grid);
    g = std::move(ev.gradient);
    return ev.report.total;
  };
  MinimizeConfig mc;
  mc.memory = c.memory;
  mc.max_iters = c.max_iters;
  mc.grad_tol = c.grad_tol;
  mc.infeasible_value = kBlowupPenalty;
  r.minimization = lbfgs(fg, to_control(r.initial), mc);
  r.optimal = from_control(r.minimization.x, c.J);
  r.initial_report = evaluate(r.initial, cost, s.obs, s.ic, s.stencil, s.grid).report;
  r.final_report = evaluate(r.optimal, cost, s.obs, s.ic, s.stencil, s.grid).report;
  return r;
}

/// Forward run over the config's horizon. Returns the xi series, cut short
/// at the last stored level if the scheme diverges.
struct HorizonRun {
  std::vector<XiPoint> xi;
  std::optional<double> diverged_at;
};

inline HorizonRun run_horizon(const Setup& s, const BoundaryScheme& bs) {
  HorizonRun h;
  try {
    const Trajectory traj = integrate(s.ic, s.stencil, bs, s.grid);
    h.xi = xi_series(traj, s.obs);
  } catch (const diverged_error& e) {
    h.diverged_at = e.time();
  }
  return h;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "cannot open " + path.string() + " for writing");
  os << text;
}

inline void write_xi_csv(const std::filesystem::path& path, const std::vector<XiPoint>& xi) {
  std::ostringstream os;
  os << "t,xi\n";
  for (const XiPoint& p : xi) os << fmt(p.t) << ',' << fmt(p.xi) << '\n';
  write_text(path, os.str());
}

inline double mean_over(const std::vector<XiPoint>& xi, double t0, double t1) {
  double s = 0.0;
  int n = 0;
  for (const XiPoint& p : xi)
    if (p.t >= t0 && p.t <= t1) {
      s += p.xi;
      ++n;
    }
  return n > 0 ? s / n : 0.0;
}

inline double max_over(const std::vector<XiPoint>& xi, double t0, double t1) {
  double m = 0.0;
  for (const XiPoint& p : xi)
    if (p.t >= t0 && p.t <= t1) m = std::max(m, p.xi);
  return m;
}

}  // namespace detail

/// Mode numbers used for analysis predictions (k = 0 steady term excluded).
inline std::vector<int> analysis_modes(const Setup& s) {
  std::vector<int> ks;
  if (s.config.initial == "modes")
    for (const ModeSpec& m : s.modes)
      if (m.k >= 1) ks.push_back(m.k);
  return ks;
}

inline json predictions_json(const Setup& s) {
  json arr = json::array();
  for (int k : analysis_modes(s)) {
    const DispersionReport r = dispersion_report(k, s.grid, s.config.order);
    arr.push_back({{"k", k},
                   {"beta", s.config.order == 4 ? r.beta4 : r.beta2},
                   {"h_mod_ratio", r.h_mod_ratio},
                   {"c_u", r.c_u},
                   {"c_p", r.c_p},
                   {"kernel_tangent", r.kernel_tangent},
                   {"T_shift", r.T_shift}});
  }
  return arr;
}

inline json notes_json(const Setup& s) {
  json notes = json::array();
  for (const ModeSpec& m : s.modes)
    if (m.k == 0)
      notes.push_back("initial p has non-zero mean " + detail::fmt(m.b) + "; carried as a steady k = 0 component");
  if (!s.grid.cfl_ok()) notes.push_back("tau/h exceeds 1");
  return notes;
}

// ---- commands ---------------------------------------------------------------

/// Forward run with the configured (default classical) scheme: xi.csv,
/// error_xt.csv (t, x, u - u_exact) and forward.json.
inline json cmd_forward(const ExperimentConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const auto out = detail::prepare_out(c.out);
  const BoundaryScheme bs = initial_scheme(c);
  const Trajectory traj = integrate(s.ic, s.stencil, bs, s.grid);
  const std::vector<XiPoint> xi = xi_series(traj, s.obs);
  detail::write_xi_csv(out / "xi.csv", xi);

  const int stride = c.xt_stride > 0 ? c.xt_stride : std::max(1, (c.n_steps + 599) / 600);
  std::ostringstream xt;
  xt << "t,x,u_error\n";
  for (int n = 0; n <= c.n_steps; n += stride) {
    const auto k = static_cast<std::size_t>(n);
    for (int i = 0; i <= c.N; ++i) {
      const auto q = static_cast<std::size_t>(i);
      xt << detail::fmt(traj.states[k].t) << ',' << detail::fmt(s.grid.x_u(i)) << ','
         << detail::fmt(traj.states[k].u[q] - s.obs.u[k][q]) << '\n';
    }
  }
  detail::write_text(out / "error_xt.csv", xt.str());

  std::size_t imax = 0;
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (xi[i].xi > xi[imax].xi) imax = i;
  std::size_t imin = imax;
  for (std::size_t i = imax; i < xi.size(); ++i)
    if (xi[i].xi < xi[imin].xi) imin = i;

  json summary{{"command", "forward"},
               {"config", to_json(c)},
               {"scheme", scheme_to_json(bs)},
               {"xi_max", xi[imax].xi},
               {"t_xi_max", xi[imax].t},
               {"xi_min_after_max", xi[imin].xi},
               {"t_xi_min_after_max", xi[imin].t},
               {"predicted", predictions_json(s)},
               {"notes", notes_json(s)}};
  detail::write_text(out / "forward.json", summary.dump(2) + "\n");
  log << "forward: xi max " << xi[imax].xi << " at t = " << xi[imax].t << ", next minimum " << xi[imin].xi
      << " at t = " << xi[imin].t << "\n";
  return summary;
}

inline json recovered_json(const BoundaryScheme& bs) {
  return json{{"c_u_left", bs.alpha_u.size() > 1 ? bs.alpha_u[1] : 0.0},
              {"c_u_right", bs.alpha_u_tilde.size() > 1 ? bs.alpha_u_tilde[1] : 0.0},
              {"alpha_p_left", bs.alpha_p},
              {"alpha_p_right", bs.alpha_p_tilde},
              {"alpha_p_left_sum", std::accumulate(bs.alpha_p.begin(), bs.alpha_p.end(), 0.0)},
              {"alpha_p_right_sum", std::accumulate(bs.alpha_p_tilde.begin(), bs.alpha_p_tilde.end(), 0.0)}};
}

/// Assimilation over T_window from the configured initial scheme: result.json
/// and xi.csv over the whole horizon with the identified scheme.
inline json cmd_assimilate(const ExperimentConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const auto out = detail::prepare_out(c.out);
  const int w = window_steps_of(c);
  const AssimilationResult r = assimilate(s, w, c.eta);
  const HorizonRun post = run_horizon(s, r.optimal);
  const HorizonRun before = run_horizon(s, r.initial);
  if (!post.xi.empty()) detail::write_xi_csv(out / "xi.csv", post.xi);
  if (!before.xi.empty()) detail::write_xi_csv(out / "xi_initial.csv", before.xi);

  const double T = w * s.grid.tau;
  const double horizon = c.n_steps * s.grid.tau;
  json post_json{{"diverged_at", post.diverged_at ? json(*post.diverged_at) : json(nullptr)}};
  if (!post.xi.empty()) {
    post_json["mean_after_window"] = detail::mean_over(post.xi, T, horizon);
    post_json["max_after_window"] = detail::max_over(post.xi, T, horizon);
  }
  json initial_json{{"diverged_at", before.diverged_at ? json(*before.diverged_at) : json(nullptr)}};
  if (!before.xi.empty()) {
    initial_json["mean_after_window"] = detail::mean_over(before.xi, T, horizon);
    initial_json["max_after_window"] = detail::max_over(before.xi, T, horizon);
  }

  json result{{"command", "assimilate"},
              {"config", to_json(c)},
              {"window_steps", w},
              {"T_window", T},
              {"alpha_initial", scheme_to_json(r.initial)},
              {"alpha", scheme_to_json(r.optimal)},
              {"termination", to_string(r.minimization.termination)},
              {"iterations", r.minimization.iterations},
              {"evaluations", r.minimization.n_evaluations},
              {"cost_initial", r.initial_report.total},
              {"cost_final",
               {{"total", r.final_report.total},
                {"misfit", r.final_report.misfit},
                {"regularization", r.final_report.regularization}}},
              {"cost_history", r.minimization.cost_history},
              {"grad_norm_history", r.minimization.grad_norm_history},
              {"recovered", recovered_json(r.optimal)},
              {"predicted", predictions_json(s)},
              {"xi_identified", post_json},
              {"xi_initial", initial_json},
              {"notes", notes_json(s)}};
  detail::write_text(out / "result.json", result.dump(2) + "\n");
  log << "assimilate: cost " << r.initial_report.total << " -> " << r.final_report.total << " ("
      << to_string(r.minimization.termination) << ", " << r.minimization.iterations << " iterations)\n"
      << "  alpha_u = [" << r.optimal.alpha_u[0] << ", " << r.optimal.alpha_u[1] << "], alpha_p = ["
      << r.optimal.alpha_p[0] << ", " << r.optimal.alpha_p[1] << "]\n";
  return result;
}

inline std::vector<int> sweep_windows(const ExperimentConfig& c) {
  std::vector<int> ws;
  for (int i = 0; i < c.sweep_count; ++i) {
    const double f = c.sweep_count == 1 ? 0.0 : static_cast<double>(i) / (c.sweep_count - 1);
    const int w = static_cast<int>(std::lround(c.sweep_from + f * (c.sweep_to - c.sweep_from)));
    if (ws.empty() || ws.back() != w) ws.push_back(w);
  }
  return ws;
}

struct SweepResult {
  std::vector<AssimilationResult> runs;
  std::optional<KernelLine> line_left;
  std::optional<KernelLine> line_right;
};

inline SweepResult run_sweep(const Setup& s) {
  SweepResult r;
  for (int w : sweep_windows(s.config)) r.runs.push_back(assimilate(s, w, s.config.eta));
  std::vector<std::pair<double, double>> left, right;
  for (const auto& run : r.runs) {
    left.emplace_back(run.optimal.alpha_p[0], run.optimal.alpha_p[1]);
    right.emplace_back(run.optimal.alpha_p_tilde[0], run.optimal.alpha_p_tilde[1]);
  }
  auto fit = [](const std::vector<std::pair<double, double>>& pts) -> std::optional<KernelLine> {
    if (pts.size() < 2) return std::nullopt;
    const auto [mn, mx] = std::minmax_element(pts.begin(), pts.end());
    if (mn->first == mx->first) return std::nullopt;
    return fit_kernel_line(pts);
  };
  r.line_left = fit(left);
  r.line_right = fit(right);
  return r;
}

/// One assimilation per window in [sweep_from, sweep_to]: alphas.csv and
/// sweep.json with the least-squares line through the (alpha^p_0, alpha^p_1) pairs.
inline json cmd_sweep(const ExperimentConfig& c, std::ostream& log) {
  const Setup s = make_setup(c, c.sweep_to);
  const auto out = detail::prepare_out(c.out);
  const SweepResult r = run_sweep(s);

  std::ostringstream csv;
  csv << "window_steps,T_window,cost";
  for (const char* g : {"u", "u_tilde", "p", "p_tilde"})
    for (int j = 0; j <= c.J; ++j) csv << ",alpha_" << g << "_" << j;
  csv << '\n';
  json runs = json::array();
  for (const auto& run : r.runs) {
    csv << run.window_steps << ',' << detail::fmt(run.window_steps * s.grid.tau) << ','
        << detail::fmt(run.final_report.total);
    for (const auto* g : {&run.optimal.alpha_u, &run.optimal.alpha_u_tilde, &run.optimal.alpha_p,
                          &run.optimal.alpha_p_tilde})
      for (double v : *g) csv << ',' << detail::fmt(v);
    csv << '\n';
    runs.push_back({{"window_steps", run.window_steps},
                    {"cost", run.final_report.total},
                    {"termination", to_string(run.minimization.termination)},
                    {"alpha", scheme_to_json(run.optimal)}});
  }
  detail::write_text(out / "alphas.csv", csv.str());

  auto line_json = [](const std::optional<KernelLine>& l) {
    if (!l) return json(nullptr);
    return json{{"slope", l->slope}, {"intercept", l->intercept}, {"residual", l->residual}};
  };
  json summary{{"command", "sweep"},
               {"config", to_json(c)},
               {"windows", sweep_windows(c)},
               {"kernel_line_left", line_json(r.line_left)},
               {"kernel_line_right", line_json(r.line_right)},
               {"predicted", predictions_json(s)},
               {"runs", runs},
               {"notes", notes_json(s)}};
  detail::write_text(out / "sweep.json", summary.dump(2) + "\n");
  if (r.line_left) log << "sweep: alpha^p line slope " << r.line_left->slope << ", intercept " << r.line_left->intercept
                       << ", rms residual " << r.line_left->residual << "\n";
  return summary;
}

struct GradcheckRow {
  std::string name;
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double rel_error = 0.0;
};

struct GradcheckReport {
  double dot_residual = 0.0;
  double gradient_norm = 0.0;
  double max_rel_error = 0.0;
  std::vector<GradcheckRow> rows;
};

inline std::vector<std::string> control_names(int J) {
  const ControlLayout L{J};
  std::vector<std::string> names(L.size());
  for (int j = 0; j <= J; ++j) {
    const std::string s = "[" + std::to_string(j) + "]";
    names[L.u(j)] = "alpha_u" + s;
    names[L.u_tilde(j)] = "alpha_u_tilde" + s;
    names[L.p(j)] = "alpha_p" + s;
    names[L.p_tilde(j)] = "alpha_p_tilde" + s;
  }
  return names;
}

/// |a - b| / max(|a|, |b|), zero when both vanish.
inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Dot-product residual of the tangent/adjoint pair for one random
/// (dalpha, forcing) draw at the given scheme.
inline double dot_product_residual(const Trajectory& traj, const InteriorStencil& stencil, const BoundaryScheme& bs,
                                   const GridSpec& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ControlVector d(bs.control_size());
  for (double& v : d) v = U(rng);
  LevelFields f = LevelFields::zeros(traj.levels(), grid);
  for (auto& level : f.u)
    for (double& v : level) v = U(rng);
  for (auto& level : f.p)
    for (double& v : level) v = U(rng);

  const Trajectory dt = tlm_run(traj, d, stencil, bs, grid);
  double lhs = 0.0;
  for (std::size_t n = 0; n < dt.states.size(); ++n) {
    for (std::size_t i = 0; i < f.u[n].size(); ++i) lhs += dt.states[n].u[i] * f.u[n][i];
    for (std::size_t i = 0; i < f.p[n].size(); ++i) lhs += dt.states[n].p[i] * f.p[n][i];
  }
  const ControlVector g = adjoint_sweep(traj, f, stencil, bs, grid);
  double rhs = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) rhs += d[i] * g[i];
  return relative_difference(lhs, rhs);
}

inline GradcheckReport run_gradcheck(const Setup& s, double eps = 1e-5) {
  const ExperimentConfig& c = s.config;
  const BoundaryScheme bs = initial_scheme(c);
  const int w = window_steps_of(c);
  const CostConfig cost{w, c.eta, {true, true, true, true}};
  GradcheckReport rep;

  const Trajectory traj = integrate(s.ic, s.stencil, bs, s.grid.with_steps(w));
  std::mt19937_64 rng(20240601);
  rep.dot_residual = dot_product_residual(traj, s.stencil, bs, s.grid.with_steps(w), rng);

  const ControlVector x = to_control(bs);
  const Evaluation ev = evaluate(x, c.J, cost, s.obs, s.ic, s.stencil, s.grid);
  double g2 = 0.0;
  for (double v : ev.gradient) g2 += v * v;
  rep.gradient_norm = std::sqrt(g2);
  const auto names = control_names(c.J);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ControlVector xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double fp = evaluate(xp, c.J, cost, s.obs, s.ic, s.stencil, s.grid).report.total;
    const double fm = evaluate(xm, c.J, cost, s.obs, s.ic, s.stencil, s.grid).report.total;
    GradcheckRow row{names[i], ev.gradient[i], (fp - fm) / (2.0 * eps), 0.0};
    row.rel_error = relative_difference(row.adjoint, row.finite_difference);
    rep.max_rel_error = std::max(rep.max_rel_error, row.rel_error);
    rep.rows.push_back(row);
  }
  return rep;
}

inline constexpr double kGradcheckTolerance = 1e-5;
inline constexpr double kDotProductTolerance = 1e-10;

inline bool gradcheck_passed(const GradcheckReport& r) {
  return r.max_rel_error <= kGradcheckTolerance && r.dot_residual <= kDotProductTolerance;
}

inline json cmd_gradcheck(const ExperimentConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const GradcheckReport rep = run_gradcheck(s);
  char line[160];
  log << "dot-product test relative residual: " << detail::fmt(rep.dot_residual) << "\n";
  log << "gradient norm: " << detail::fmt(rep.gradient_norm) << "\n";
  std::snprintf(line, sizeof line, "%-20s %24s %24s %12s\n", "component", "adjoint", "finite difference", "rel error");
  log << line;
  json rows = json::array();
  for (const auto& r : rep.rows) {
    std::snprintf(line, sizeof line, "%-20s %24.16e %24.16e %12.3e\n", r.name.c_str(), r.adjoint,
                  r.finite_difference, r.rel_error);
    log << line;
    rows.push_back({{"component", r.name},
                    {"adjoint", r.adjoint},
                    {"finite_difference", r.finite_difference},
                    {"rel_error", r.rel_error}});
  }
  const bool ok = gradcheck_passed(rep);
  log << (ok ? "gradcheck: PASS" : "gradcheck: FAIL") << "\n";
  json report{{"command", "gradcheck"},  {"config", to_json(c)},
              {"dot_residual", rep.dot_residual}, {"gradient_norm", rep.gradient_norm},
              {"max_rel_error", rep.max_rel_error}, {"passed", ok},
              {"rows", rows}};
  if (c.out != ".") {
    const auto out = detail::prepare_out(c.out);
    detail::write_text(out / "gradcheck.json", report.dump(2) + "\n");
  }
  return report;
}

/// beta.csv: velocity errors over tau/h in (0, 1] for each configured k,
/// plus dispersion.json with the closed-form markers at the config's tau.
inline json cmd_dispersion(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  const GridSpec grid = grid_of(c);
  const auto out = detail::prepare_out(c.out);
  std::vector<int> ks = c.dispersion_k;
  if (ks.empty() && c.initial == "modes")
    for (const ModeSpec& m : c.modes)
      if (m.k >= 1) ks.push_back(m.k);
  if (ks.empty()) ks = {2, 3, 5};
  for (int k : ks) require(k >= 1 && k <= c.N - 1, "dispersion: k must lie in [1, N-1]");

  std::ostringstream csv;
  csv << "k,tau_over_h,beta2_minus_1,beta4_minus_1\n";
  for (int k : ks)
    for (int i = 1; i <= 100; ++i) {
      const double ratio = i / 100.0;
      const double tau = ratio * grid.h;
      csv << k << ',' << detail::fmt(ratio) << ',' << detail::fmt(beta2(k, grid.h, tau) - 1.0) << ','
          << detail::fmt(beta4(k, grid.h, tau) - 1.0) << '\n';
    }
  detail::write_text(out / "beta.csv", csv.str());

  json modes = json::array();
  for (int k : ks) {
    const DispersionReport r2 = dispersion_report(k, grid, 2);
    const DispersionReport r4 = dispersion_report(k, grid, 4);
    modes.push_back({{"k", k},
                     {"beta2_minus_1", r2.beta2 - 1.0},
                     {"beta4_minus_1", r2.beta4 - 1.0},
                     {"T_shift_2", r2.T_shift},
                     {"T_shift_4", r4.T_shift},
                     {"c_u_2", r2.c_u},
                     {"c_p_2", r2.c_p},
                     {"c_u_4", r4.c_u},
                     {"c_p_4", r4.c_p},
                     {"kernel_tangent", r2.kernel_tangent}});
  }
  json singular{{"kappa", nullptr}};
  try {
    const double kappa = second_order_c_singularity(grid.h, grid.tau);
    singular = json{{"kappa", kappa}, {"kappa_over_pi", kappa / std::numbers::pi}};
  } catch (const contract_error&) {
  }
  const int k_next = static_cast<int>(std::ceil(singular["kappa_over_pi"].is_number()
                                                    ? singular["kappa_over_pi"].get<double>()
                                                    : 0.0));
  if (k_next > 0) {
    singular["first_unreachable_k"] = k_next;
    singular["c_at_first_unreachable_k"] = second_order_c(k_next * std::numbers::pi, grid.h, grid.tau);
  }
  json summary{{"command", "dispersion"},
               {"config", to_json(c)},
               {"tau_over_h", grid.courant()},
               {"modes", modes},
               {"second_order_singularity", singular}};
  detail::write_text(out / "dispersion.json", summary.dump(2) + "\n");
  for (const auto& m : modes)
    log << "k = " << m["k"].get<int>() << ": beta2 - 1 = " << m["beta2_minus_1"].get<double>()
        << ", beta4 - 1 = " << m["beta4_minus_1"].get<double>() << "\n";
  return summary;
}

}  // namespace wavebound
