#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wavebound/objective.hpp"

using namespace wavebound;
using std::numbers::pi;

namespace {

struct Fixture {
  GridSpec grid;
  InteriorStencil stencil;
  Observations obs;
  State ic;
};

Fixture make_fixture(const std::vector<ModeSpec>& modes, int steps, int order = 2) {
  const GridSpec g = GridSpec::make(30, 1.0 / 120.0, steps);
  Observations obs = sample_observations(modes, g);
  const State ic = obs.state(0);
  return {g, InteriorStencil::of_order(order), std::move(obs), ic};
}

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace

TEST(StateNorm2, ZeroFieldsGiveZero) {
  const GridSpec g = GridSpec::make(30, 0.01, 1);
  EXPECT_EQ(state_norm2(std::vector<double>(31, 0.0), std::vector<double>(30, 0.0), g), 0.0);
}

TEST(StateNorm2, DiscreteParsevalForASineMode) {
  const GridSpec g = GridSpec::make(30, 0.01, 1);
  std::vector<double> du(31);
  for (int i = 0; i <= 30; ++i) du[i] = std::sin(3 * pi * g.x_u(i));
  EXPECT_NEAR(state_norm2(du, std::vector<double>(30, 0.0), g), 0.5, 1e-14);
}

TEST(StateNorm2, IsQuadraticAndIgnoresBoundaryNodes) {
  const GridSpec g = GridSpec::make(10, 0.01, 1);
  std::vector<double> du(11), dp(10);
  for (int i = 0; i <= 10; ++i) du[i] = 0.1 * i - 0.3;
  for (int m = 0; m < 10; ++m) dp[m] = std::cos(m);
  const double base = state_norm2(du, dp, g);
  std::vector<double> du3 = du, dp3 = dp;
  for (double& v : du3) v *= -3;
  for (double& v : dp3) v *= -3;
  EXPECT_NEAR(state_norm2(du3, dp3, g), 9 * base, 1e-13);
  du[0] = 100.0;
  du[10] = -50.0;
  EXPECT_DOUBLE_EQ(state_norm2(du, dp, g), base);
  EXPECT_THROW(state_norm2(dp, dp, g), contract_error);
}

TEST(CostConfig, WindowMustBeAMultipleOfTau) {
  const GridSpec g = GridSpec::make(30, 1.0 / 120.0, 36000);
  EXPECT_EQ(CostConfig::for_window(6.0, g).window_steps, 720);
  EXPECT_DOUBLE_EQ(CostConfig::for_window(6.0, g).window(g), 6.0);
  EXPECT_THROW(CostConfig::for_window(6.001, g), contract_error);
}

TEST(Regularization, MatchesClosedFormArithmetic) {
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_p = {-1.5, 1.55};
  const CostConfig cfg{10, 1e3, {true, true, true, true}};
  ControlVector grad(8, 0.0);
  const double r = add_regularization(to_control(bs), 1, cfg, &grad);
  EXPECT_NEAR(r, 2.5, 1e-10);
  const ControlLayout L{1};
  EXPECT_NEAR(grad[L.p(0)], 100.0, 1e-9);
  EXPECT_NEAR(grad[L.p(1)], 100.0, 1e-9);
  EXPECT_EQ(grad[L.u(0)], 0.0);
  EXPECT_EQ(grad[L.p_tilde(1)], 0.0);
}

TEST(Regularization, VanishesForZeroSumGroupsOnly) {
  const CostConfig cfg{10, 5.0, {true, true, true, true}};
  EXPECT_EQ(add_regularization(to_control(BoundaryScheme::classical(3)), 3, cfg, nullptr), 0.0);
  BoundaryScheme bs = BoundaryScheme::classical(3);
  bs.alpha_u_tilde[2] = 0.1;
  EXPECT_GT(add_regularization(to_control(bs), 3, cfg, nullptr), 0.0);
  CostConfig only_p = cfg;
  only_p.regularized = {false, false, true, true};
  EXPECT_EQ(add_regularization(to_control(bs), 3, only_p, nullptr), 0.0);
}

TEST(Evaluate, TwinObservationsGiveZeroCostAndGradient) {
  Fixture f = make_fixture({{3, 1, 1}}, 720);
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_p = {-2.0, 2.2};
  const Trajectory twin = integrate(f.ic, f.stencil, bs, f.grid);
  for (int n = 0; n <= 720; ++n) {
    f.obs.u[n] = twin.states[n].u;
    f.obs.p[n] = twin.states[n].p;
  }
  const Evaluation ev = evaluate(bs, CostConfig{720, 0.0, {true, true, true, true}}, f.obs, f.ic, f.stencil, f.grid);
  EXPECT_EQ(ev.report.misfit, 0.0);
  EXPECT_EQ(ev.report.total, 0.0);
  for (double v : ev.gradient) EXPECT_EQ(v, 0.0);
}

TEST(Evaluate, ReportsPerLevelErrorsAndTotals) {
  const Fixture f = make_fixture({{3, 1, 1}}, 720);
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_p = {-1.2, 1.25};
  const CostConfig cfg{720, 10.0, {true, true, true, true}};
  const Evaluation ev = evaluate(bs, cfg, f.obs, f.ic, f.stencil, f.grid);
  ASSERT_EQ(ev.report.xi.size(), 721u);
  EXPECT_EQ(ev.report.xi[0], 0.0);
  EXPECT_GT(ev.report.misfit, 0.0);
  EXPECT_NEAR(ev.report.regularization, 10.0 * 0.05 * 0.05, 1e-12);
  EXPECT_DOUBLE_EQ(ev.report.total, ev.report.misfit + ev.report.regularization);
  double trapezoid = 0.0;
  for (int n = 0; n <= 720; ++n) trapezoid += time_weight(n, 720, f.grid.tau) * ev.report.xi[n];
  EXPECT_NEAR(ev.report.misfit, trapezoid, 1e-15);
}

class GradientCheck : public ::testing::TestWithParam<double> {};

TEST_P(GradientCheck, AdjointGradientMatchesCentralDifferences) {
  const double eta = GetParam();
  const Fixture f = make_fixture({{3, 1, 1}}, 720);
  const CostConfig cfg{720, eta, {true, true, true, true}};
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_p = {-1.1, 1.05};
  bs.alpha_u_tilde = {-0.98, 1.02};
  const ControlVector x = to_control(bs);
  const Evaluation ev = evaluate(x, 1, cfg, f.obs, f.ic, f.stencil, f.grid);
  const double eps = 1e-5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ControlVector xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double fd = (evaluate(xp, 1, cfg, f.obs, f.ic, f.stencil, f.grid).report.total -
                       evaluate(xm, 1, cfg, f.obs, f.ic, f.stencil, f.grid).report.total) /
                      (2 * eps);
    EXPECT_LT(rel_diff(ev.gradient[i], fd), 1e-6) << "component " << i << ": " << ev.gradient[i] << " vs " << fd;
  }
}

INSTANTIATE_TEST_SUITE_P(WithAndWithoutRegularization, GradientCheck, ::testing::Values(0.0, 1e3));

TEST(Evaluate, NegativeGradientIsADescentDirection) {
  const Fixture f = make_fixture({{3, 1, 1}}, 720);
  const CostConfig cfg{720, 0.0, {true, true, true, true}};
  const ControlVector x = to_control(BoundaryScheme::classical());
  const Evaluation ev = evaluate(x, 1, cfg, f.obs, f.ic, f.stencil, f.grid);
  ControlVector y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= 1e-3 * ev.gradient[i];
  EXPECT_LT(evaluate(y, 1, cfg, f.obs, f.ic, f.stencil, f.grid).report.total, ev.report.total);
}

TEST(Evaluate, MirroredProblemSwapsLeftAndRightGradients) {
  // u(x) -> u(1-x), p(x) -> -p(1-x) maps mode (k, a, b) to (k, -(-1)^k a, -(-1)^k b).
  const std::vector<ModeSpec> modes{{2, 1.0, 0.3}, {3, 0.5, -0.7}};
  const std::vector<ModeSpec> mirrored{{2, -1.0, -0.3}, {3, 0.5, -0.7}};
  const Fixture f = make_fixture(modes, 600);
  const Fixture m = make_fixture(mirrored, 600);
  BoundaryScheme bs = BoundaryScheme::classical(2);
  bs.alpha_u = {-1.0, 1.1, -0.05};
  bs.alpha_p = {-1.3, 1.2, 0.05};
  bs.alpha_p_tilde = {-0.9, 0.95, 0.0};
  BoundaryScheme swapped = bs;
  std::swap(swapped.alpha_u, swapped.alpha_u_tilde);
  std::swap(swapped.alpha_p, swapped.alpha_p_tilde);
  const CostConfig cfg{600, 0.0, {true, true, true, true}};
  const Evaluation a = evaluate(bs, cfg, f.obs, f.ic, f.stencil, f.grid);
  const Evaluation b = evaluate(swapped, cfg, m.obs, m.ic, m.stencil, m.grid);
  EXPECT_NEAR(a.report.misfit, b.report.misfit, 1e-12 * a.report.misfit);
  const ControlLayout L{2};
  for (int j = 0; j <= 2; ++j) {
    EXPECT_NEAR(a.gradient[L.u(j)], b.gradient[L.u_tilde(j)], 1e-10 * (1 + std::abs(a.gradient[L.u(j)])));
    EXPECT_NEAR(a.gradient[L.p(j)], b.gradient[L.p_tilde(j)], 1e-10 * (1 + std::abs(a.gradient[L.p(j)])));
    EXPECT_NEAR(a.gradient[L.p_tilde(j)], b.gradient[L.p(j)], 1e-10 * (1 + std::abs(a.gradient[L.p_tilde(j)])));
  }
}

TEST(Evaluate, DivergentSchemeGetsPenaltyAndZeroGradient) {
  const Fixture f = make_fixture({{3, 1, 1}}, 36000);
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_u = {1.0, -1.0};
  const Evaluation ev = evaluate(bs, CostConfig{36000, 0.0, {true, true, true, true}}, f.obs, f.ic, f.stencil, f.grid);
  EXPECT_TRUE(ev.report.diverged);
  EXPECT_EQ(ev.report.total, kBlowupPenalty);
  for (double v : ev.gradient) EXPECT_EQ(v, 0.0);
}

TEST(Evaluate, RequiresObservationsCoveringTheWindow) {
  const Fixture f = make_fixture({{3, 1, 1}}, 100);
  EXPECT_THROW(evaluate(BoundaryScheme::classical(), CostConfig{200, 0.0, {true, true, true, true}}, f.obs, f.ic,
                        f.stencil, f.grid),
               contract_error);
}
