#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "wavebound/wave_core.hpp"

using namespace wavebound;
using std::numbers::pi;

namespace {

const GridSpec kGrid = GridSpec::make(30, 1.0 / 120.0, 100);

// Straight transcription of the row formulas, second-order interior.
std::vector<double> dp_reference(const std::vector<double>& p, const BoundaryScheme& bs, int N, double h) {
  std::vector<double> d(static_cast<std::size_t>(N) - 1);
  double left = 0.0, right = 0.0;
  for (int j = 0; j <= bs.J; ++j) {
    left += bs.alpha_p[j] * p[j];
    right += bs.alpha_p_tilde[j] * p[N - j - 1];
  }
  d[0] = left / h;
  for (int i = 2; i <= N - 2; ++i) d[i - 1] = (p[i] - p[i - 1]) / h;
  d[N - 2] = -right / h;
  return d;
}

std::vector<double> du_reference(const std::vector<double>& u, const BoundaryScheme& bs, int N, double h) {
  std::vector<double> d(static_cast<std::size_t>(N));
  double left = 0.0, right = 0.0;
  for (int j = 0; j <= bs.J; ++j) {
    left += bs.alpha_u[j] * u[j];
    right += bs.alpha_u_tilde[j] * u[N - j];
  }
  d[0] = left / h;
  for (int m = 1; m <= N - 2; ++m) d[m] = (u[m + 1] - u[m]) / h;
  d[N - 1] = -right / h;
  return d;
}

State mode_state(int k, const GridSpec& g, double a = 1.0, double b = 1.0) {
  State s = State::zero(g);
  for (int i = 1; i < g.N; ++i) s.u[i] = a * std::sin(k * pi * g.x_u(i));
  for (int m = 0; m < g.N; ++m) s.p[m] = b * std::cos(k * pi * g.x_p(m));
  return s;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(DerivativeP, ConstantFieldGivesZero) {
  const std::vector<double> p(30, 2.5);
  for (int order : {2, 4}) {
    const auto d = derivative_p(p, InteriorStencil::of_order(order), BoundaryScheme::classical(), kGrid);
    ASSERT_EQ(d.size(), 29u);
    for (double v : d) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(DerivativeP, LinearFieldGivesOne) {
  std::vector<double> p(30);
  for (int m = 0; m < 30; ++m) p[m] = kGrid.x_p(m);
  const auto d = derivative_p(p, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid);
  for (double v : d) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(DerivativeP, BoundaryRowUsesControlCoefficients) {
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_p = {-1.023, 1.023};
  const State s = mode_state(3, kGrid);
  const auto d = derivative_p(s.p, InteriorStencil::second_order(), bs, kGrid);
  EXPECT_NEAR(d[0], 1.023 * (s.p[1] - s.p[0]) / kGrid.h, 1e-12);
  EXPECT_LT(max_diff(d, dp_reference(s.p, bs, 30, kGrid.h)), 1e-12);
}

TEST(DerivativeP, RightRowUsesReversedIndices) {
  BoundaryScheme bs = BoundaryScheme::classical(2);
  bs.alpha_p_tilde = {-0.7, 0.4, 0.2};
  std::vector<double> p(30);
  for (int m = 0; m < 30; ++m) p[m] = std::exp(0.1 * m);
  const auto d = derivative_p(p, InteriorStencil::second_order(), bs, kGrid);
  EXPECT_NEAR(d[28], -(-0.7 * p[29] + 0.4 * p[28] + 0.2 * p[27]) / kGrid.h, 1e-10);
}

TEST(DerivativeP, RejectsWrongSize) {
  const std::vector<double> p(29, 0.0);
  EXPECT_THROW(derivative_p(p, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid), contract_error);
}

TEST(DerivativeP, FourthOrderExactForCubicsInInterior) {
  std::vector<double> p(30);
  auto f = [](double x) { return x * x * x - 0.3 * x * x + x; };
  auto df = [](double x) { return 3 * x * x - 0.6 * x + 1.0; };
  for (int m = 0; m < 30; ++m) p[m] = f(kGrid.x_p(m));
  const auto d = derivative_p(p, InteriorStencil::fourth_order(), BoundaryScheme::classical(), kGrid);
  for (int i = 2; i <= 28; ++i) EXPECT_NEAR(d[i - 1], df(kGrid.x_u(i)), 1e-11) << i;
}

TEST(DerivativeU, ZeroFieldGivesZero) {
  const std::vector<double> u(31, 0.0);
  for (double v : derivative_u(u, InteriorStencil::fourth_order(), BoundaryScheme::classical(), kGrid))
    EXPECT_EQ(v, 0.0);
}

TEST(DerivativeU, LinearFieldGivesOne) {
  std::vector<double> u(31);
  for (int i = 0; i <= 30; ++i) u[i] = kGrid.x_u(i);
  const auto d = derivative_u(u, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid);
  ASSERT_EQ(d.size(), 30u);
  for (double v : d) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(DerivativeU, BoundaryRowUsesControlCoefficients) {
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_u = {-1.048, 1.048};
  const State s = mode_state(3, kGrid);
  const auto d = derivative_u(s.u, InteriorStencil::second_order(), bs, kGrid);
  EXPECT_NEAR(d[0], 1.048 * (s.u[1] - s.u[0]) / kGrid.h, 1e-12);
  EXPECT_LT(max_diff(d, du_reference(s.u, bs, 30, kGrid.h)), 1e-12);
}

TEST(DerivativeU, FourthOrderExactForCubicsInInterior) {
  std::vector<double> u(31);
  auto f = [](double x) { return 2 * x * x * x - x; };
  auto df = [](double x) { return 6 * x * x - 1.0; };
  for (int i = 0; i <= 30; ++i) u[i] = f(kGrid.x_u(i));
  const auto d = derivative_u(u, InteriorStencil::fourth_order(), BoundaryScheme::classical(), kGrid);
  for (int m = 1; m <= 28; ++m) EXPECT_NEAR(d[m], df(kGrid.x_p(m)), 1e-11) << m;
}

TEST(FirstStep, ZeroInitialConditionStaysZero) {
  const auto [half, one] = first_step(State::zero(kGrid), InteriorStencil::second_order(),
                                      BoundaryScheme::classical(), kGrid);
  EXPECT_EQ(half.max_abs(), 0.0);
  EXPECT_EQ(one.max_abs(), 0.0);
  EXPECT_DOUBLE_EQ(half.t, kGrid.tau / 2);
  EXPECT_DOUBLE_EQ(one.t, kGrid.tau);
}

TEST(FirstStep, MatchesHandRolledTwoStageEuler) {
  const BoundaryScheme bs = BoundaryScheme::classical();
  const State ic = mode_state(3, kGrid);
  const auto [half, one] = first_step(ic, InteriorStencil::second_order(), bs, kGrid);
  const double tau = kGrid.tau;

  std::vector<double> uh = ic.u, ph = ic.p;
  const auto dp0 = dp_reference(ic.p, bs, 30, kGrid.h);
  const auto du0 = du_reference(ic.u, bs, 30, kGrid.h);
  for (int i = 1; i < 30; ++i) uh[i] += 0.5 * tau * dp0[i - 1];
  for (int m = 0; m < 30; ++m) ph[m] += 0.5 * tau * du0[m];
  std::vector<double> u1 = ic.u, p1 = ic.p;
  const auto dph = dp_reference(ph, bs, 30, kGrid.h);
  const auto duh = du_reference(uh, bs, 30, kGrid.h);
  for (int i = 1; i < 30; ++i) u1[i] += tau * dph[i - 1];
  for (int m = 0; m < 30; ++m) p1[m] += tau * duh[m];

  EXPECT_LT(max_diff(half.u, uh), 1e-14);
  EXPECT_LT(max_diff(half.p, ph), 1e-14);
  EXPECT_LT(max_diff(one.u, u1), 1e-14);
  EXPECT_LT(max_diff(one.p, p1), 1e-14);
  EXPECT_EQ(one.u.front(), 0.0);
  EXPECT_EQ(one.u.back(), 0.0);
}

// The spatial error does not depend on tau, so the local time error is
// measured against the semi-discrete flow exp(tau A) (Taylor series to
// convergence): halving tau must divide it by about 8.
TEST(FirstStep, LocalTimeErrorIsThirdOrder) {
  const InteriorStencil st = InteriorStencil::second_order();
  const BoundaryScheme bs = BoundaryScheme::classical();
  auto error_at = [&](double tau) {
    const GridSpec g = GridSpec::make(30, tau, 1);
    const State ic = mode_state(1, g);
    const auto [half, one] = first_step(ic, st, bs, g);
    State exact = ic, term = ic;
    for (int n = 1; n < 40; ++n) {
      State next = State::zero(g);
      accumulate_dp(term.p, tau / n, st, bs, g, next.u);
      accumulate_du(term.u, tau / n, st, bs, g, next.p);
      term = next;
      for (std::size_t i = 0; i < exact.u.size(); ++i) exact.u[i] += term.u[i];
      for (std::size_t i = 0; i < exact.p.size(); ++i) exact.p[i] += term.p[i];
    }
    return std::max(max_diff(one.u, exact.u), max_diff(one.p, exact.p));
  };
  const double e1 = error_at(1.0 / 120.0);
  const double e2 = error_at(1.0 / 240.0);
  EXPECT_GT(e1 / e2, 7.0);
  EXPECT_LT(e1 / e2, 9.0);
}

TEST(LeapfrogStep, ZeroStaysZero) {
  const State z = State::zero(kGrid);
  const State next = leapfrog_step(z, z, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid);
  EXPECT_EQ(next.max_abs(), 0.0);
}

TEST(LeapfrogStep, MatchesDirectFormula) {
  const BoundaryScheme bs = BoundaryScheme::classical();
  const State ic = mode_state(3, kGrid);
  const auto [half, one] = first_step(ic, InteriorStencil::second_order(), bs, kGrid);
  const State two = leapfrog_step(ic, one, InteriorStencil::second_order(), bs, kGrid);
  const auto dp = dp_reference(one.p, bs, 30, kGrid.h);
  const auto du = du_reference(one.u, bs, 30, kGrid.h);
  for (int i = 1; i < 30; ++i) EXPECT_NEAR(two.u[i], ic.u[i] + 2 * kGrid.tau * dp[i - 1], 1e-14);
  for (int m = 0; m < 30; ++m) EXPECT_NEAR(two.p[m], ic.p[m] + 2 * kGrid.tau * du[m], 1e-14);
  EXPECT_DOUBLE_EQ(two.t, 2 * kGrid.tau);
}

TEST(LeapfrogStep, IsLinearInTheStates) {
  const InteriorStencil st = InteriorStencil::second_order();
  const BoundaryScheme bs = BoundaryScheme::classical();
  const State a = mode_state(2, kGrid), b = mode_state(5, kGrid);
  State sum = a;
  for (std::size_t i = 0; i < sum.u.size(); ++i) sum.u[i] += b.u[i];
  for (std::size_t i = 0; i < sum.p.size(); ++i) sum.p[i] += b.p[i];
  const State sa = leapfrog_step(a, a, st, bs, kGrid);
  const State sb = leapfrog_step(b, b, st, bs, kGrid);
  const State ss = leapfrog_step(sum, sum, st, bs, kGrid);
  for (std::size_t i = 0; i < ss.u.size(); ++i) EXPECT_NEAR(ss.u[i], sa.u[i] + sb.u[i], 1e-13);
  for (std::size_t i = 0; i < ss.p.size(); ++i) EXPECT_NEAR(ss.p[i], sa.p[i] + sb.p[i], 1e-13);
}

TEST(Integrate, ZeroInitialConditionGivesZeroTrajectory) {
  const Trajectory traj = integrate(State::zero(kGrid), InteriorStencil::fourth_order(),
                                    BoundaryScheme::classical(), kGrid);
  ASSERT_EQ(traj.levels(), kGrid.n_steps + 1);
  for (const State& s : traj.states) EXPECT_EQ(s.max_abs(), 0.0);
  EXPECT_EQ(traj.half.max_abs(), 0.0);
}

TEST(Integrate, StoresInitialConditionAndTimes) {
  const State ic = mode_state(3, kGrid);
  const Trajectory traj = integrate(ic, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid);
  EXPECT_EQ(traj.states[0].u, ic.u);
  EXPECT_EQ(traj.states[0].p, ic.p);
  EXPECT_NEAR(traj.states.back().t, kGrid.n_steps * kGrid.tau, 1e-12);
  for (const State& s : traj.states) {
    EXPECT_EQ(s.u.front(), 0.0);
    EXPECT_EQ(s.u.back(), 0.0);
  }
}

TEST(Integrate, RejectsNonZeroBoundaryValue) {
  State ic = mode_state(3, kGrid);
  ic.u[0] = 1e-3;
  EXPECT_THROW(integrate(ic, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid), contract_error);
}

TEST(Integrate, IsLinearInInitialCondition) {
  const GridSpec g = kGrid.with_steps(2000);
  const InteriorStencil st = InteriorStencil::fourth_order();
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_p = {-1.3, 1.2};
  const State a = mode_state(2, g, 0.7, -0.2), b = mode_state(5, g, 1.1, 0.4);
  State mix = State::zero(g);
  for (std::size_t i = 0; i < mix.u.size(); ++i) mix.u[i] = 2.0 * a.u[i] - 3.0 * b.u[i];
  for (std::size_t i = 0; i < mix.p.size(); ++i) mix.p[i] = 2.0 * a.p[i] - 3.0 * b.p[i];
  const Trajectory ta = integrate(a, st, bs, g), tb = integrate(b, st, bs, g), tm = integrate(mix, st, bs, g);
  for (int n = 0; n <= g.n_steps; n += 97) {
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < mix.u.size(); ++i) {
      err = std::max(err, std::abs(tm.states[n].u[i] - (2.0 * ta.states[n].u[i] - 3.0 * tb.states[n].u[i])));
      scale = std::max(scale, std::abs(tm.states[n].u[i]));
    }
    for (std::size_t i = 0; i < mix.p.size(); ++i) {
      err = std::max(err, std::abs(tm.states[n].p[i] - (2.0 * ta.states[n].p[i] - 3.0 * tb.states[n].p[i])));
      scale = std::max(scale, std::abs(tm.states[n].p[i]));
    }
    EXPECT_LE(err, 1e-12 * scale) << n;
  }
}

TEST(Integrate, LeapfrogIsTimeReversible) {
  const InteriorStencil st = InteriorStencil::second_order();
  const BoundaryScheme bs = BoundaryScheme::classical();
  const Trajectory traj = integrate(mode_state(3, kGrid), st, bs, kGrid);
  GridSpec back = kGrid;
  back.tau = -kGrid.tau;
  for (int n : {2, 50, 100}) {
    const State r = leapfrog_step(traj.states[n], traj.states[n - 1], st, bs, back);
    EXPECT_LT(max_diff(r.u, traj.states[n - 2].u), 1e-13) << n;
    EXPECT_LT(max_diff(r.p, traj.states[n - 2].p), 1e-13) << n;
    EXPECT_NEAR(r.t, traj.states[n - 2].t, 1e-12);
  }
}

TEST(Integrate, SignFlippedBoundaryStencilDiverges) {
  const GridSpec g = kGrid.with_steps(36000);
  BoundaryScheme bs = BoundaryScheme::classical();
  bs.alpha_u = {1.0, -1.0};
  try {
    integrate(mode_state(3, g), InteriorStencil::second_order(), bs, g);
    FAIL() << "expected divergence";
  } catch (const diverged_error& e) {
    EXPECT_LT(e.time(), 300.0);
    EXPECT_GT(e.max_abs(), 1e6);
  }
}

TEST(Integrate, BlowupThresholdIsConfigurable) {
  const State ic = mode_state(3, kGrid);
  IntegrateOptions opts;
  opts.blowup_threshold = 0.5;
  EXPECT_THROW(integrate(ic, InteriorStencil::second_order(), BoundaryScheme::classical(), kGrid, opts),
               diverged_error);
}
