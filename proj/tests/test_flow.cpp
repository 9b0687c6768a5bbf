#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace ymk;
using namespace testing_util;

namespace {

const cplx I(0.0, 1.0);

FlowConfig fixed_steps(int k, long steps, Integrator integ = Integrator::euler) {
  FlowConfig c;
  c.k = k;
  c.integrator = integ;
  c.t_max = 1e9;
  c.max_steps = steps;
  c.sample_interval = 1;
  return c;
}

// Independent oracle for the abelian k = 0 flow ∂Γ = −2D*dΓ on T²: a naive DFT of the
// initial data, the exact per-mode solution exp(−2t(|ξ|²I − ξξᵀ)) and a naive inverse DFT.
std::vector<std::vector<cplx>> abelian_mode_solution(const ConnectionField& G0, double t) {
  const auto& g = *G0.grid();
  const int N0 = g.size(0), N1 = g.size(1);
  const double L0 = g.length(0), L1 = g.length(1);
  auto wn = [](int j, int N) { return j <= N / 2 ? j : j - N; };
  std::vector<std::vector<cplx>> hat(2, std::vector<cplx>(g.points(), 0.0));
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < N0; ++a)
      for (int b = 0; b < N1; ++b) {
        cplx s = 0.0;
        for (int x = 0; x < N0; ++x)
          for (int y = 0; y < N1; ++y)
            s += G0[c].at(x * N1 + y)[0] * std::polar(1.0, -two_pi * (double(a) * x / N0 + double(b) * y / N1));
        hat[c][a * N1 + b] = s;
      }
  for (int a = 0; a < N0; ++a)
    for (int b = 0; b < N1; ++b) {
      const double x0 = two_pi * wn(a, N0) / L0, x1 = two_pi * wn(b, N1) / L1;
      const double q = x0 * x0 + x1 * x1;
      const std::size_t p = a * N1 + b;
      if (q == 0.0) continue;
      // transverse part decays at rate 2|ξ|², the longitudinal part is frozen
      const cplx h0 = hat[0][p], h1 = hat[1][p];
      const cplx lon = (x0 * h0 + x1 * h1) / q;
      const double decay = std::exp(-2.0 * q * t);
      hat[0][p] = lon * x0 + decay * (h0 - lon * x0);
      hat[1][p] = lon * x1 + decay * (h1 - lon * x1);
    }
  std::vector<std::vector<cplx>> out(2, std::vector<cplx>(g.points(), 0.0));
  for (int c = 0; c < 2; ++c)
    for (int x = 0; x < N0; ++x)
      for (int y = 0; y < N1; ++y) {
        cplx s = 0.0;
        for (int a = 0; a < N0; ++a)
          for (int b = 0; b < N1; ++b)
            s += hat[c][a * N1 + b] * std::polar(1.0, two_pi * (double(a) * x / N0 + double(b) * y / N1));
        out[c][x * N1 + y] = s / double(g.points());
      }
  return out;
}

}  // namespace

TEST(Flow, ConfigValidation) {
  FlowConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt_policy = DtPolicy::fixed;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FlowConfig{};
  c.cfl_safety = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FlowConfig{};
  c.k = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FlowConfig{};
  c.rho = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Flow, CflFormula) {
  auto g = unit_square(32);
  EXPECT_DOUBLE_EQ(cfl_timestep(*g, 0, 2.0, 0.5), 0.5 / std::pow(two_pi * g->band_limit(), 2));
  for (int k = 0; k <= 2; ++k) {
    auto coarse = TorusGrid::make({32, 32}, {1.0, 1.0}, 10);
    auto fine = TorusGrid::make({64, 64}, {1.0, 1.0}, 20);
    double ratio = cfl_timestep(*coarse, k, 2.0) / cfl_timestep(*fine, k, 2.0);
    EXPECT_NEAR(ratio, std::pow(2.0, 2 * k + 2), 1e-9 * ratio);
  }
  EXPECT_DOUBLE_EQ(cfl_timestep(*g, 1, 8.0), 0.25 * cfl_timestep(*g, 1, 2.0));
  double x = g->xi_max();
  EXPECT_DOUBLE_EQ(cfl_timestep(*g, 1, 2.0, 0.5, 2.0), 0.5 / (2.0 * std::pow(x, 4) + x * x));
}

TEST(Flow, FlatStartStaysFlat) {
  auto g = unit_square(16);
  FlowConfig c;
  c.k = 1;
  c.t_max = 1e-5;
  auto res = run_flow(zero_connection(g, StructureGroup::su2()), c);
  EXPECT_FALSE(res.blowup.flag);
  EXPECT_NEAR(res.final_state.t, c.t_max, 1e-18);
  EXPECT_EQ(max_abs(res.final_state.connection), 0.0);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.ym, 0.0);
    EXPECT_EQ(r.ymk, 0.0);
    EXPECT_EQ(r.grad_norm, 0.0);
    EXPECT_EQ(r.sup_F, 0.0);
    EXPECT_EQ(r.local_lp_max, 0.0);
    for (double s : r.smoothing) EXPECT_EQ(s, 0.0);
  }
}

TEST(Flow, EulerCflDissipates) {
  auto g = unit_square(32);
  Rng rng(1);
  FlowState s;
  s.connection = random_connection(g, StructureGroup::su2(), 0.5, 3, rng);
  auto cfg = fixed_steps(1, 0);
  double E = ymk_energy(s.connection, 1);
  for (int n = 0; n < 300; ++n) {
    s = step(s, cfg);
    double En = ymk_energy(s.connection, 1);
    ASSERT_LE(En, E) << "step " << n;
    E = En;
  }
  EXPECT_GT(s.last_dissipation, 0.0);
}

TEST(Flow, DissipationDefectIsFirstOrderInStep) {
  auto g = unit_square(32);
  Rng rng(2);
  auto G = random_connection(g, StructureGroup::su2(), 0.5, 3, rng);
  auto cfg = fixed_steps(1, 0);
  const double dt0 = timestep(cfg, *g);
  FlowState s;
  s.connection = G;
  const double E0 = ymk_energy(G, 1);
  const double g2 = l2_norm_sq(grad_discrete(G, cfg.energy_spec()));
  std::vector<double> dts, defects;
  for (int h = 0; h < 4; ++h) {
    double dt = dt0 / std::pow(2.0, h);
    auto next = step(s, cfg, dt);
    dts.push_back(std::log(dt));
    defects.push_back(std::log(std::abs((ymk_energy(next.connection, 1) - E0) / dt + g2)));
  }
  for (int h = 1; h < 4; ++h) {
    double slope = (defects[h] - defects[h - 1]) / (dts[h] - dts[h - 1]);
    EXPECT_NEAR(slope, 1.0, 0.2);
  }
}

TEST(Flow, EulerBeyondCflDivergesOnAbelianData) {
  auto g = unit_square(32);
  Rng rng(3);
  auto G = random_connection(g, StructureGroup::u1(), 0.1, g->band_limit(), rng);
  auto cfg = fixed_steps(0, 0);
  const double dt = timestep(cfg, *g);
  FlowState stable, unstable;
  stable.connection = unstable.connection = G;
  for (int n = 0; n < 100; ++n) {
    stable = step(stable, cfg, dt);
    unstable = step(unstable, cfg, 4.0 * dt);
  }
  EXPECT_LT(l2_norm_sq(stable.connection), l2_norm_sq(G));
  EXPECT_GT(l2_norm_sq(unstable.connection), 1e6 * l2_norm_sq(G));
}

TEST(Flow, AbelianTrajectoryMatchesPerModeSolution) {
  auto g = unit_square(32);
  Rng rng(4);
  auto G = random_connection(g, StructureGroup::u1(), 0.2, 4, rng);
  FlowConfig cfg;
  cfg.k = 0;
  cfg.integrator = Integrator::rk4;
  cfg.t_max = 0.01;
  cfg.sample_interval = 1000000;
  auto res = run_flow(G, cfg);
  ASSERT_FALSE(res.blowup.flag);
  EXPECT_DOUBLE_EQ(res.final_state.t, 0.01);
  auto ref = abelian_mode_solution(G, 0.01);
  double err = 0.0;
  for (int c = 0; c < 2; ++c)
    for (std::size_t p = 0; p < g->points(); ++p)
      err += std::norm(res.final_state.connection[c].at(p)[0] - ref[c][p]);
  EXPECT_LE(std::sqrt(err * g->cell_volume()), 1e-6);
}

TEST(Flow, ConstantGaugeGivesConjugateTrajectories) {
  auto g = unit_square(32);
  Rng rng(5);
  auto grp = StructureGroup::su2();
  auto G = random_connection(g, grp, 0.5, 3, rng);
  auto X = grp.basis()[0];
  auto Y = grp.basis()[1];
  std::vector<cplx> Z(4);
  for (int e = 0; e < 4; ++e) Z[e] = 0.7 * X[e] - 0.4 * Y[e];
  auto s = GaugeField::exponential(constant_field(g, Z), grp);
  auto cfg = fixed_steps(1, 30);
  auto a = run_flow(G, cfg);
  auto b = run_flow(act_on_connection(s, G), cfg);
  auto Fa = act_on_form(s, curvature(a.final_state.connection));
  auto Fb = curvature(b.final_state.connection);
  EXPECT_LE(max_diff(Fa, Fb), 1e-8 * (1.0 + max_abs(Fa)));
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_NEAR(a.records[i].ymk, b.records[i].ymk, 1e-9 * a.records[i].ymk);
}

TEST(Flow, BlowupFlagOnCeilingAndNonFiniteInput) {
  auto g = unit_square(32);
  Rng rng(6);
  auto G = random_connection(g, StructureGroup::su2(), 0.5, 3, rng);
  auto cfg = fixed_steps(0, 10);
  cfg.sup_ceiling = 1e-3;
  auto res = run_flow(G, cfg);
  EXPECT_TRUE(res.blowup.flag);
  EXPECT_EQ(res.blowup.reason, "sup_F exceeded ceiling");
  EXPECT_EQ(res.blowup.location.size(), 2u);
  EXPECT_TRUE(res.final_state.blowup);
  EXPECT_EQ(res.final_state.step_index, 0);

  ConnectionField bad = G;
  bad[0].at(3)[0] = cplx(std::nan(""), 0.0);
  EXPECT_THROW(run_flow(bad, fixed_steps(0, 1)), std::invalid_argument);
  FlowState s;
  s.connection = bad;
  auto next = step(s, fixed_steps(0, 1), 1e-6);
  EXPECT_TRUE(next.blowup);
  EXPECT_EQ(next.t, 0.0);
}

TEST(Flow, EulerAtLargeStepIsFlaggedAsBlowup) {
  auto g = unit_square(32);
  Rng rng(7);
  auto G = random_connection(g, StructureGroup::u1(), 0.1, g->band_limit(), rng);
  FlowConfig cfg;
  cfg.k = 0;
  cfg.dt_policy = DtPolicy::fixed;
  cfg.dt = 8.0 * cfl_timestep(*g, 0, 2.0);
  cfg.t_max = 1.0;
  cfg.sample_interval = 1000;
  auto res = run_flow(G, cfg);
  EXPECT_TRUE(res.blowup.flag);
  EXPECT_LT(res.final_state.t, 1.0);
  EXPECT_TRUE(res.final_state.connection.all_finite());
}

TEST(Flow, ConcentrationScan) {
  auto g = unit_square(32);
  auto grp = StructureGroup::su2();
  EXPECT_EQ(blowup_monitor(curvature(zero_connection(g, grp)), 0.1, 3.0).local_lp_max, 0.0);
  const std::vector<double> c{0.3125, 0.6875};
  auto G = lump(g, grp, 2.0, 0.06, c);
  auto F = curvature(G);
  auto rep = blowup_monitor(F, 0.1, 3.0, 4);
  const double cell = 4.0 / 32.0;
  for (int a = 0; a < 2; ++a) {
    EXPECT_LE(std::abs(rep.max_center[a] - c[a]), cell);
    EXPECT_LE(std::abs(rep.sup_location[a] - c[a]), cell);
  }
  EXPECT_LE(rep.local_lp_max, lp_mass(F, 3.0));
  EXPECT_FALSE(rep.concentration_points.empty());
  // brute-force ball mass at the reported center
  auto mask = ball_mask(g, rep.max_center, 0.1);
  EXPECT_NEAR(rep.local_lp_max, lp_mass(F, 3.0, &mask), 1e-10 * rep.local_lp_max);
}

TEST(Flow, RescaleIdentityAndValidation) {
  auto g = unit_square(32);
  Rng rng(8);
  auto G = random_connection(g, StructureGroup::su2(), 0.5, 3, rng);
  EXPECT_EQ(max_diff(rescale_snapshot(G, {0.5, 0.5}, 1.0), G), 0.0);
  for (double bad : {0.3, std::ldexp(1.0, -7), 2.0, 0.0, -0.5})
    EXPECT_THROW(rescale_snapshot(G, {0.5, 0.5}, bad), std::invalid_argument);
  EXPECT_THROW(rescale_snapshot(G, {0.5}, 0.5), std::invalid_argument);
}

TEST(Flow, RescaledCurvatureObeysScalingLaw) {
  auto g = unit_square(32);
  Rng rng(9);
  auto grp = StructureGroup::su2();
  // period 1/2 and band 2·2 = 4 keep all products inside the retained band
  auto G = repeat_period(random_connection(g, grp, 0.5, 2, rng), 2);
  const std::vector<double> c{0.4, 0.55};
  auto Gl = rescale_snapshot(G, c, 0.5);
  auto lhs = curvature(Gl);
  auto rhs = zoom(curvature(G), c, 0.5, 2.0);
  EXPECT_LE(max_diff(lhs, rhs), 1e-10 * (1.0 + max_abs(lhs)));
  // the zoom of a single mode sin(4πx_2) at λ = 1/2 about c is sin(2π(x_2 − c_2) + 4πc_2)
  ConnectionField A(g, StructureGroup::u1(), 1);
  A(0) = scalar_times(g, {I}, [](const std::vector<double>& x) { return std::sin(2 * two_pi * x[1]); });
  auto Al = rescale_snapshot(A, c, 0.5);
  auto ref = scalar_times(g, {0.5 * I}, [&](const std::vector<double>& x) {
    return std::sin(two_pi * (x[1] - c[1]) + 2 * two_pi * c[1]);
  });
  EXPECT_LE(max_diff(Al(0), ref), 1e-12);
}

TEST(Flow, RescaleIsMultiplicative) {
  auto g = unit_square(32);
  Rng rng(10);
  auto G = repeat_period(random_connection(g, StructureGroup::su2(), 0.5, 2, rng), 4);
  const std::vector<double> c{0.25, 0.5};
  auto twice = rescale_snapshot(rescale_snapshot(G, c, 0.5), c, 0.5);
  auto once = rescale_snapshot(G, c, 0.25);
  EXPECT_LE(max_diff(twice, once), 1e-10);
}

TEST(Flow, RepeatPeriodMatchesCompressedFunction) {
  auto g = unit_square(16);
  ConnectionField A(g, StructureGroup::u1(), 1);
  A(1) = scalar_times(g, {I}, [](const std::vector<double>& x) { return std::cos(two_pi * (x[0] + 2 * x[1])); });
  auto R = repeat_period(A, 2);
  auto ref = scalar_times(g, {I}, [](const std::vector<double>& x) { return std::cos(2 * two_pi * (x[0] + 2 * x[1])); });
  EXPECT_LE(max_diff(R(1), ref), 1e-12);
}

TEST(Flow, SpectralInterpolantIsExactOffGrid) {
  auto g = TorusGrid::make({32, 16}, {2.0, 1.0});
  auto f = scalar_times(g, {1.0, 0.0, 0.0, 1.0}, [](const std::vector<double>& x) {
    return std::sin(two_pi * 3 * x[0] / 2.0) * std::cos(two_pi * 2 * x[1]);
  });
  SpectralInterpolant I(f);
  EXPECT_EQ(I.modes(), 4u);
  std::vector<double> x{0.377, 0.913};
  auto v = I(x);
  double ref = std::sin(two_pi * 3 * x[0] / 2.0) * std::cos(two_pi * 2 * x[1]);
  EXPECT_NEAR(v[0].real(), ref, 1e-13);
  EXPECT_NEAR(std::abs(v[1]), 0.0, 1e-15);
  auto d = I(x, 1);
  EXPECT_NEAR(d[3].real(), -two_pi * 2 * std::sin(two_pi * 3 * x[0] / 2.0) * std::sin(two_pi * 2 * x[1]), 1e-11);
}

TEST(Flow, BlowupNormalizationOnLumps) {
  auto g = unit_square(32);
  auto grp = StructureGroup::su2();
  for (double amp : {0.5, 3.0, 20.0}) {
    auto G = lump(g, grp, amp, 0.07, {0.5, 0.5});
    auto scan = blowup_monitor(curvature(G), 0.1, 3.0);
    for (int k = 0; k <= 2; ++k) {
      auto r = normalize_blowup(G, scan.sup_location, k);
      EXPECT_NEAR(r.rescaled_peak, 1.0, 1e-10) << "amp=" << amp << " k=" << k;
      EXPECT_NEAR(r.lambda_i, std::pow(r.peak, -(k + 1.0)), 1e-12 * r.lambda_i);
      EXPECT_NEAR(r.spatial_scale, 1.0 / std::sqrt(r.peak), 1e-12);
    }
  }
  EXPECT_THROW(normalize_blowup(zero_connection(g, grp), {0.5, 0.5}, 1), std::domain_error);
}

TEST(Flow, PointwiseCurvatureAgreesWithGridCurvatureOnBandLimitedData) {
  auto g = unit_square(32);
  Rng rng(11);
  // band 3 keeps [Γ,Γ] inside the band, so the grid curvature is exact
  auto G = random_connection(g, StructureGroup::su2(), 0.5, 3, rng);
  auto F = curvature(G);
  const std::size_t p = 37;
  std::vector<double> x{g->coord(p, 0), g->coord(p, 1)};
  auto r = normalize_blowup(G, x, 0);
  FormField Fp(g, StructureGroup::su2(), 2);
  double ref = std::sqrt(norm_sq_field(F)[p]);
  EXPECT_NEAR(r.peak, ref, 1e-10 * ref);
}

TEST(Flow, SmoothingReport) {
  auto g = unit_square(16);
  FlowConfig cfg;
  cfg.k = 0;
  cfg.t_max = 1e-3;
  auto flat = run_flow(zero_connection(g, StructureGroup::u1()), cfg);
  for (const auto& e : smoothing_report(flat.records)) {
    EXPECT_EQ(e.sup, 0.0);
    EXPECT_TRUE(e.finite);
  }
  // abelian k = 0: each mode of F decays like e^{−2|ξ|²t}, so
  // t‖∇F‖² = Σ t|ξ|²e^{−4|ξ|²t}|F̂|² ≤ ‖F₀‖²/(4e).
  auto g32 = unit_square(32);
  Rng rng(12);
  auto G = random_connection(g32, StructureGroup::u1(), 0.3, 4, rng);
  cfg.t_max = 0.02;
  cfg.sample_interval = 4;
  auto res = run_flow(G, cfg);
  auto rep = smoothing_report(res.records);
  ASSERT_EQ(rep.size(), 2u);
  double F0 = l2_norm_sq(curvature(G));
  EXPECT_TRUE(rep[0].finite);
  EXPECT_LE(rep[0].sup, F0 / (4.0 * std::exp(1.0)) * (1.0 + 1e-6));
  EXPECT_GT(rep[0].sup, 0.0);
  EXPECT_TRUE(rep[1].finite);
}

TEST(Flow, RunIsDeterministicAndResumable) {
  auto g = unit_square(16);
  Rng rng(13);
  auto G = random_connection(g, StructureGroup::su2(), 0.5, 3, rng);
  auto cfg = fixed_steps(1, 40);
  auto a = run_flow(G, cfg);
  auto b = run_flow(G, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].ymk, b.records[i].ymk);
  auto half = cfg;
  half.max_steps = 20;
  auto first = run_flow(G, half);
  auto second = run_flow(first.final_state, cfg);
  EXPECT_EQ(second.final_state.step_index, 40);
  EXPECT_LE(max_diff(second.final_state.connection, a.final_state.connection), 1e-12);
}
