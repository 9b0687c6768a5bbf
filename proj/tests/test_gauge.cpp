#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace ymk;
using namespace testing_util;

namespace {

const cplx I(0.0, 1.0);

struct Pair {
  GridPtr g;
  ConnectionField G;
  GaugeField s;
};

Pair random_pair(std::uint64_t seed, StructureGroup grp = StructureGroup::su2(), int N = 64) {
  auto g = TorusGrid::make({N, N}, {1.0, 1.0});
  Rng rng(seed);
  auto G = random_connection(g, grp, 0.6, 2, rng);
  auto s = random_gauge(g, grp, 0.5, 1, rng);
  return {g, G, s};
}

}  // namespace

TEST(Gauge, ExponentialIsUnitaryAndInverse) {
  auto [g, G, s] = random_pair(1);
  EXPECT_LE(s.unitarity_defect(), 1e-12);
  auto one = s * s.inverse();
  auto id = GaugeField::identity(g, StructureGroup::su2());
  EXPECT_LE(max_diff(one.values(), id.values()), 1e-12);
  MatrixField bad = id.values();
  bad *= 2.0;
  EXPECT_THROW(GaugeField::from_values(bad, StructureGroup::su2()), std::invalid_argument);
}

TEST(Gauge, IdentityAndAbelianConstantLeaveConnectionUnchanged) {
  auto [g, G, s] = random_pair(2);
  auto id = GaugeField::identity(g, StructureGroup::su2());
  EXPECT_LE(max_diff(act_on_connection(id, G), G), 1e-15);
  EXPECT_LE(max_diff(act_on_form(id, curvature(G)), curvature(G)), 1e-15);

  Rng rng(3);
  auto grp = StructureGroup::u1();
  auto A = random_connection(g, grp, 0.5, 2, rng);
  auto c = GaugeField::constant(g, grp, {std::exp(I * 0.7)});
  EXPECT_LE(max_diff(act_on_connection(c, A), A), 1e-14);
}

TEST(Gauge, CurvatureTransformsByConjugation) {
  for (std::uint64_t seed : {4, 5, 6}) {
    auto [g, G, s] = random_pair(seed);
    auto lhs = curvature(act_on_connection(s, G));
    auto rhs = act_on_form(s, curvature(G));
    EXPECT_LE(max_diff(lhs, rhs), 1e-10);
  }
}

TEST(Gauge, InvolutionAndCompositionLaw) {
  auto [g, G, s1] = random_pair(7);
  Rng rng(8);
  auto s2 = random_gauge(g, StructureGroup::su2(), 0.4, 1, rng);
  auto back = act_on_connection(s1.inverse(), act_on_connection(s1, G));
  EXPECT_LE(max_diff(back, G), 1e-10);
  auto two_step = act_on_connection(s2, act_on_connection(s1, G));
  auto composed = act_on_connection(s1 * s2, G);
  EXPECT_LE(max_diff(two_step, composed), 1e-10);
  // The other order is not the same action for non-commuting generators.
  auto wrong = act_on_connection(s2 * s1, G);
  EXPECT_GT(max_diff(two_step, wrong), 1e-6);
}

TEST(Gauge, FormActionPreservesNormsAndPoundBracket) {
  auto [g, G, s] = random_pair(9, StructureGroup::su2(), 32);
  Rng rng(10);
  auto w = random_form(g, StructureGroup::su2(), 2, 1.0, 3, rng);
  auto z = random_form(g, StructureGroup::su2(), 2, 1.0, 3, rng);
  auto sw = act_on_form(s, w), sz = act_on_form(s, z);
  EXPECT_LE(max_diff(inner_product(sw, sw), inner_product(w, w)), 1e-12);
  EXPECT_LE(max_diff(act_on_form(s, pound_bracket(w, z)), pound_bracket(sw, sz)), 1e-10);
  FormField bad(g, StructureGroup::u1(), 1);
  EXPECT_THROW(act_on_form(s, bad), std::invalid_argument);
}

TEST(Gauge, CovariantDerivativeIsNatural) {
  auto [g, G, s] = random_pair(11);
  Rng rng(12);
  auto phi = random_form(g, StructureGroup::su2(), 0, 1.0, 2, rng);
  auto lhs = act_on_form(s, covariant_derivative(G, phi));
  auto rhs = covariant_derivative(act_on_connection(s, G), act_on_form(s, phi));
  EXPECT_LE(max_diff(lhs, rhs), 1e-10);
}

TEST(Gauge, EnergiesAreGaugeInvariant) {
  auto [g, G, s] = random_pair(13);
  auto H = act_on_connection(s, G);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  EXPECT_LE(rel(ym_energy(H), ym_energy(G)), 1e-8);
  for (int k = 1; k <= 2; ++k) EXPECT_LE(rel(ymk_energy(H, k), ymk_energy(G, k)), 1e-8);
  EXPECT_LE(rel(bym_energy(H), bym_energy(G)), 1e-8);
}

TEST(Gauge, GradientVanishesOnPureGauge) {
  auto [g, G, s] = random_pair(14);
  auto flat = act_on_connection(s, zero_connection(g, StructureGroup::su2()));
  EXPECT_LE(max_abs(curvature(flat)), 1e-10);
  for (int k = 0; k <= 1; ++k) EXPECT_LE(max_abs(grad_discrete(flat, EnergySpec::ymk(k))), 1e-10 * std::pow(two_pi * 21, 2 * k));
}

TEST(Gauge, PsiRhsFlatAndAbelianSymbol) {
  auto g = unit_square(32);
  auto grp = StructureGroup::u1();
  auto z = zero_connection(g, grp);
  EXPECT_EQ(max_abs(psi_k_rhs(z, z, 0)), 0.0);
  EXPECT_THROW(psi_k_rhs(z, z, 2), std::invalid_argument);

  // Γ = i B cos(2π k·x): Ψ_0 = −c|ξ|² Γ for every polarization B.
  const double k0 = 2, k1 = 1, B0 = 0.3, B1 = -0.5;
  ConnectionField G(g, grp, 1);
  auto wave = [&](const std::vector<double>& x) { return std::cos(two_pi * (k0 * x[0] + k1 * x[1])); };
  G(0) = scalar_times(g, {I * B0}, wave);
  G(1) = scalar_times(g, {I * B1}, wave);
  double xi2 = two_pi * two_pi * (k0 * k0 + k1 * k1);
  auto psi = psi_k_rhs(G, z, 0);
  EXPECT_LE(max_diff(psi, -conventions::gradient_scale * xi2 * G), 1e-8);
  auto psi1 = psi_k_rhs(G, z, 1);
  EXPECT_LE(max_diff(psi1, -conventions::gradient_scale * xi2 * xi2 * G), 1e-8 * xi2 * xi2);
}

TEST(Gauge, PsiRhsOnCoulombDataIsGradientFlow) {
  auto g = unit_square(32);
  auto grp = StructureGroup::su2();
  auto X = grp.basis()[1];
  // divergence-free with respect to Γ₀ = 0: Γ_1 depends on x_2 only
  ConnectionField G(g, grp, 1);
  G(0) = scalar_times(g, X, [](const std::vector<double>& x) { return 0.4 * std::sin(two_pi * x[1]); });
  auto z = zero_connection(g, grp);
  EXPECT_LE(coulomb_residual(G, z), 1e-12);
  EXPECT_LE(max_diff(psi_k_rhs(G, z, 0), -1.0 * grad_discrete(G, EnergySpec::ym())), 1e-10);
}

TEST(Gauge, GaugeStepFixedPointAndUnitarity) {
  auto [g, G, s] = random_pair(15, StructureGroup::su2(), 32);
  auto same = gauge_flow_step(s, G, G, 0, 1e-3);
  EXPECT_LE(max_diff(same.values(), s.values()), 1e-15);

  Rng rng(16);
  auto G0 = random_connection(g, StructureGroup::su2(), 0.5, 2, rng);
  auto A = gauge_generator(G, G0, 0);
  FormField Aform(g, StructureGroup::su2(), 0);
  Aform[0] = A;
  EXPECT_LE(algebra_defect(Aform), 1e-12);
  double amax = max_abs(A);
  for (double dt : {1e-3, 5e-4}) {
    MatrixField raw = s.values();
    for (std::size_t p = 0; p < raw.points(); ++p) mat::mul_add(A.at(p), s.values().at(p), raw.at(p), 2, dt);
    double defect = 0.0;
    for (std::size_t p = 0; p < raw.points(); ++p) {
      auto M = detail::load(raw.at(p), 2);
      defect = std::max(defect, (M.adjoint() * M - detail::CMat::Identity(2, 2)).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(defect, 4.0 * dt * dt * amax * amax);
    auto next = gauge_flow_step(s, G, G0, 0, dt);
    EXPECT_LE(next.unitarity_defect(), 1e-12);
  }
}

TEST(Gauge, AbelianGaugeStepMatchesClosedForm) {
  auto g = unit_square(32);
  auto grp = StructureGroup::u1();
  Rng rng(17);
  auto Gt = random_connection(g, grp, 0.1, 2, rng);
  auto G0 = zero_connection(g, grp);
  auto s = random_gauge(g, grp, 1.0, 2, rng);
  const double dt = 1e-3;
  auto next = gauge_flow_step(s, Gt, G0, 0, dt);
  // A = c D*(Γ−Γ₀) = −c div Γ = iα. The projected Euler step is the phase
  // rotation by atan(α dt); the exact flow with frozen A rotates by α dt.
  MatrixField div = partial(Gt(0), 0) + partial(Gt(1), 1);
  double scheme = 0.0, flow = 0.0, amax = 0.0;
  for (std::size_t p = 0; p < g->points(); ++p) {
    double alpha = (-conventions::gradient_scale * div.at(p)[0]).imag();
    amax = std::max(amax, std::abs(alpha));
    cplx s0 = s.values().at(p)[0];
    scheme = std::max(scheme, std::abs(next.values().at(p)[0] - s0 * std::exp(I * std::atan(alpha * dt))));
    flow = std::max(flow, std::abs(next.values().at(p)[0] - s0 * std::exp(I * alpha * dt)));
  }
  EXPECT_LE(scheme, 1e-13);
  EXPECT_LE(flow, std::pow(amax * dt, 3) / 3.0 + 1e-13);
  EXPECT_GT(amax, 0.0);
}

TEST(Gauge, CoulombResidualDecaysAlongAbelianPsiFlow) {
  auto g = unit_square(32);
  auto grp = StructureGroup::u1();
  Rng rng(18);
  auto G0 = zero_connection(g, grp);
  auto G = random_connection(g, grp, 0.2, 2, rng);
  EXPECT_EQ(coulomb_residual(G0, G0), 0.0);
  double prev = coulomb_residual(G, G0);
  const double dt = 1e-5;
  for (int n = 0; n < 50; ++n) {
    G.axpy(dt, psi_k_rhs(G, G0, 0));
    double r = coulomb_residual(G, G0);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Gauge, EquivalenceFlatIsExact) {
  auto g = unit_square(16);
  auto z = zero_connection(g, StructureGroup::su2());
  auto rep = equivalence_test(z, 0, 1e-3, 1e-4);
  EXPECT_EQ(rep.discrepancy_sup, 0.0);
  EXPECT_EQ(rep.steps, 10);
}

TEST(Gauge, EquivalenceAbelian) {
  auto g = unit_square(32);
  Rng rng(19);
  auto G0 = random_connection(g, StructureGroup::u1(), 0.1, 2, rng);
  auto rep = equivalence_test(G0, 0, 0.01, 1e-5);
  EXPECT_LE(rep.discrepancy_sup, 1e-6);
  EXPECT_EQ(rep.steps, 1000);
}

TEST(Gauge, EquivalenceNonAbelianIsFirstOrderInStep) {
  // 16² is dominated by the truncation tail; 32² resolves the step error
  auto g = unit_square(32);
  Rng rng(20);
  auto G0 = random_connection(g, StructureGroup::su2(), 0.5, 2, rng);
  auto coarse = equivalence_test(G0, 0, 2e-3, 2e-5);
  auto fine = equivalence_test(G0, 0, 2e-3, 1e-5);
  EXPECT_LE(coarse.discrepancy_sup, 1e-4);
  EXPECT_GT(coarse.discrepancy_sup, 0.0);
  double ratio = coarse.discrepancy_sup / fine.discrepancy_sup;
  EXPECT_GT(ratio, 1.8);
  EXPECT_LT(ratio, 2.2);
}
