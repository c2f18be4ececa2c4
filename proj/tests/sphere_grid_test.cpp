#include "caflow/spectral.hpp"
#include "caflow/sphere_grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace caflow;

namespace {

ScalarField sample(const SphereGrid& g, auto&& f) {
  ScalarField out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = f(g.node(k));
  return out;
}

}  // namespace

TEST(SphereGrid, CircleNodesAreUniform) {
  auto g = build_grid(1, 360);
  ASSERT_EQ(g->size(), 360u);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double t = 2.0 * kPi * k / 360.0;
    EXPECT_NEAR(g->node(k)(0), std::cos(t), 1e-15);
    EXPECT_NEAR(g->node(k)(1), std::sin(t), 1e-15);
    EXPECT_DOUBLE_EQ(g->weights()[k], 2.0 * kPi / 360.0);
  }
}

TEST(SphereGrid, InvariantsHoldOnBothDimensions) {
  for (auto g : {SphereGrid::circle(64), SphereGrid::sphere(32, 64), SphereGrid::sphere(9, 18)}) {
    double total = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      EXPECT_NEAR(g->node(k).norm(), 1.0, 1e-14);
      const std::size_t a = g->antipode(k);
      EXPECT_NEAR((g->node(a) + g->node(k)).norm(), 0.0, 1e-14);
      EXPECT_DOUBLE_EQ(g->weights()[a], g->weights()[k]);
      total += g->weights()[k];
    }
    EXPECT_NEAR(total / sphere_area(g->dim()), 1.0, 1e-10);
  }
}

TEST(SphereGrid, RejectsInvalidRequests) {
  EXPECT_THROW(SphereGrid::circle(5), GridError);
  EXPECT_THROW(SphereGrid::circle(9), GridError);
  EXPECT_THROW(SphereGrid::sphere(16, 33), GridError);
  EXPECT_THROW(SphereGrid::sphere(4, 16), GridError);
  EXPECT_THROW(build_grid(3, 16), GridError);
  EXPECT_THROW(grid_from_descriptor("torus:4"), GridError);
  EXPECT_EQ(grid_from_descriptor("sphere:16x32")->descriptor(), "sphere:16x32");
}

TEST(Quadrature, ConstantsAndMoments) {
  auto c = build_grid(1, 128);
  EXPECT_NEAR(integrate(*c, ScalarField(c->size(), 1.0)), 2.0 * kPi, 1e-12);
  auto s = SphereGrid::sphere(32, 64);
  EXPECT_NEAR(integrate(*s, ScalarField(s->size(), 1.0)), 4.0 * kPi, 1e-12);
  const auto z3sq = sample(*s, [](const Vec& z) { return z(2) * z(2); });
  EXPECT_NEAR(integrate(*s, z3sq), 4.0 * kPi / 3.0, 1e-12);
  // Degree-8 polynomial, within the design degree of 32 Gauss latitudes.
  const auto p8 = sample(*s, [](const Vec& z) { return std::pow(z(0), 4) * std::pow(z(2), 4); });
  // int x^4 z^4 over S^2 = 4 pi * 9 / (9!! / 1) with 9!! = 945  -> 4 pi * 9 / 945.
  EXPECT_NEAR(integrate(*s, p8), 4.0 * kPi * 9.0 / 945.0, 1e-12);
}

TEST(Quadrature, OddFunctionsVanish) {
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  for (auto g : {SphereGrid::circle(90), SphereGrid::sphere(20, 40)}) {
    Vec v(g->dim() + 1);
    for (int i = 0; i < v.size(); ++i) v(i) = nd(rng);
    const auto f = sample(*g, [&](const Vec& z) { return std::pow(v.dot(z), 3) + std::sin(v.dot(z)); });
    EXPECT_NEAR(integrate(*g, f), 0.0, 1e-12);
  }
}

TEST(Spectral, HarmonicsAreOrthonormalUnderQuadrature) {
  auto g = SphereGrid::sphere(16, 32);
  const int L = g->band_limit();
  // Round trip of a band-limited field is exact; coefficients of Y_20 are recovered.
  const double y20 = std::sqrt(5.0 / (16.0 * kPi));
  const auto f = sample(*g, [&](const Vec& z) { return y20 * (3.0 * z(2) * z(2) - 1.0); });
  const auto sf = SpectralField::analyze(g, f);
  for (int m = 0; m <= L; ++m)
    for (int l = m; l <= L; ++l) {
      const double expect = (l == 2 && m == 0) ? 1.0 : 0.0;
      EXPECT_NEAR(sf.cos_coefficients()[sh_index(l, m, L)], expect, 1e-13) << l << "," << m;
      EXPECT_NEAR(sf.sin_coefficients()[sh_index(l, m, L)], 0.0, 1e-13);
    }
  const auto back = sf.synthesize();
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(back[k], f[k], 1e-14);
}

TEST(CovariantHessian, ConstantFieldHasZeroHessian) {
  for (auto g : {SphereGrid::circle(64), SphereGrid::sphere(16, 32)}) {
    const auto H = covariant_hessian(g, ScalarField(g->size(), 1.0));
    for (const auto& h : H) {
      EXPECT_NEAR(h.xx, 0.0, 1e-11);
      EXPECT_NEAR(h.xy, 0.0, 1e-11);
      EXPECT_NEAR(h.yy, 0.0, 1e-11);
    }
  }
}

TEST(CovariantHessian, LinearRestrictionsHaveVanishingRadii) {
  auto c = SphereGrid::circle(360);
  const auto cs = sample(*c, [](const Vec& z) { return z(0); });
  const auto Hc = covariant_hessian(c, cs);
  // Stencil truncation error for cos: h^4 / 90.
  const double h = c->spacing(), tol = 1.01 * std::pow(h, 4) / 90.0;
  for (std::size_t k = 0; k < c->size(); ++k) EXPECT_NEAR(Hc[k].xx + cs[k], 0.0, tol);

  auto s = SphereGrid::sphere(16, 32);
  Vec v(3);
  v << 0.3, -1.2, 0.7;
  const auto f = sample(*s, [&](const Vec& z) { return v.dot(z); });
  const auto H = covariant_hessian(s, f);
  for (std::size_t k = 0; k < s->size(); ++k) {
    EXPECT_NEAR(H[k].xx + f[k], 0.0, 1e-12);
    EXPECT_NEAR(H[k].yy + f[k], 0.0, 1e-12);
    EXPECT_NEAR(H[k].xy, 0.0, 1e-12);
  }
}

TEST(CovariantHessian, MatchesSphericalCoordinateOracle) {
  // f = cos^2(theta): f_tt = -2 cos(2 theta), H_pp = cot(theta) f_t = -2 cos^2(theta), H_tp = 0.
  auto g = SphereGrid::sphere(32, 64);
  const auto f = sample(*g, [](const Vec& z) { return z(2) * z(2); });
  const auto H = covariant_hessian(g, f);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double t = g->angle(k);
    EXPECT_NEAR(H[k].xx, -2.0 * std::cos(2.0 * t), 1e-12);
    EXPECT_NEAR(H[k].yy, -2.0 * std::cos(t) * std::cos(t), 1e-12);
    EXPECT_NEAR(H[k].xy, 0.0, 1e-12);
  }
}

TEST(CovariantHessian, NonZonalOracle) {
  // f = x1 x3 = sin t cos t cos p. In the (e_t, e_p) frame:
  // H_tt = f_tt, H_tp = (f_tp - cot t f_p)/sin t, H_pp = f_pp / sin^2 t + cot t f_t.
  auto g = SphereGrid::sphere(24, 48);
  const auto f = sample(*g, [](const Vec& z) { return z(0) * z(2); });
  const auto H = covariant_hessian(g, f);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double t = g->angle(k);
    const double p = std::atan2(g->node(k)(1), g->node(k)(0));
    const double st = std::sin(t), ct = std::cos(t);
    const double ft = std::cos(2 * t) * std::cos(p), ftt = -2.0 * std::sin(2 * t) * std::cos(p);
    const double fp = -st * ct * std::sin(p), fpp = -st * ct * std::cos(p), ftp = -std::cos(2 * t) * std::sin(p);
    EXPECT_NEAR(H[k].xx, ftt, 1e-12);
    EXPECT_NEAR(H[k].xy, (ftp - ct / st * fp) / st, 1e-11);
    EXPECT_NEAR(H[k].yy, fpp / (st * st) + ct / st * ft, 1e-11);
  }
}

TEST(CovariantHessian, IsLinear) {
  auto g = SphereGrid::sphere(16, 32);
  const auto f1 = sample(*g, [](const Vec& z) { return std::exp(z(0) * z(1)); });
  const auto f2 = sample(*g, [](const Vec& z) { return z(2) * z(2) * z(0); });
  ScalarField sum(g->size());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = 2.0 * f1[k] - 3.0 * f2[k];
  const auto H1 = covariant_hessian(g, f1), H2 = covariant_hessian(g, f2), Hs = covariant_hessian(g, sum);
  for (std::size_t k = 0; k < sum.size(); ++k) {
    EXPECT_NEAR(Hs[k].xx, 2.0 * H1[k].xx - 3.0 * H2[k].xx, 1e-12);
    EXPECT_NEAR(Hs[k].xy, 2.0 * H1[k].xy - 3.0 * H2[k].xy, 1e-12);
    EXPECT_NEAR(Hs[k].yy, 2.0 * H1[k].yy - 3.0 * H2[k].yy, 1e-12);
  }
}

TEST(CovariantHessian, CircleStencilConvergesAtFourthOrder) {
  // f = exp(cos t): f'' = (sin^2 t - cos t) exp(cos t).
  double prev = 0.0;
  for (int N : {32, 64, 128}) {
    auto g = SphereGrid::circle(N);
    const auto f = sample(*g, [](const Vec& z) { return std::exp(z(0)); });
    const auto H = covariant_hessian(g, f);
    double err = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      const double t = g->angle(k);
      err = std::max(err, std::abs(H[k].xx - (std::sin(t) * std::sin(t) - std::cos(t)) * std::exp(std::cos(t))));
    }
    if (prev > 0.0) EXPECT_GT(prev / err, 4.0);
    prev = err;
  }
}

TEST(CovariantHessian, SphereInterpolantConvergesFasterThanSecondOrder) {
  // f = exp(z1): Hess f = P (e1 e1^T) P f - z1 f P.
  double prev = 0.0;
  for (int nlat : {8, 16, 32}) {
    auto g = SphereGrid::sphere(nlat, 2 * nlat);
    const auto f = sample(*g, [](const Vec& z) { return std::exp(z(0)); });
    const auto H = covariant_hessian(g, f);
    double err = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      const Vec& z = g->node(k);
      const Vec& e1 = g->tangent(k, 0);
      const Vec& e2 = g->tangent(k, 1);
      const double fx = std::exp(z(0));
      const double xx = e1(0) * e1(0) * fx - z(0) * fx;
      const double xy = e1(0) * e2(0) * fx;
      const double yy = e2(0) * e2(0) * fx - z(0) * fx;
      err = std::max({err, std::abs(H[k].xx - xx), std::abs(H[k].xy - xy), std::abs(H[k].yy - yy)});
    }
    if (prev > 0.0) EXPECT_GT(prev / err, 4.0);
    prev = err;
  }
}

TEST(Spectral, PointEvaluationMatchesNodeJetsAndIsPoleSafe) {
  auto g = SphereGrid::sphere(16, 32);
  const auto f = sample(*g, [](const Vec& z) { return 1.0 + 0.2 * z(0) * z(0) + 0.1 * z(0) * z(2); });
  const auto sf = SpectralField::analyze(g, f);
  const auto jets = sf.synthesize_jets();
  for (std::size_t k = 0; k < g->size(); k += 37) {
    const auto e = sf.evaluate(g->node(k));
    const Vec& e1 = g->tangent(k, 0);
    const Vec& e2 = g->tangent(k, 1);
    EXPECT_NEAR(e.value, jets[k].value, 1e-13);
    EXPECT_NEAR(e1.dot(e.radii * e1), jets[k].hess.xx + jets[k].value, 1e-12);
    EXPECT_NEAR(e1.dot(e.radii * e2), jets[k].hess.xy, 1e-12);
    EXPECT_NEAR(e.gradient.dot(e2), jets[k].grad[1], 1e-12);
  }
  // At the pole: f = 1 + 0.2 x1^2 + 0.1 x1 x3, grad F = (0.1, 0, 0), D^2F = [[0.4,0,0.1],[0,0,0],[0.1,0,0]].
  Vec pole(3);
  pole << 0, 0, 1;
  const auto e = sf.evaluate(pole);
  EXPECT_NEAR(e.value, 1.0, 1e-13);
  EXPECT_NEAR(e.gradient(0), 0.1, 1e-13);
  EXPECT_NEAR(e.radii(0, 0), 1.4, 1e-12);
  EXPECT_NEAR(e.radii(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(e.radii(2, 2), 0.0, 1e-12);
}
