#include "caflow/body.hpp"
#include "caflow/seeds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace caflow;

namespace {

// Radii of curvature of the ellipsoid with semi-axes a at unit normal z: the tangential
// part of D^2 h for h(x) = sqrt(x^T S x), S = diag(a_i^2).
std::vector<double> ellipsoid_radii(const std::vector<double>& a, const Vec& z) {
  const int d = static_cast<int>(a.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) S(i, i) = a[i] * a[i];
  Eigen::VectorXd x = z;
  const double h = std::sqrt(x.dot(S * x));
  Eigen::VectorXd Sx = S * x;
  Eigen::MatrixXd D2 = S / h - Sx * Sx.transpose() / (h * h * h);
  Eigen::MatrixXd B = tangent_basis(z);
  Eigen::MatrixXd T = B.transpose() * D2 * B;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

Mat random_sl(std::mt19937_64& rng, int d, double max_cond) {
  std::normal_distribution<double> gauss;
  for (;;) {
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = (i == j ? 1.0 : 0.0) + 0.3 * gauss(rng);
    const double det = A.determinant();
    if (det <= 0) continue;
    A /= std::pow(det, 1.0 / d);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto sv = svd.singularValues();
    if (sv(0) / sv(d - 1) <= max_cond) return A;
  }
}

}  // namespace

TEST(Body, BallFieldsAreExact) {
  for (auto g : {build_grid(1, 64), build_grid(2, 16)}) {
    const int n = g->dim();
    for (double R : {1.0, 2.5}) {
      const Body b = seeds::ball(g, R);
      for (std::size_t k = 0; k < g->size(); ++k) {
        const auto [l1, l2] = b.radii()[k].eigenvalues(n);
        EXPECT_NEAR(l1, R, 1e-12 * R);
        EXPECT_NEAR(l2, R, 1e-12 * R);
        EXPECT_NEAR(b.s_n()[k], std::pow(R, n), 1e-11);
        EXPECT_NEAR(b.centro_affine()[k] * std::pow(R, 2 * n + 2), 1.0, 1e-11);
      }
      EXPECT_NEAR(volume(b) / (unit_ball_volume(n) * std::pow(R, n + 1)), 1.0, 1e-12);
      const auto [rm, rp] = radii_bounds(b);
      EXPECT_NEAR(rm, R, 1e-13);
      EXPECT_NEAR(rp, R, 1e-13);
    }
  }
}

TEST(Body, EllipsoidRadiiMatchQuadraticFormOracle) {
  const std::vector<double> a{1.0, 1.0, 2.0};
  auto g = build_grid(2, 48);
  const Body b = seeds::ellipsoid(g, a);
  double err = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    const auto want = ellipsoid_radii(a, g->node(k));
    const auto [l1, l2] = b.radii()[k].eigenvalues(2);
    err = std::max({err, std::abs(l1 - want[0]) / want[0], std::abs(l2 - want[1]) / want[1]});
    const Vec& z = g->node(k);
    const double s = std::sqrt(z(0) * z(0) + z(1) * z(1) + 4 * z(2) * z(2));
    const double sn = std::pow(a[0] * a[1] * a[2], 2) / std::pow(s, 4);
    EXPECT_NEAR(b.s_n()[k] / sn, 1.0, 1e-4);
  }
  EXPECT_LT(err, 1e-4);
}

TEST(Body, EllipsoidRadiiConvergeSpectrally) {
  const std::vector<double> a{1.0, 1.0, 2.0};
  double prev = 1.0;
  for (int res : {16, 32, 64}) {
    auto g = build_grid(2, res);
    const Body b = seeds::ellipsoid(g, a);
    double err = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      const auto want = ellipsoid_radii(a, g->node(k));
      const auto [l1, l2] = b.radii()[k].eigenvalues(2);
      err = std::max({err, std::abs(l1 - want[0]) / want[0], std::abs(l2 - want[1]) / want[1]});
    }
    EXPECT_LT(err, prev / 10);
    prev = err;
  }
}

TEST(Body, EllipseCurvatureRadiusMatchesClosedForm) {
  const double a = 1.0, c = 2.0;
  auto g = build_grid(1, 256);
  const Body b = seeds::ellipsoid(g, {a, c});
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double s = b.support()[k];
    const double want = std::pow(a * c, 2) / std::pow(s, 3);
    EXPECT_NEAR(b.radii()[k].xx / want, 1.0, 1e-5);
  }
  const auto sum = curvature_summary(b);
  EXPECT_NEAR(sum.lambda_min, a * a / c, 1e-6);
  EXPECT_NEAR(sum.lambda_max, c * c / a, 4e-5);
  EXPECT_LE(sum.s_n_min, sum.s_n_max);
  EXPECT_NEAR(sum.mean_curvature_max, c / (a * a), 1e-5);
}

TEST(Body, SmoothedSquareRadiusMatchesIndependentStencil) {
  auto g = build_grid(1, 512);
  const double q = 4.0, c = 0.3;
  const Body b = seeds::lq_ball(g, q, c);
  auto s = [&](double t) {
    return (1 - c) * std::pow(std::pow(std::abs(std::cos(t)), q) + std::pow(std::abs(std::sin(t)), q), 1 / q) + c;
  };
  const double h = 1e-3;
  for (std::size_t k = 0; k < g->size(); k += 7) {
    const double t = 2 * kPi * k / g->size();
    const double d2h = (s(t + h) - 2 * s(t) + s(t - h)) / (h * h);
    const double d2h2 = (s(t + 2 * h) - 2 * s(t) + s(t - 2 * h)) / (4 * h * h);
    const double d2 = (4 * d2h - d2h2) / 3;
    EXPECT_NEAR(b.s_n()[k], d2 + s(t), 1e-6);
  }
}

TEST(Body, EllipsoidVolumeMatchesClosedForm) {
  auto g = build_grid(2, 48);
  const Body b = seeds::ellipsoid(g, {0.8, 1.1, 1.5});
  EXPECT_NEAR(volume(b) / (4.0 * kPi / 3.0 * 0.8 * 1.1 * 1.5), 1.0, 1e-6);
  const Body e = seeds::ellipsoid(g, {1, 1, 2});
  const auto [rm, rp] = radii_bounds(e);
  EXPECT_NEAR(rm, 1.0, 2e-3);
  EXPECT_NEAR(rp, 2.0, 2e-3);
}

TEST(Body, PolarOfEllipseIsInverseEllipse) {
  const double a = 0.7, c = 1.6;
  auto g = build_grid(1, 256);
  const Body p = polar(seeds::ellipsoid(g, {a, c}));
  for (std::size_t k = 0; k < g->size(); ++k) {
    const Vec& z = g->node(k);
    EXPECT_NEAR(p.support()[k], std::hypot(z(0) / a, z(1) / c), 1e-6);
  }
  const Body r = polar(seeds::ball(g, 2.0));
  for (double v : r.support()) EXPECT_NEAR(v, 0.5, 1e-13);
}

TEST(Body, PolarOfEllipsoidAndInvolution) {
  auto g = build_grid(2, 32);
  const std::vector<double> a{0.9, 1.2, 1.5};
  const Body e = seeds::ellipsoid(g, a);
  const Body p = polar(e);
  double err = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    const Vec& z = g->node(k);
    const double want = std::sqrt(std::pow(z(0) / a[0], 2) + std::pow(z(1) / a[1], 2) + std::pow(z(2) / a[2], 2));
    err = std::max(err, std::abs(p.support()[k] - want));
  }
  EXPECT_LT(err, 1e-6);
  const Body h = seeds::harmonic(g, 0.05, 4);
  const Body hh = polar(polar(h));
  double inv = 0.0, smax = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    inv = std::max(inv, std::abs(hh.support()[k] - h.support()[k]));
    smax = std::max(smax, h.support()[k]);
  }
  EXPECT_LT(inv / smax, 5e-4);
}

TEST(Body, LinearImages) {
  auto g1 = build_grid(1, 1024);
  const Body disk = seeds::ball(g1, 1.0);
  Mat D(2, 2);
  D << 2.0, 0.0, 0.0, 0.5;
  EXPECT_NEAR(volume(linear_image(disk, D)), kPi, 1e-8);

  auto g = build_grid(2, 24);
  const Body h = seeds::harmonic(g, 0.05, 4);
  const Body same = linear_image(h, Mat::Identity(3, 3));
  for (std::size_t k = 0; k < g->size(); ++k) EXPECT_NEAR(same.support()[k], h.support()[k], 1e-13);
  const Body big = linear_image(h, 1.7 * Mat::Identity(3, 3));
  for (std::size_t k = 0; k < g->size(); ++k) EXPECT_NEAR(big.support()[k], 1.7 * h.support()[k], 1e-12);
  EXPECT_NEAR(volume(big) / volume(h), std::pow(1.7, 3), 1e-10);

  Mat S = Mat::Zero(3, 3);
  S(0, 0) = 1.0;
  S(1, 1) = 1.0;
  EXPECT_THROW(linear_image(h, S), DomainError);
}

TEST(Body, ScalingLaws) {
  auto g = build_grid(2, 16);
  const Body h = seeds::harmonic(g, 0.05, 2);
  const double c = 1.3;
  const Body hc = scaled(h, c);
  EXPECT_NEAR(volume(hc) / volume(h), std::pow(c, 3), 1e-12);
  for (std::size_t k = 0; k < g->size(); ++k) {
    EXPECT_NEAR(hc.s_n()[k] / h.s_n()[k], c * c, 1e-12);
    EXPECT_NEAR(hc.centro_affine()[k] / h.centro_affine()[k], std::pow(c, -6), 1e-11);
  }
}

TEST(Body, CentroAffineExtremesAreSlInvariant) {
  std::mt19937_64 rng(7);
  auto g = build_grid(2, 48);
  const Body ball = seeds::ball(g);
  const Body bump = seeds::harmonic(g, 0.05, 4);
  const Extremes e0 = centro_affine_extremes(bump);
  for (int i = 0; i < 4; ++i) {
    const Mat A = random_sl(rng, 3, 2.0);
    const Body img = linear_image(ball, A);
    const Extremes e = centro_affine_extremes(img);
    EXPECT_NEAR(e.min, 1.0, 1e-6);
    EXPECT_NEAR(e.max, 1.0, 1e-6);
    const Extremes eb = centro_affine_extremes(linear_image(bump, A));
    EXPECT_NEAR(eb.min / e0.min, 1.0, 5e-4);
    EXPECT_NEAR(eb.max / e0.max, 1.0, 5e-4);
  }
}

TEST(Body, MahlerVolumeBelowBallValue) {
  auto g = build_grid(2, 32);
  const double w2 = std::pow(unit_ball_volume(2), 2);
  const Body e = seeds::ellipsoid(g, {0.8, 1.0, 1.25});
  EXPECT_NEAR(volume(e) * volume(polar(e)) / w2, 1.0, 1e-6);
  for (const Body& b : {seeds::harmonic(g, 0.05, 4), seeds::lq_ball(g, 4.0, 0.3)}) {
    EXPECT_LT(volume(b) * volume(polar(b)), w2 * (1 - 1e-4));
  }
}

TEST(Body, SmoothedCapIsEccentricButNearlyMaximal) {
  auto g = build_grid(2, 48);
  const Body cap = seeds::smoothed_cap(g, 0.5, 0.5);
  const auto [rm, rp] = radii_bounds(cap);
  EXPECT_GT(rp / rm, 1.9);
  const double w2 = std::pow(unit_ball_volume(2), 2);
  const double m = volume(cap) * volume(polar(cap)) / w2;
  EXPECT_LT(m, 1.0);
  EXPECT_GT(m, 0.95);
}

TEST(Body, RejectsInvalidSupportFunctions) {
  auto g = build_grid(1, 64);
  ScalarField s(g->size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = 1.0 + 0.5 * std::cos(2 * 2 * kPi * k / 64.0);
  try {
    Body b(g, s);
    FAIL() << "non-convex body accepted";
  } catch (const ConvexityError& e) {
    EXPECT_NE(e.node(), ConvexityError::npos);
  }
  ScalarField neg(g->size(), -1.0);
  EXPECT_THROW(Body(g, neg), ConvexityError);

  ScalarField lop(g->size(), 1.0);
  for (std::size_t k = 0; k < lop.size(); ++k) lop[k] += 0.01 * g->node(k)(0);
  EXPECT_THROW(Body(g, lop, SampleMode::exact), DomainError);
  const Body fixed(g, lop);
  EXPECT_NEAR(fixed.canonicalization().symmetry, 0.01, 1e-15);
  for (double v : fixed.support()) EXPECT_NEAR(v, 1.0, 1e-15);
}
