#pragma once

#include "caflow/errors.hpp"
#include "caflow/linalg.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace caflow {

/// One real value per grid node.
using ScalarField = std::vector<double>;

/// Gauss-Legendre nodes (descending, x_0 near +1) and weights on [-1, 1].
/// The node set is mirrored exactly: x_{count-1-j} == -x_j.
inline void gauss_legendre(int count, std::vector<double>& x, std::vector<double>& w) {
  x.assign(count, 0.0);
  w.assign(count, 0.0);
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (count == 1) p0 = 1.0;
      dp = count * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = count * (z * p1 - p0) / (z * z - 1.0);
    const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = z;
    x[count - 1 - i] = -z;
    w[i] = weight;
    w[count - 1 - i] = weight;
  }
  if (count % 2 == 1) x[count / 2] = 0.0;
}

/// Packed index of degree l, order m (0 <= m <= l <= L), order-major.
inline int sh_index(int l, int m, int L) { return m * (L + 1) - m * (m - 1) / 2 + (l - m); }
inline int sh_count(int L) { return (L + 1) * (L + 2) / 2; }

/// Orthonormal associated Legendre functions split as lambda_l^m(cos t) = sin^m(t) mu_l^m(cos t).
/// mu_l^m is a polynomial in x, so it and its x-derivatives are regular at the poles.
/// Fills mu, dmu, d2mu (size sh_count(L)) at abscissa x.
inline void legendre_mu(int L, double x, double* mu, double* dmu, double* d2mu) {
  double mm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= L; ++m) {
    if (m > 0) mm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    const int base = sh_index(m, m, L);
    mu[base] = mm;
    dmu[base] = 0.0;
    d2mu[base] = 0.0;
    if (m + 1 <= L) {
      const double c = std::sqrt(2.0 * m + 3.0);
      mu[base + 1] = c * x * mm;
      dmu[base + 1] = c * mm;
      d2mu[base + 1] = 0.0;
    }
    for (int l = m + 2; l <= L; ++l) {
      const double ll = static_cast<double>(l) * l, m2 = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * ll - 1.0) / (ll - m2));
      const double lm1 = static_cast<double>(l - 1);
      const double b = std::sqrt((lm1 * lm1 - m2) / (4.0 * lm1 * lm1 - 1.0));
      const int k = base + (l - m);
      mu[k] = a * (x * mu[k - 1] - b * mu[k - 2]);
      dmu[k] = a * (mu[k - 1] + x * dmu[k - 1] - b * dmu[k - 2]);
      d2mu[k] = a * (2.0 * dmu[k - 1] + x * d2mu[k - 1] - b * d2mu[k - 2]);
    }
  }
}

/// Discretization of S^1 (uniform angles) or S^2 (Gauss latitudes x uniform longitudes).
/// Immutable; shared between bodies through std::shared_ptr<const SphereGrid>.
class SphereGrid {
 public:
  static std::shared_ptr<const SphereGrid> circle(int count) {
    if (count < 8) throw GridError("circle grid needs at least 8 nodes, got " + std::to_string(count));
    if (count % 2 != 0)
      throw GridError("antipodal symmetry broken: circle node count " + std::to_string(count) + " is odd");
    auto g = std::shared_ptr<SphereGrid>(new SphereGrid());
    g->n_ = 1;
    g->nlat_ = 1;
    g->nlon_ = count;
    g->band_ = count / 2;
    g->nodes_.reserve(count);
    g->frames_.reserve(count);
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * kPi * k / count;
      Vec z(2), e(2);
      z << std::cos(t), std::sin(t);
      e << -std::sin(t), std::cos(t);
      g->nodes_.push_back(z);
      g->frames_.push_back({e, Vec()});
      g->theta_.push_back(t);
    }
    g->weights_.assign(count, 2.0 * kPi / count);
    return g;
  }

  static std::shared_ptr<const SphereGrid> sphere(int nlat, int nlon) {
    if (nlat < 8 || nlon < 8)
      throw GridError("sphere grid needs at least 8 nodes per axis, got " + std::to_string(nlat) + "x" +
                      std::to_string(nlon));
    if (nlon % 2 != 0)
      throw GridError("antipodal symmetry broken: longitude count " + std::to_string(nlon) + " is odd");
    auto g = std::shared_ptr<SphereGrid>(new SphereGrid());
    g->n_ = 2;
    g->nlat_ = nlat;
    g->nlon_ = nlon;
    g->band_ = std::min(nlat / 2, nlon / 2 - 1);
    gauss_legendre(nlat, g->lat_x_, g->lat_w_);
    const int L = g->band_;
    const int nc = sh_count(L);
    g->mu_.resize(static_cast<std::size_t>(nlat) * nc);
    g->dmu_.resize(g->mu_.size());
    g->d2mu_.resize(g->mu_.size());
    for (int j = 0; j < nlat; ++j) {
      legendre_mu(L, g->lat_x_[j], &g->mu_[j * nc], &g->dmu_[j * nc], &g->d2mu_[j * nc]);
    }
    const double dphi = 2.0 * kPi / nlon;
    for (int j = 0; j < nlat; ++j) {
      const double ct = g->lat_x_[j];
      const double st = std::sqrt((1.0 - ct) * (1.0 + ct));
      for (int i = 0; i < nlon; ++i) {
        const double ph = dphi * i;
        const double cp = std::cos(ph), sp = std::sin(ph);
        Vec z(3), et(3), ep(3);
        z << st * cp, st * sp, ct;
        et << ct * cp, ct * sp, -st;
        ep << -sp, cp, 0.0;
        g->nodes_.push_back(z);
        g->frames_.push_back({et, ep});
        g->weights_.push_back(g->lat_w_[j] * dphi);
        g->theta_.push_back(std::acos(ct));
      }
    }
    return g;
  }

  /// Sphere dimension n (nodes live in R^{n+1}).
  int dim() const { return n_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec>& nodes() const { return nodes_; }
  const Vec& node(std::size_t k) const { return nodes_[k]; }
  const std::vector<double>& weights() const { return weights_; }

  /// Orthonormal tangent frame at node k (second vector empty for n = 1).
  const Vec& tangent(std::size_t k, int axis) const { return axis == 0 ? frames_[k].first : frames_[k].second; }

  std::size_t antipode(std::size_t k) const {
    if (n_ == 1) return (k + nlon_ / 2) % nlon_;
    const std::size_t j = k / nlon_, i = k % nlon_;
    return (nlat_ - 1 - j) * nlon_ + (i + nlon_ / 2) % nlon_;
  }

  int nlat() const { return nlat_; }
  int nlon() const { return nlon_; }
  /// Band limit of the interpolant: Fourier order N/2 for n = 1, harmonic degree L for n = 2.
  int band_limit() const { return band_; }
  /// Polar angle (n = 2) or planar angle (n = 1) of node k.
  double angle(std::size_t k) const { return theta_[k]; }

  /// Uniform angular spacing for n = 1; mean latitude spacing for n = 2.
  double spacing() const { return n_ == 1 ? 2.0 * kPi / nlon_ : kPi / nlat_; }

  /// Spectral radius of the discrete operator f -> (second derivative part of) Hess f.
  /// n = 1: fourth-order central stencil, 16/(3h^2); n = 2: degree-L harmonics, L(L+1).
  double operator_radius() const {
    if (n_ == 1) {
      const double h = spacing();
      return 16.0 / (3.0 * h * h);
    }
    return static_cast<double>(band_) * (band_ + 1);
  }

  std::string descriptor() const {
    return n_ == 1 ? "circle:" + std::to_string(nlon_)
                   : "sphere:" + std::to_string(nlat_) + "x" + std::to_string(nlon_);
  }

  // Latitude tables (n = 2 only).
  const std::vector<double>& lat_x() const { return lat_x_; }
  const std::vector<double>& lat_w() const { return lat_w_; }
  const double* mu(int j) const { return &mu_[static_cast<std::size_t>(j) * sh_count(band_)]; }
  const double* dmu(int j) const { return &dmu_[static_cast<std::size_t>(j) * sh_count(band_)]; }
  const double* d2mu(int j) const { return &d2mu_[static_cast<std::size_t>(j) * sh_count(band_)]; }

  bool same_layout(const SphereGrid& o) const { return n_ == o.n_ && nlat_ == o.nlat_ && nlon_ == o.nlon_; }

 private:
  SphereGrid() = default;

  int n_ = 0;
  int nlat_ = 0;
  int nlon_ = 0;
  int band_ = 0;
  std::vector<Vec> nodes_;
  std::vector<std::pair<Vec, Vec>> frames_;
  std::vector<double> weights_;
  std::vector<double> theta_;
  std::vector<double> lat_x_, lat_w_;
  std::vector<double> mu_, dmu_, d2mu_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

/// n = 1: `resolution` nodes on the circle. n = 2: `resolution` Gauss latitudes and
/// 2 * resolution longitudes.
inline GridPtr build_grid(int n, int resolution) {
  if (n == 1) return SphereGrid::circle(resolution);
  if (n == 2) return SphereGrid::sphere(resolution, 2 * resolution);
  throw GridError("unsupported sphere dimension " + std::to_string(n) + " (expected 1 or 2)");
}

/// Parses "circle:N" or "sphere:NLATxNLON".
inline GridPtr grid_from_descriptor(const std::string& d) {
  const auto colon = d.find(':');
  if (colon == std::string::npos) throw GridError("bad grid descriptor '" + d + "'");
  const std::string kind = d.substr(0, colon), rest = d.substr(colon + 1);
  try {
    if (kind == "circle") return SphereGrid::circle(std::stoi(rest));
    if (kind == "sphere") {
      const auto x = rest.find('x');
      if (x == std::string::npos) throw GridError("bad grid descriptor '" + d + "'");
      return SphereGrid::sphere(std::stoi(rest.substr(0, x)), std::stoi(rest.substr(x + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw GridError("bad grid descriptor '" + d + "'");
  } catch (const std::out_of_range&) {
    throw GridError("bad grid descriptor '" + d + "'");
  }
  throw GridError("bad grid descriptor '" + d + "'");
}

/// Quadrature of a nodal field over the sphere.
inline double integrate(const SphereGrid& grid, std::span<const double> f) {
  const auto& w = grid.weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * f[k];
  return acc;
}

/// Surface area of S^n.
inline double sphere_area(int n) { return n == 1 ? 2.0 * kPi : 4.0 * kPi; }
/// Volume omega_{n+1} of the unit ball in R^{n+1}.
inline double unit_ball_volume(int n) { return n == 1 ? kPi : 4.0 * kPi / 3.0; }

}  // namespace caflow
