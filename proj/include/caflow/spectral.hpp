#pragma once

#include "caflow/linalg.hpp"
#include "caflow/sphere_grid.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace caflow {

/// Value, tangent gradient and tangent Hessian of a field at one grid node, expressed
/// in the node's orthonormal frame (so the round metric is the identity there).
struct NodeJet {
  double value = 0.0;
  double grad[2] = {0.0, 0.0};
  TangentMatrix hess;
};

/// Value and first/second covariant derivatives at an arbitrary unit vector z, in
/// ambient coordinates. `radii` is Hess f + f * P_z restricted to z^perp (zero along z);
/// `boundary` is f z + grad f, the boundary point with outer normal z when f is a
/// support function.
struct PointEval {
  double value = 0.0;
  Vec gradient;
  Vec boundary;
  Mat radii;
};

namespace detail {

// Planar powers w^m = (x1 + i x2)^m for m = 0..M, stored as (Re, Im).
inline void planar_powers(double x1, double x2, int M, std::vector<double>& re, std::vector<double>& im) {
  re.resize(M + 1);
  im.resize(M + 1);
  re[0] = 1.0;
  im[0] = 0.0;
  for (int m = 1; m <= M; ++m) {
    re[m] = re[m - 1] * x1 - im[m - 1] * x2;
    im[m] = re[m - 1] * x2 + im[m - 1] * x1;
  }
}

// Cartesian jet of F(x) = sum_m a_m(x3) Re w^m + b_m(x3) Im w^m.
// For the planar case (dim == 2) a_m, b_m are constants and x3 is absent.
struct CartesianJet {
  double f = 0.0;
  double g[3] = {0.0, 0.0, 0.0};
  double h[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

inline CartesianJet assemble_jet(int dim, int M, const double* a, const double* da, const double* d2a,
                                 const double* b, const double* db, const double* d2b,
                                 const std::vector<double>& U, const std::vector<double>& V) {
  CartesianJet J;
  for (int m = 0; m <= M; ++m) {
    const double am = a[m], bm = b[m];
    J.f += am * U[m] + bm * V[m];
    if (m >= 1) {
      J.g[0] += m * (am * U[m - 1] + bm * V[m - 1]);
      J.g[1] += m * (-am * V[m - 1] + bm * U[m - 1]);
    }
    if (m >= 2) {
      const double c = static_cast<double>(m) * (m - 1);
      J.h[0][0] += c * (am * U[m - 2] + bm * V[m - 2]);
      J.h[0][1] += c * (-am * V[m - 2] + bm * U[m - 2]);
    }
    if (dim == 3) {
      J.g[2] += da[m] * U[m] + db[m] * V[m];
      J.h[2][2] += d2a[m] * U[m] + d2b[m] * V[m];
      if (m >= 1) {
        J.h[0][2] += m * (da[m] * U[m - 1] + db[m] * V[m - 1]);
        J.h[1][2] += m * (-da[m] * V[m - 1] + db[m] * U[m - 1]);
      }
    }
  }
  J.h[1][1] = -J.h[0][0];
  J.h[1][0] = J.h[0][1];
  J.h[2][0] = J.h[0][2];
  J.h[2][1] = J.h[1][2];
  return J;
}

}  // namespace detail

/// Band-limited interpolant of a nodal field: a trigonometric polynomial of order N/2 on
/// S^1, or a real spherical-harmonic expansion of degree L fitted by Gauss quadrature on
/// S^2. Each basis function is the restriction of a Cartesian polynomial, so derivatives
/// are taken on that extension and stay regular at the poles.
class SpectralField {
 public:
  SpectralField() = default;

  static SpectralField analyze(const GridPtr& grid, std::span<const double> values) {
    SpectralField sf;
    sf.grid_ = grid;
    const int L = grid->band_limit();
    if (grid->dim() == 1) {
      const int N = grid->nlon();
      sf.a_.assign(L + 1, 0.0);
      sf.b_.assign(L + 1, 0.0);
      const auto tab = trig_table(N);
      for (int k = 0; k <= L; ++k) {
        double ca = 0.0, cb = 0.0;
        for (int j = 0; j < N; ++j) {
          const int q = static_cast<int>((static_cast<long long>(k) * j) % N);
          ca += values[j] * tab.first[q];
          cb += values[j] * tab.second[q];
        }
        const double scale = (k == 0 || 2 * k == N) ? 1.0 / N : 2.0 / N;
        sf.a_[k] = scale * ca;
        sf.b_[k] = (2 * k == N) ? 0.0 : scale * cb;
      }
      return sf;
    }
    const int nlat = grid->nlat(), nlon = grid->nlon();
    const int nc = sh_count(L);
    sf.a_.assign(nc, 0.0);
    sf.b_.assign(nc, 0.0);
    const auto tab = trig_table(nlon);
    const double dphi = 2.0 * kPi / nlon;
    std::vector<double> C(L + 1), S(L + 1);
    for (int j = 0; j < nlat; ++j) {
      const double* row = &values[static_cast<std::size_t>(j) * nlon];
      for (int m = 0; m <= L; ++m) {
        double c = 0.0, s = 0.0;
        for (int i = 0; i < nlon; ++i) {
          const int q = (m * i) % nlon;
          c += row[i] * tab.first[q];
          s += row[i] * tab.second[q];
        }
        C[m] = c;
        S[m] = s;
      }
      const double x = grid->lat_x()[j];
      const double st = std::sqrt((1.0 - x) * (1.0 + x));
      const double wj = grid->lat_w()[j] * dphi;
      const double* mu = grid->mu(j);
      double stm = 1.0;
      for (int m = 0; m <= L; ++m) {
        const double wm = m == 0 ? 1.0 : std::sqrt(2.0);
        for (int l = m; l <= L; ++l) {
          const int k = sh_index(l, m, L);
          const double basis = wm * stm * mu[k];
          sf.a_[k] += wj * basis * C[m];
          if (m > 0) sf.b_[k] += wj * basis * S[m];
        }
        stm *= st;
      }
    }
    return sf;
  }

  const GridPtr& grid() const { return grid_; }

  /// Removes components that are odd under z -> -z.
  void drop_odd() {
    const int L = grid_->band_limit();
    if (grid_->dim() == 1) {
      for (int k = 1; k <= L; k += 2) a_[k] = b_[k] = 0.0;
      return;
    }
    for (int m = 0; m <= L; ++m)
      for (int l = m; l <= L; ++l)
        if (l % 2 == 1) a_[sh_index(l, m, L)] = b_[sh_index(l, m, L)] = 0.0;
  }

  /// Coefficients of the cosine-type and sine-type basis functions (packed by sh_index for n = 2).
  const std::vector<double>& cos_coefficients() const { return a_; }
  const std::vector<double>& sin_coefficients() const { return b_; }

  /// Values of the interpolant at the grid nodes.
  ScalarField synthesize() const {
    ScalarField out(grid_->size());
    if (grid_->dim() == 1) {
      const int N = grid_->nlon(), L = grid_->band_limit();
      const auto tab = trig_table(N);
      for (int j = 0; j < N; ++j) {
        double v = 0.0;
        for (int k = 0; k <= L; ++k) {
          const int q = static_cast<int>((static_cast<long long>(k) * j) % N);
          v += a_[k] * tab.first[q] + b_[k] * tab.second[q];
        }
        out[j] = v;
      }
      return out;
    }
    const int nlat = grid_->nlat(), nlon = grid_->nlon(), L = grid_->band_limit();
    const auto tab = trig_table(nlon);
    std::vector<double> A(L + 1), B(L + 1);
    for (int j = 0; j < nlat; ++j) {
      axial_sums(j, A.data(), B.data(), nullptr, nullptr, nullptr, nullptr);
      const double x = grid_->lat_x()[j];
      const double st = std::sqrt((1.0 - x) * (1.0 + x));
      for (int i = 0; i < nlon; ++i) {
        double v = 0.0, stm = 1.0;
        for (int m = 0; m <= L; ++m) {
          const int q = (m * i) % nlon;
          v += stm * (A[m] * tab.first[q] + B[m] * tab.second[q]);
          stm *= st;
        }
        out[static_cast<std::size_t>(j) * nlon + i] = v;
      }
    }
    return out;
  }

  /// Value, gradient and covariant Hessian of the interpolant at every node.
  std::vector<NodeJet> synthesize_jets() const {
    std::vector<NodeJet> out(grid_->size());
    const int L = grid_->band_limit();
    if (grid_->dim() == 1) {
      const int N = grid_->nlon();
      const auto tab = trig_table(N);
      for (int j = 0; j < N; ++j) {
        double v = 0.0, d1 = 0.0, d2 = 0.0;
        for (int k = 0; k <= L; ++k) {
          const int q = static_cast<int>((static_cast<long long>(k) * j) % N);
          const double c = tab.first[q], s = tab.second[q];
          v += a_[k] * c + b_[k] * s;
          d1 += k * (-a_[k] * s + b_[k] * c);
          d2 -= static_cast<double>(k) * k * (a_[k] * c + b_[k] * s);
        }
        out[j].value = v;
        out[j].grad[0] = d1;
        out[j].hess.xx = d2;
      }
      return out;
    }
    const int nlat = grid_->nlat(), nlon = grid_->nlon();
    const auto tab = trig_table(nlon);
    std::vector<double> A(L + 1), B(L + 1), dA(L + 1), dB(L + 1), d2A(L + 1), d2B(L + 1);
    std::vector<double> U(L + 1), V(L + 1);
    for (int j = 0; j < nlat; ++j) {
      axial_sums(j, A.data(), B.data(), dA.data(), dB.data(), d2A.data(), d2B.data());
      const double x = grid_->lat_x()[j];
      const double st = std::sqrt((1.0 - x) * (1.0 + x));
      for (int i = 0; i < nlon; ++i) {
        double stm = 1.0;
        for (int m = 0; m <= L; ++m) {
          const int q = (m * i) % nlon;
          U[m] = stm * tab.first[q];
          V[m] = stm * tab.second[q];
          stm *= st;
        }
        const auto J =
            detail::assemble_jet(3, L, A.data(), dA.data(), d2A.data(), B.data(), dB.data(), d2B.data(), U, V);
        const std::size_t k = static_cast<std::size_t>(j) * nlon + i;
        out[k] = project_jet(J, k);
      }
    }
    return out;
  }

  /// Value of the interpolant at an arbitrary unit vector.
  double value(const Vec& z) const {
    const int L = grid_->band_limit();
    auto& w = scratch();
    detail::planar_powers(z(0), z(1), L, w.U, w.V);
    if (grid_->dim() == 1) {
      double v = 0.0;
      for (int k = 0; k <= L; ++k) v += a_[k] * w.U[k] + b_[k] * w.V[k];
      return v;
    }
    w.resize(L);
    legendre_mu(L, z(2), w.mu.data(), w.dmu.data(), w.d2mu.data());
    axial_from(w.mu.data(), nullptr, nullptr, w.A.data(), w.B.data(), nullptr, nullptr, nullptr, nullptr);
    double v = 0.0;
    for (int m = 0; m <= L; ++m) v += w.A[m] * w.U[m] + w.B[m] * w.V[m];
    return v;
  }

  /// Evaluates the interpolant and its covariant derivatives at an arbitrary unit vector.
  PointEval evaluate(const Vec& z) const {
    const int L = grid_->band_limit();
    const int d = grid_->dim() + 1;
    detail::CartesianJet J;
    auto& w = scratch();
    w.resize(L);
    detail::planar_powers(z(0), z(1), L, w.U, w.V);
    if (d == 2) {
      std::fill(w.dA.begin(), w.dA.end(), 0.0);
      J = detail::assemble_jet(2, L, a_.data(), w.dA.data(), w.dA.data(), b_.data(), w.dA.data(), w.dA.data(),
                               w.U, w.V);
    } else {
      legendre_mu(L, z(2), w.mu.data(), w.dmu.data(), w.d2mu.data());
      axial_from(w.mu.data(), w.dmu.data(), w.d2mu.data(), w.A.data(), w.B.data(), w.dA.data(), w.dB.data(),
                 w.d2A.data(), w.d2B.data());
      J = detail::assemble_jet(3, L, w.A.data(), w.dA.data(), w.d2A.data(), w.B.data(), w.dB.data(),
                               w.d2B.data(), w.U, w.V);
    }
    Vec g(d);
    Mat H(d, d);
    for (int r = 0; r < d; ++r) {
      g(r) = J.g[r];
      for (int c = 0; c < d; ++c) H(r, c) = J.h[r][c];
    }
    const Mat P = Mat::Identity(d, d) - z * z.transpose();
    const double radial = z.dot(g);
    PointEval e;
    e.value = J.f;
    e.gradient = P * g;
    e.boundary = J.f * z + e.gradient;
    e.radii = P * H * P + (J.f - radial) * P;
    return e;
  }

 private:
  struct Scratch {
    std::vector<double> U, V, mu, dmu, d2mu, A, B, dA, dB, d2A, d2B;
    void resize(int L) {
      const std::size_t nc = sh_count(L), m = L + 1;
      if (mu.size() < nc) {
        mu.resize(nc);
        dmu.resize(nc);
        d2mu.resize(nc);
      }
      for (auto* v : {&A, &B, &dA, &dB, &d2A, &d2B})
        if (v->size() < m) v->resize(m);
    }
  };
  static Scratch& scratch() {
    thread_local Scratch s;
    return s;
  }

  static std::pair<std::vector<double>, std::vector<double>> trig_table(int N) {
    std::vector<double> c(N), s(N);
    for (int q = 0; q < N; ++q) {
      c[q] = std::cos(2.0 * kPi * q / N);
      s[q] = std::sin(2.0 * kPi * q / N);
    }
    return {c, s};
  }

  void axial_from(const double* mu, const double* dmu, const double* d2mu, double* A, double* B, double* dA,
                  double* dB, double* d2A, double* d2B) const {
    const int L = grid_->band_limit();
    for (int m = 0; m <= L; ++m) {
      const double wm = m == 0 ? 1.0 : std::sqrt(2.0);
      double a = 0, b = 0, da = 0, db = 0, d2a = 0, d2b = 0;
      for (int l = m; l <= L; ++l) {
        const int k = sh_index(l, m, L);
        a += a_[k] * mu[k];
        b += b_[k] * mu[k];
        if (dA) {
          da += a_[k] * dmu[k];
          db += b_[k] * dmu[k];
          d2a += a_[k] * d2mu[k];
          d2b += b_[k] * d2mu[k];
        }
      }
      A[m] = wm * a;
      B[m] = wm * b;
      if (dA) {
        dA[m] = wm * da;
        dB[m] = wm * db;
        d2A[m] = wm * d2a;
        d2B[m] = wm * d2b;
      }
    }
  }

  void axial_sums(int j, double* A, double* B, double* dA, double* dB, double* d2A, double* d2B) const {
    axial_from(grid_->mu(j), grid_->dmu(j), grid_->d2mu(j), A, B, dA, dB, d2A, d2B);
  }

  NodeJet project_jet(const detail::CartesianJet& J, std::size_t k) const {
    const Vec& z = grid_->node(k);
    const Vec& e1 = grid_->tangent(k, 0);
    const Vec& e2 = grid_->tangent(k, 1);
    auto gdot = [&](const Vec& e) { return J.g[0] * e(0) + J.g[1] * e(1) + J.g[2] * e(2); };
    auto hform = [&](const Vec& u, const Vec& v) {
      double acc = 0.0;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) acc += u(r) * J.h[r][c] * v(c);
      return acc;
    };
    const double radial = gdot(z);
    NodeJet out;
    out.value = J.f;
    out.grad[0] = gdot(e1);
    out.grad[1] = gdot(e2);
    out.hess.xx = hform(e1, e1) - radial;
    out.hess.xy = hform(e1, e2);
    out.hess.yy = hform(e2, e2) - radial;
    return out;
  }

  GridPtr grid_;
  std::vector<double> a_, b_;
};

/// Covariant Hessian of a nodal field in each node's orthonormal frame.
/// n = 1: fourth-order periodic central differences. n = 2: second covariant derivative
/// of the degree-L harmonic interpolant.
inline std::vector<TangentMatrix> covariant_hessian(const GridPtr& grid, std::span<const double> s) {
  std::vector<TangentMatrix> out(grid->size());
  if (grid->dim() == 1) {
    const int N = grid->nlon();
    const double h = grid->spacing();
    const double inv = 1.0 / (12.0 * h * h);
    for (int k = 0; k < N; ++k) {
      auto at = [&](int off) { return s[(k + off + N) % N]; };
      out[k].xx = (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) * inv;
    }
    return out;
  }
  const auto jets = SpectralField::analyze(grid, s).synthesize_jets();
  for (std::size_t k = 0; k < jets.size(); ++k) out[k] = jets[k].hess;
  return out;
}

}  // namespace caflow
