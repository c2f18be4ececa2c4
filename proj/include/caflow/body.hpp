#pragma once

#include "caflow/errors.hpp"
#include "caflow/linalg.hpp"
#include "caflow/spectral.hpp"
#include "caflow/sphere_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace caflow {

enum class SampleMode {
  canonicalize,  // symmetrize and (n = 2) project onto the band-limited space
  exact,         // keep the samples bit-for-bit; still validated
};

/// Largest node-wise change applied while canonicalizing the input samples.
struct Canonicalization {
  double symmetry = 0.0;
  double band_limit = 0.0;
};

/// Orthonormal basis of z^perp as the columns of a d x (d-1) matrix.
inline Mat tangent_basis(const Vec& z) {
  const int d = static_cast<int>(z.size());
  Mat B(d, d - 1);
  if (d == 2) {
    B << -z(1), z(0);
    return B;
  }
  Eigen::Vector3d zz(z(0), z(1), z(2));
  Eigen::Vector3d a = std::abs(zz.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  Eigen::Vector3d e1 = (a - a.dot(zz) * zz).normalized();
  Eigen::Vector3d e2 = zz.cross(e1);
  B.col(0) = e1;
  B.col(1) = e2;
  return B;
}

/// Origin-symmetric strictly convex body given by its support function on a grid.
/// Immutable: every derived field is computed once at construction.
class Body {
 public:
  Body(GridPtr grid, ScalarField s, SampleMode mode = SampleMode::canonicalize) : grid_(std::move(grid)) {
    const std::size_t N = grid_->size();
    if (s.size() != N) throw DomainError("support function has " + std::to_string(s.size()) +
                                         " samples, grid has " + std::to_string(N));
    for (std::size_t k = 0; k < N; ++k)
      if (!std::isfinite(s[k])) throw DomainError("non-finite support value at node " + std::to_string(k));

    if (mode == SampleMode::canonicalize) {
      ScalarField sym(N);
      for (std::size_t k = 0; k < N; ++k) {
        sym[k] = 0.5 * (s[k] + s[grid_->antipode(k)]);
        fix_.symmetry = std::max(fix_.symmetry, std::abs(sym[k] - s[k]));
      }
      s = std::move(sym);
      if (grid_->dim() == 2) {
        auto f = SpectralField::analyze(grid_, s);
        f.drop_odd();
        ScalarField band = f.synthesize();
        for (std::size_t k = 0; k < N; ++k) fix_.band_limit = std::max(fix_.band_limit, std::abs(band[k] - s[k]));
        s = std::move(band);
      }
    }
    s_ = std::move(s);

    double smax = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      if (!(s_[k] > 0.0))
        throw ConvexityError("origin not interior: s = " + std::to_string(s_[k]) + " at node " +
                                 std::to_string(k),
                             k);
      smax = std::max(smax, s_[k]);
    }
    for (std::size_t k = 0; k < N; ++k)
      if (std::abs(s_[k] - s_[grid_->antipode(k)]) > 1e-12 * smax)
        throw DomainError("support function not origin-symmetric at node " + std::to_string(k));

    interp_ = SpectralField::analyze(grid_, s_);
    const int n = grid_->dim();
    radii_.resize(N);
    grad_.resize(N);
    if (n == 1) {
      radii_ = covariant_hessian(grid_, s_);
      for (std::size_t k = 0; k < N; ++k) {
        radii_[k].xx += s_[k];
        grad_[k] = interp_.evaluate(grid_->node(k)).gradient;
      }
    } else {
      const auto jets = interp_.synthesize_jets();
      for (std::size_t k = 0; k < N; ++k) {
        radii_[k] = jets[k].hess;
        radii_[k].xx += s_[k];
        radii_[k].yy += s_[k];
        grad_[k] = jets[k].grad[0] * grid_->tangent(k, 0) + jets[k].grad[1] * grid_->tangent(k, 1);
      }
    }

    double lmax = 0.0;
    for (const auto& r : radii_) lmax = std::max(lmax, r.eigenvalues(n).second);
    s_n_.resize(N);
    cac_.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
      const double lmin = radii_[k].eigenvalues(n).first;
      if (!(lmin > 1e-10 * lmax))
        throw ConvexityError("radii of curvature not positive definite at node " + std::to_string(k) +
                                 " (smallest eigenvalue " + std::to_string(lmin) + ")",
                             k);
      s_n_[k] = radii_[k].det(n);
      cac_[k] = 1.0 / (s_n_[k] * std::pow(s_[k], n + 2));
    }
  }

  const GridPtr& grid() const { return grid_; }
  int dim() const { return grid_->dim(); }
  const ScalarField& support() const { return s_; }
  /// Radii-of-curvature matrix per node, in the grid's tangent frame.
  const std::vector<TangentMatrix>& radii() const { return radii_; }
  const ScalarField& s_n() const { return s_n_; }
  /// K / s^{n+2} = 1 / (S_n s^{n+2}).
  const ScalarField& centro_affine() const { return cac_; }
  const SpectralField& interpolant() const { return interp_; }
  const Canonicalization& canonicalization() const { return fix_; }

  /// Boundary point with outer normal at node k.
  Vec boundary_point(std::size_t k) const { return s_[k] * grid_->node(k) + grad_[k]; }

  /// Centro-affine curvature of the interpolant at an arbitrary unit vector.
  double centro_affine_at(const Vec& z) const {
    const PointEval e = interp_.evaluate(z);
    return 1.0 / (tangent_determinant(e.radii, z) * std::pow(e.value, dim() + 2));
  }

 private:
  GridPtr grid_;
  ScalarField s_;
  Canonicalization fix_;
  SpectralField interp_;
  std::vector<TangentMatrix> radii_;
  std::vector<Vec> grad_;
  ScalarField s_n_, cac_;
};

inline double volume(const Body& b) {
  const auto& s = b.support();
  const auto& sn = b.s_n();
  const auto& w = b.grid()->weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) acc += w[k] * s[k] * sn[k];
  return acc / (b.dim() + 1);
}

/// (r_minus, r_plus): in- and circumradius about the origin.
inline std::pair<double, double> radii_bounds(const Body& b) {
  const auto [lo, hi] = std::minmax_element(b.support().begin(), b.support().end());
  return {*lo, *hi};
}

struct CurvatureSummary {
  double s_n_min = 0, s_n_max = 0;
  double cac_min = 0, cac_max = 0;
  double lambda_min = 0, lambda_max = 0;  // smallest lambda_1, largest lambda_n
  double mean_curvature_max = 0;          // max of sum_i 1/lambda_i
};

inline CurvatureSummary curvature_summary(const Body& b) {
  const int n = b.dim();
  CurvatureSummary c;
  c.s_n_min = c.cac_min = c.lambda_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < b.support().size(); ++k) {
    const auto [l1, l2] = b.radii()[k].eigenvalues(n);
    c.s_n_min = std::min(c.s_n_min, b.s_n()[k]);
    c.s_n_max = std::max(c.s_n_max, b.s_n()[k]);
    c.cac_min = std::min(c.cac_min, b.centro_affine()[k]);
    c.cac_max = std::max(c.cac_max, b.centro_affine()[k]);
    c.lambda_min = std::min(c.lambda_min, l1);
    c.lambda_max = std::max(c.lambda_max, l2);
    c.mean_curvature_max = std::max(c.mean_curvature_max, n == 1 ? 1.0 / l1 : 1.0 / l1 + 1.0 / l2);
  }
  return c;
}

struct Extremes {
  double min = 0, max = 0;
  Vec argmin, argmax;
};

namespace detail {

// Local Newton search for a minimum of f on the sphere, in the chart
// xi -> normalize(z0 + B xi), with central-difference derivatives.
template <class F>
std::pair<double, Vec> polish_min(F&& f, Vec z, double reach) {
  const int d = static_cast<int>(z.size()), m = d - 1;
  const double h = 1e-3 * reach;
  double fz = f(z);
  for (int it = 0; it < 8; ++it) {
    const Mat B = tangent_basis(z);
    auto at = [&](const Eigen::VectorXd& xi) {
      Vec y = z + B * xi;
      return f(Vec(y / y.norm()));
    };
    Eigen::VectorXd g(m);
    Eigen::MatrixXd H(m, m);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      e(i) = h;
      const double fp = at(e), fm = at(-e);
      g(i) = (fp - fm) / (2 * h);
      H(i, i) = (fp - 2 * fz + fm) / (h * h);
      for (int j = 0; j < i; ++j) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(m), c = Eigen::VectorXd::Zero(m);
        a(i) = h;
        a(j) = h;
        c(i) = h;
        c(j) = -h;
        H(i, j) = H(j, i) = (at(a) - at(c) - at(-c) + at(-a)) / (4 * h * h);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    Eigen::VectorXd step;
    if (es.eigenvalues().minCoeff() > 0)
      step = -H.ldlt().solve(g);
    else
      step = -g * (reach / std::max(g.norm(), 1e-300));
    if (step.norm() > reach) step *= reach / step.norm();
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls) {
      const double fn = at(step);
      if (fn < fz) {
        Vec y = z + B * step;
        z = y / y.norm();
        fz = fn;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || step.norm() < 1e-10) break;
  }
  return {fz, z};
}

}  // namespace detail

/// Extremes of a smooth function on the sphere, starting from nodal samples and
/// polishing the best few candidates with a local Newton search on `at_point`.
template <class F>
Extremes refined_extremes(const SphereGrid& grid, std::span<const double> nodal, F&& at_point, int candidates = 4) {
  std::vector<std::size_t> order(nodal.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const int c = std::min<int>(candidates, static_cast<int>(order.size()));
  Extremes e;
  e.min = std::numeric_limits<double>::infinity();
  e.max = -e.min;
  const double reach = grid.spacing();
  std::partial_sort(order.begin(), order.begin() + c, order.end(),
                    [&](std::size_t a, std::size_t b) { return nodal[a] < nodal[b]; });
  for (int i = 0; i < c; ++i) {
    auto [v, z] = detail::polish_min(at_point, grid.node(order[i]), reach);
    if (v < e.min) {
      e.min = v;
      e.argmin = z;
    }
  }
  std::partial_sort(order.begin(), order.begin() + c, order.end(),
                    [&](std::size_t a, std::size_t b) { return nodal[a] > nodal[b]; });
  auto neg = [&](const Vec& z) { return -at_point(z); };
  for (int i = 0; i < c; ++i) {
    auto [v, z] = detail::polish_min(neg, grid.node(order[i]), reach);
    if (-v > e.max) {
      e.max = -v;
      e.argmax = z;
    }
  }
  return e;
}

/// Extremes of the centro-affine curvature of the interpolated body.
inline Extremes centro_affine_extremes(const Body& b) {
  return refined_extremes(*b.grid(), b.centro_affine(), [&](const Vec& z) { return b.centro_affine_at(z); });
}

/// Support function of the polar body: s*(u) = 1 / min over <x,u> = 1 of h(x),
/// h the 1-homogeneous extension of s.
inline Body polar(const Body& b) {
  const auto& grid = *b.grid();
  const auto& s = b.support();
  const auto& f = b.interpolant();
  const std::size_t N = grid.size();
  const int d = b.dim() + 1;
  Eigen::MatrixXd X(N, d);
  for (std::size_t k = 0; k < N; ++k) X.row(static_cast<Eigen::Index>(k)) = grid.node(k).transpose();
  ScalarField out(N);
  std::vector<char> done(N, 0);
  Eigen::VectorXd cosines(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (done[i]) continue;
    const Vec& u = grid.node(i);
    cosines.noalias() = X * u;
    double best = std::numeric_limits<double>::infinity();
    std::size_t kb = i;
    for (std::size_t k = 0; k < N; ++k) {
      const double c = cosines(static_cast<Eigen::Index>(k));
      if (c > 1e-3 && s[k] < best * c) {
        best = s[k] / c;
        kb = k;
      }
    }
    const Mat B = tangent_basis(u);
    Vec x = grid.node(kb) / u.dot(grid.node(kb));
    auto eval = [&](const Vec& y, PointEval* pe) {
      const double r = y.norm();
      *pe = f.evaluate(y / r);
      return r * pe->value;
    };
    PointEval e;
    double hx = eval(x, &e);
    for (int it = 0; it < 30; ++it) {
      const double r = x.norm();
      const Eigen::VectorXd g = B.transpose() * e.boundary;
      const Eigen::MatrixXd H = B.transpose() * (e.radii / r) * B;
      Eigen::VectorXd step = -H.ldlt().solve(g);
      if (!step.allFinite() || g.dot(step) >= 0) step = -g;
      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Vec xn = x + B * (t * step);
        PointEval en;
        const double hn = eval(xn, &en);
        if (hn <= hx + 1e-4 * t * g.dot(step)) {
          x = xn;
          hx = hn;
          e = en;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      // Quadratic convergence: a full step this short leaves an error far below rounding.
      if (!accepted || t * step.norm() < 1e-14 * x.norm() || (t == 1.0 && step.norm() < 1e-8 * x.norm())) break;
    }
    out[i] = 1.0 / hx;
    // The body is origin-symmetric, so is its polar.
    const std::size_t j = grid.antipode(i);
    out[j] = out[i];
    done[i] = done[j] = 1;
  }
  return Body(b.grid(), std::move(out));
}

/// Support function of A K: s_{AK}(z) = |A^T z| s(A^T z / |A^T z|).
inline Body linear_image(const Body& b, const Mat& A) {
  const int d = b.dim() + 1;
  if (A.rows() != d || A.cols() != d) throw DomainError("linear map has wrong shape");
  const double scale = std::pow(A.cwiseAbs().maxCoeff(), d);
  if (!(std::abs(A.determinant()) > 1e-14 * scale)) throw DomainError("singular linear map");
  const auto& grid = *b.grid();
  ScalarField out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec y = A.transpose() * grid.node(k);
    const double r = y.norm();
    out[k] = r * b.interpolant().value(y / r);
  }
  return Body(b.grid(), std::move(out));
}

inline Body scaled(const Body& b, double c) {
  if (!(c > 0)) throw DomainError("scale factor must be positive");
  ScalarField out = b.support();
  for (double& v : out) v *= c;
  return Body(b.grid(), std::move(out));
}

}  // namespace caflow
