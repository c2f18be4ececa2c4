#pragma once

#include "caflow/body.hpp"
#include "caflow/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace caflow {

struct MveeOptions {
  double tol = 1e-7;
  int max_iterations = 100000;
};

struct MveeResult {
  Mat Q;  // x^T Q x <= 1 for every point
  int iterations = 0;
};

/// Minimum-volume origin-centered ellipsoid {x : x^T Q x <= 1} containing every point
/// (and so its negative). Log-barrier path following on the d(d+1)/2 entries of Q; the
/// barrier parameter is driven down until the duality-gap bound puts the volume within a
/// factor 1 + tol of optimal.
inline MveeResult mvee(const std::vector<Vec>& points, MveeOptions opt = {}) {
  if (points.empty()) throw DomainError("mvee needs points");
  const int d = static_cast<int>(points.front().size());
  const std::size_t m = points.size();
  Eigen::MatrixXd X(d, m);
  for (std::size_t i = 0; i < m; ++i) X.col(i) = points[i];
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto sv = svd.singularValues();
    if (!(sv(d - 1) > 1e-12 * sv(0))) throw DomainError("mvee points do not span the space");
  }
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) pairs.emplace_back(r, c);
  const int P = static_cast<int>(pairs.size());
  Eigen::MatrixXd Phi(P, m);
  for (std::size_t i = 0; i < m; ++i)
    for (int k = 0; k < P; ++k) {
      const auto [r, c] = pairs[k];
      Phi(k, i) = X(r, i) * X(c, i) * (r == c ? 1.0 : 2.0);
    }
  auto to_matrix = [&](const Eigen::VectorXd& q) {
    Eigen::MatrixXd Q(d, d);
    for (int k = 0; k < P; ++k) Q(pairs[k].first, pairs[k].second) = Q(pairs[k].second, pairs[k].first) = q(k);
    return Q;
  };
  // Barrier objective -log det Q - mu sum log(1 - a_i); +inf outside the domain.
  auto objective = [&](const Eigen::VectorXd& q, double mu) {
    const Eigen::MatrixXd Q = to_matrix(q);
    const Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    double ld = 0.0;
    for (int r = 0; r < d; ++r) {
      const double l = llt.matrixL()(r, r);
      if (!(l > 0)) return std::numeric_limits<double>::infinity();
      ld += 2.0 * std::log(l);
    }
    const Eigen::VectorXd a = Phi.transpose() * q;
    double bar = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(a(i) < 1.0)) return std::numeric_limits<double>::infinity();
      bar += std::log1p(-a(i));
    }
    return -ld - mu * bar;
  };

  const double rmax = X.colwise().norm().maxCoeff();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(P);
  for (int k = 0; k < P; ++k)
    if (pairs[k].first == pairs[k].second) q(k) = 0.5 / (rmax * rmax);
  double mu = 1.0;
  const double mu_final = 2.0 * std::log1p(opt.tol) / static_cast<double>(m);
  int it = 0;
  double decrement = 0.0;
  for (;;) {
    for (;;) {
      if (++it > opt.max_iterations) throw ConvergenceError("mvee did not converge", it, decrement);
      const Eigen::MatrixXd W = to_matrix(q).inverse();
      const Eigen::VectorXd a = Phi.transpose() * q;
      const Eigen::VectorXd r1 = (1.0 - a.array()).inverse().matrix();
      Eigen::VectorXd g = mu * (Phi * r1);
      Eigen::MatrixXd H = mu * Phi * r1.cwiseAbs2().asDiagonal() * Phi.transpose();
      for (int k = 0; k < P; ++k) {
        const auto [r, c] = pairs[k];
        g(k) -= (r == c ? 1.0 : 2.0) * W(r, c);
        for (int l = 0; l < P; ++l) {
          const auto [u, v] = pairs[l];
          // tr(W E_k W E_l) with E the symmetric unit matrices.
          double h = W(c, u) * W(v, r) + (u != v ? W(c, v) * W(u, r) : 0.0);
          if (r != c) h += W(r, u) * W(v, c) + (u != v ? W(r, v) * W(u, c) : 0.0);
          H(k, l) += h;
        }
      }
      const Eigen::VectorXd dq = -H.ldlt().solve(g);
      decrement = -g.dot(dq);
      if (decrement < 1e-10) break;
      const double f0 = objective(q, mu);
      double t = 1.0;
      while (objective(q + t * dq, mu) > f0 - 0.25 * t * decrement) {
        t *= 0.5;
        if (t < 1e-20) break;
      }
      if (t < 1e-20) break;
      q += t * dq;
    }
    if (mu <= mu_final) break;
    mu = std::max(mu * 0.2, mu_final);
  }
  MveeResult res;
  res.Q = to_matrix(q);
  const double worst = (Phi.transpose() * q).maxCoeff();
  res.Q /= worst;
  res.iterations = it;
  return res;
}

/// A in SL(n+1) together with the normalized body A K.
struct AffineFrame {
  Mat A;
  Mat Q;              // fitted enclosing ellipsoid of K
  double ratio = 1;   // r_+/r_- of A K
  bool lowner = true; // false when the identity frame gave the better ratio
};

struct Normalized {
  AffineFrame frame;
  Body body;
};

/// Symmetric square root of the enclosing-ellipsoid form, scaled to unit determinant.
inline Mat lowner_map(const Mat& Q) {
  const int d = static_cast<int>(Q.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  Eigen::VectorXd root = es.eigenvalues().cwiseSqrt();
  Eigen::MatrixXd S = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  return S / std::pow(root.prod(), 1.0 / d);
}

inline double ratio_of(const Body& b) {
  const auto [rm, rp] = radii_bounds(b);
  return rp / rm;
}

/// Map the Loewner ellipsoid of the boundary samples to a ball. Keeps the identity
/// frame when it already gives a smaller r_+/r_-.
inline Normalized normalize_sl(const Body& b, MveeOptions opt = {}) {
  // x and -x give the same constraint, so one point per antipodal pair suffices.
  std::vector<Vec> pts;
  pts.reserve(b.support().size() / 2 + 1);
  for (std::size_t k = 0; k < b.support().size(); ++k)
    if (b.grid()->antipode(k) > k) pts.push_back(b.boundary_point(k));
  const MveeResult fit = mvee(pts, opt);
  const int d = b.dim() + 1;
  const Mat A = lowner_map(fit.Q);
  Body nb = linear_image(b, A);
  const double r = ratio_of(nb);
  const double r0 = ratio_of(b);
  if (r <= r0) return {AffineFrame{A, fit.Q, r, true}, std::move(nb)};
  return {AffineFrame{Mat::Identity(d, d), fit.Q, r0, false}, b};
}

/// log(r_+/r_-) in the normalizing frame: an upper bound on the Banach-Mazur distance to the ball.
inline double banach_mazur_upper(const Body& b) { return std::log(normalize_sl(b).frame.ratio); }

/// exp(gamma eps^{2/(3(n+2))} |log eps|^{4/(3(n+2))}).
inline double pinching_delta(double eps, double gamma, int n) {
  if (!(eps > 0 && eps < 1)) throw DomainError("pinching parameter must lie in (0,1)");
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  const double a = 2.0 / (3.0 * (n + 2));
  return std::exp(gamma * std::pow(eps, a) * std::pow(std::abs(std::log(eps)), 2.0 * a));
}

/// Largest eps in (0, e^{-2}] with delta(eps)^{1+alpha} < 1.5. The delta formula is
/// increasing only below e^{-2}, so the search stays there.
inline double max_admissible_epsilon(double gamma, int n, double alpha) {
  const double cap = std::exp(-2.0);
  auto ok = [&](double e) { return std::pow(pinching_delta(e, gamma, n), 1.0 + alpha) < 1.5; };
  if (ok(cap)) return cap;
  double lo = std::log(1e-300), hi = std::log(cap);
  if (!ok(std::exp(lo))) return 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(std::exp(mid)) ? lo : hi) = mid;
  }
  return std::exp(lo);
}

/// V V* > omega^2 / (1 + eps).
inline bool mahler_pinched(double mahler, double eps, int n) {
  const double w = unit_ball_volume(n);
  return mahler > w * w / (1.0 + eps);
}

inline bool mahler_pinched(const Body& b, double eps) { return mahler_pinched(volume(b) * volume(polar(b)), eps, b.dim()); }

}  // namespace caflow
