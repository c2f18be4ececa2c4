#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>

namespace caflow {

// Vectors and matrices in R^{n+1}, n in {1,2}; fixed max size keeps them off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Symmetric n x n matrix (n = 1 or 2) in a node's orthonormal tangent frame.
/// For n = 1 only `xx` is meaningful.
struct TangentMatrix {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double det(int n) const { return n == 1 ? xx : xx * yy - xy * xy; }
  double trace(int n) const { return n == 1 ? xx : xx + yy; }

  /// Eigenvalues in ascending order; for n = 1 both entries equal xx.
  std::pair<double, double> eigenvalues(int n) const {
    if (n == 1) return {xx, xx};
    const double mean = 0.5 * (xx + yy);
    const double half = 0.5 * (xx - yy);
    const double rad = std::hypot(half, xy);
    return {mean - rad, mean + rad};
  }

  TangentMatrix& operator+=(const TangentMatrix& o) {
    xx += o.xx;
    xy += o.xy;
    yy += o.yy;
    return *this;
  }
  friend TangentMatrix operator*(double c, TangentMatrix m) {
    m.xx *= c;
    m.xy *= c;
    m.yy *= c;
    return m;
  }
};

/// Product of the n nonzero eigenvalues of a symmetric (n+1)x(n+1) matrix acting on
/// the tangent plane z^perp (the matrix must annihilate z).
inline double tangent_determinant(const Mat& m, const Vec& z) {
  const int d = static_cast<int>(z.size());
  if (d == 2) {
    Vec e(2);
    e << -z(1), z(0);
    return e.dot(m * e);
  }
  // Orthonormal basis of z^perp.
  Eigen::Vector3d zz(z(0), z(1), z(2));
  Eigen::Vector3d a = std::abs(zz.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  Eigen::Vector3d e1 = (a - a.dot(zz) * zz).normalized();
  Eigen::Vector3d e2 = zz.cross(e1);
  Eigen::Matrix3d mm = m;
  const double a11 = e1.dot(mm * e1), a12 = e1.dot(mm * e2), a22 = e2.dot(mm * e2);
  return a11 * a22 - a12 * a12;
}

}  // namespace caflow
