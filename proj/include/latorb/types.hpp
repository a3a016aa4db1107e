#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <complex>

namespace latorb {

// Row-vector conventions throughout: lattices are spanned by matrix rows,
// vectors act on the right of matrices.
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::RowVector2d;
using Vec3 = Eigen::RowVector3d;
using Basis23 = Eigen::Matrix<double, 2, 3>;  // rows span a 2-lattice in R^3

using Mat2z = Eigen::Matrix<std::int64_t, 2, 2>;
using Mat3z = Eigen::Matrix<std::int64_t, 3, 3>;

using Complex = std::complex<double>;

// Closed interval guaranteed to contain a truncated-series value.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains(const Bracket& b) const { return lo <= b.lo && b.hi <= hi; }

  Bracket operator*(double s) const {
    return s >= 0 ? Bracket{lo * s, hi * s} : Bracket{hi * s, lo * s};
  }
  // Interval quotient, both operands assumed positive.
  Bracket operator/(const Bracket& d) const { return {lo / d.hi, hi / d.lo}; }
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace latorb
