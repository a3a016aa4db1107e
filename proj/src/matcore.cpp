#include "latorb/matcore.hpp"

#include <cmath>
#include <stdexcept>

namespace latorb {

namespace {

// Unit vector orthogonal to n, from the first coordinate axis that is not
// nearly parallel to n.
Vec3 complete_axis(const Vec3& n, const Vec3& preferred) {
  Vec3 cand = preferred;
  if (std::abs(cand.dot(n)) > 0.9 * cand.norm()) {
    cand = Vec3(0, 1, 0);
    if (std::abs(cand.dot(n)) > 0.9) cand = Vec3(0, 0, 1);
  }
  Vec3 u = cand - cand.dot(n) * n;
  return u / u.norm();
}

Mat3 orthonormal_frame(const Vec3& n, const Vec3& seed) {
  // Rows (u1, u2, n) with u2 = n x u1; determinant is +1.
  Vec3 u1 = complete_axis(n, seed);
  Vec3 u2 = n.cross(u1);
  Mat3 f;
  f.row(0) = u1;
  f.row(1) = u2;
  f.row(2) = n;
  return f;
}

}  // namespace

BlockIwasawa block_iwasawa_left_seeded(const Mat3& g, const Vec3& seed_axis) {
  Vec3 col3 = g.col(2).transpose();
  double corner = col3.norm();
  Vec3 k3 = col3 / corner;
  Mat3 frame = orthonormal_frame(k3, seed_axis);  // rows u1,u2,k3
  Mat3 k = frame.transpose();                     // columns u1,u2,k3; det +1
  BlockIwasawa r;
  r.k = k;
  Mat3 l = k.transpose() * g;
  r.block = l.topLeftCorner<2, 2>();
  r.off = l.bottomLeftCorner<1, 2>();
  r.corner = l(2, 2);
  return r;
}

BlockIwasawa block_iwasawa_left(const Mat3& g) {
  return block_iwasawa_left_seeded(g, Vec3(1, 0, 0));
}

BlockIwasawa block_iwasawa_right_seeded(const Mat3& g, const Vec3& seed_axis) {
  Vec3 n = Vec3(g.row(0)).cross(Vec3(g.row(1)));
  double nn = n.norm();
  if (nn < 1e-300) throw std::invalid_argument("degenerate rows");
  n /= nn;
  if (Vec3(g.row(2)).dot(n) < 0) n = -n;  // sign so the corner is positive
  Mat3 k = orthonormal_frame(n, seed_axis);  // rows u1,u2,n; det +1
  BlockIwasawa r;
  r.k = k;
  Mat3 l = g * k.transpose();
  r.block = l.topLeftCorner<2, 2>();
  r.off = l.bottomLeftCorner<1, 2>();
  r.corner = l(2, 2);
  return r;
}

BlockIwasawa block_iwasawa_right(const Mat3& g) {
  return block_iwasawa_right_seeded(g, Vec3(1, 0, 0));
}

double operator_hs(const Basis23& source, const Basis23& image) {
  Mat2 gram = source * source.transpose();
  Eigen::LLT<Mat2> llt(gram);
  if (llt.info() != Eigen::Success ||
      gram.determinant() < 1e-24 * gram.trace() * gram.trace()) {
    throw std::invalid_argument("operator_hs: degenerate source basis");
  }
  // Rows of C * source are an orthonormal basis of the source plane, and the
  // map sends them to the rows of C * image.
  Mat2 c = llt.matrixL().solve(Mat2::Identity());
  return (c * image).norm();
}

Mat3 rotation_to_e3(const Vec3& w) {
  double n = w.norm();
  if (n < 1e-12) throw std::invalid_argument("rotation_to_e3: zero vector");
  if (std::abs(n - 1.0) > 1e-9)
    throw std::invalid_argument("rotation_to_e3: not a unit vector");
  const Vec3 e3(0, 0, 1);
  if ((w + e3).norm() < 1e-8) {
    Mat3 r;
    r << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // half-turn about the x-axis
    return r;
  }
  Vec3 axis = w.cross(e3);
  double s = axis.norm();
  double c = w.dot(e3);
  if (s < 1e-15) return Mat3::Identity();
  axis /= s;
  Mat3 kx;
  kx << 0, -axis(2), axis(1),
        axis(2), 0, -axis(0),
        -axis(1), axis(0), 0;
  // Column-convention Rodrigues matrix taking w^T to e3^T; transpose for the
  // row action w * rho = e3.
  Mat3 rod = Mat3::Identity() + s * kx + (1.0 - c) * (kx * kx);
  return rod.transpose();
}

Mat3 upper_embed(const Mat2& m) {
  Mat3 g = Mat3::Identity();
  g.topLeftCorner<2, 2>() = m;
  return g;
}

Mat2 upper_block(const Mat3& m) { return m.topLeftCorner<2, 2>(); }

Mat3 diag_a(double t) {
  Mat3 g = Mat3::Zero();
  double s = 1.0 / std::sqrt(t);
  g(0, 0) = s;
  g(1, 1) = s;
  g(2, 2) = t;
  return g;
}

Mat3 unipotent_u(const Vec2& v) {
  Mat3 g = Mat3::Identity();
  g(2, 0) = v(0);
  g(2, 1) = v(1);
  return g;
}

Mat2 to_real(const Mat2z& m) { return m.cast<double>(); }
Mat3 to_real(const Mat3z& m) { return m.cast<double>(); }

double smin2(const Mat2& m) {
  double f2 = m.squaredNorm();
  double det = m.determinant();
  double disc = std::sqrt(std::max(0.0, f2 * f2 - 4.0 * det * det));
  return std::sqrt(std::max(0.0, 0.5 * (f2 - disc)));
}

double smax2(const Mat2& m) {
  double f2 = m.squaredNorm();
  double det = m.determinant();
  double disc = std::sqrt(std::max(0.0, f2 * f2 - 4.0 * det * det));
  return std::sqrt(0.5 * (f2 + disc));
}

}  // namespace latorb
