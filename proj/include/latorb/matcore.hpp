#pragma once

#include "latorb/types.hpp"

namespace latorb {

// Hilbert-Schmidt (Frobenius) norm: sqrt(trace(g^T g)).
template <class Derived>
double hs_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.norm();
}

// Factors of the block Iwasawa decomposition of a 3x3 unimodular matrix.
//
// Left form:  g = k * [[block, 0], [off, corner]]
// Right form: g = [[block, 0], [off, corner]] * k
//
// k is in SO(3), block is 2x2, off is a 1x2 row, corner > 0, and
// det(block) = 1 / corner.
struct BlockIwasawa {
  Mat3 k;
  Mat2 block;
  Vec2 off;
  double corner = 1.0;

  Mat3 lower() const {
    Mat3 l;
    l << block(0, 0), block(0, 1), 0.0,
         block(1, 0), block(1, 1), 0.0,
         off(0), off(1), corner;
    return l;
  }
};

// g = k * L with L block-lower-triangular, corner = |third column of g|.
// The completion of k is deterministic (Gram-Schmidt from a fixed axis
// order), so equal inputs give identical factors.
BlockIwasawa block_iwasawa_left(const Mat3& g);

// Mirror form g = L * k; the third row of k is the unit normal to the span
// of the first two rows of g, signed so the corner is positive.
BlockIwasawa block_iwasawa_right(const Mat3& g);

// Test hook: same decompositions with the orthonormal completion seeded from
// a caller-supplied direction, exercising the SO(2) gauge freedom.
BlockIwasawa block_iwasawa_left_seeded(const Mat3& g, const Vec3& seed_axis);
BlockIwasawa block_iwasawa_right_seeded(const Mat3& g, const Vec3& seed_axis);

// HS norm of the linear map between planes sending the source basis rows to
// the image basis rows, computed on an orthonormalization of the source.
// Throws std::invalid_argument if the source rows are dependent.
double operator_hs(const Basis23& source, const Basis23& image);

// rho in SO(3) with w * rho = e3 (row action). Rodrigues rotation about
// w x e3; for w ~ -e3 the canonical choice is the half-turn about the x-axis.
Mat3 rotation_to_e3(const Vec3& w);

// Embeddings of 2x2 blocks into SL(3).
Mat3 upper_embed(const Mat2& m);                   // [[m, 0], [0, 1]]
Mat2 upper_block(const Mat3& m);
Mat3 diag_a(double t);                             // diag(t^-1/2, t^-1/2, t)
Mat3 unipotent_u(const Vec2& v);                   // [[I, 0], [v, 1]]
Mat2 to_real(const Mat2z& m);
Mat3 to_real(const Mat3z& m);

double smin2(const Mat2& m);  // smaller singular value
double smax2(const Mat2& m);

}  // namespace latorb
