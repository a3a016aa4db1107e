#pragma once

#include <complex>
#include <string>

#include "latorb/matcore.hpp"
#include "latorb/types.hpp"
#include "latorb/zenum.hpp"

namespace latorb {

// An oriented unimodular 2-lattice in R^3: the rows of basis span the
// lattice, w is a unit normal. (L, w) and (L, -w) are distinct points.
struct PointX23 {
  Basis23 basis;
  Vec3 w;

  // max violation of the defining constraints (covolume 1, unit w, w ⊥ rows)
  double invariant_defect() const;
};

PointX23 base_point();  // (Z-span{e1,e2}, e3)

// sqrt(det Gram) of the rows = area of a fundamental parallelogram.
// Throws std::invalid_argument on dependent rows.
double covolume(const Basis23& basis);

// Right action: basis -> basis*g / sqrt(Cov), w -> w*(g^T)^-1 normalized.
PointX23 act(const PointX23& x, const Mat3& g);

Vec3 perp(const PointX23& x);

// Point of the modular surface SL(2,Z)\H (plus the SO(2) fiber angle when a
// caller carries one).
struct ShapePoint {
  Complex z;
  double theta = 0.0;
  bool reduced = false;
};

struct ModularReduction {
  Complex z;
  Mat2i gamma;  // word with z_out = gamma . z_in as a Mobius map
  int steps = 0;
};

// Gauss reduction to |Re z| <= 1/2, |z| >= 1; ties resolved toward Re z >= 0.
ModularReduction reduce_modular(Complex z);

// Shape of an oriented point: rotate the plane to e3-perp with
// rotation_to_e3(w) and reduce the resulting 2x2 row basis. The orientation
// convention pairs row order with w, so s(L,w) != s(L,-w) in general.
ShapePoint shape(const PointX23& x);

// Upper-half-plane coordinate of a positively-oriented 2x2 row basis:
// z = (row2 as complex) / (row1 as complex).
Complex basis_to_halfplane(const Mat2& m);

// Canonical det-1 row basis with halfplane coordinate z; rows are positively
// oriented in the plane.
Mat2 shape_matrix(Complex z);

// J/CSV plumbing.
std::string point_to_json(const PointX23& x);
PointX23 point_from_json(const std::string& text);
std::string orbit_csv_row(const ShapePoint& s, const Vec3& w);

// Do two bases span the same lattice? (integer change of basis both ways)
bool same_lattice(const Basis23& a, const Basis23& b, double tol = 1e-9);

}  // namespace latorb
