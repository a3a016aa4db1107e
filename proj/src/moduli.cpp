#include "latorb/moduli.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace latorb {

double covolume(const Basis23& basis) {
  Vec3 cr = Vec3(basis.row(0)).cross(Vec3(basis.row(1)));
  double c = cr.norm();
  if (!(c > 1e-12))
    throw std::invalid_argument("covolume: rows are dependent");
  return c;
}

double PointX23::invariant_defect() const {
  double d = std::abs(covolume(basis) - 1.0);
  d = std::max(d, std::abs(w.norm() - 1.0));
  d = std::max(d, std::abs(w.dot(basis.row(0))));
  d = std::max(d, std::abs(w.dot(basis.row(1))));
  return d;
}

PointX23 base_point() {
  PointX23 x;
  x.basis << 1, 0, 0, 0, 1, 0;
  x.w = Vec3(0, 0, 1);
  return x;
}

PointX23 act(const PointX23& x, const Mat3& g) {
  PointX23 y;
  Basis23 bg = x.basis * g;
  y.basis = bg / std::sqrt(covolume(bg));
  Vec3 wn = x.w * g.inverse().transpose();
  y.w = wn / wn.norm();
  return y;
}

Vec3 perp(const PointX23& x) { return x.w; }

Complex basis_to_halfplane(const Mat2& m) {
  Complex w1(m(0, 0), m(0, 1));
  Complex w2(m(1, 0), m(1, 1));
  Complex z = w2 / w1;
  if (!(z.imag() > 0))
    throw std::invalid_argument("basis_to_halfplane: not positively oriented");
  return z;
}

Mat2 shape_matrix(Complex z) {
  const double x = z.real(), y = z.imag();
  if (!(y > 0)) throw std::invalid_argument("shape_matrix: Im z <= 0");
  const double s = std::sqrt(y);
  Mat2 m;
  m << 1.0 / s, 0.0, x / s, s;
  return m;
}

ModularReduction reduce_modular(Complex z) {
  if (!(z.imag() > 0))
    throw std::invalid_argument("reduce_modular: Im z <= 0");
  ModularReduction r;
  r.gamma = Mat2i::identity();
  constexpr int kMaxSteps = 10000;
  int it = 0;
  for (; it < kMaxSteps; ++it) {
    // translate Re into (-1/2, 1/2]
    double n = std::ceil(z.real() - 0.5);
    if (n != 0.0) {
      z -= n;
      auto k = static_cast<std::int64_t>(n);
      r.gamma = Mat2i{1, -k, 0, 1} * r.gamma;
    }
    if (std::norm(z) < 1.0 - 1e-15) {
      r.gamma = Mat2i{0, -1, 1, 0} * r.gamma;
      z = -1.0 / z;
      continue;
    }
    break;
  }
  // boundary tie: |z| = 1 with Re z < 0 maps to the mirror point
  if (std::abs(std::norm(z) - 1.0) <= 1e-14 && z.real() < -1e-15) {
    r.gamma = Mat2i{0, -1, 1, 0} * r.gamma;
    z = -1.0 / z;
  }
  r.z = z;
  r.steps = it;
  return r;
}

ShapePoint shape(const PointX23& x) {
  Mat3 rho = rotation_to_e3(x.w);
  Basis23 flat = x.basis * rho;
  if (std::abs(flat(0, 2)) > 1e-8 || std::abs(flat(1, 2)) > 1e-8)
    throw std::invalid_argument("shape: normal is not perpendicular to basis");
  Mat2 m = flat.leftCols<2>();
  if (m.determinant() < 0) m.row(0).swap(m.row(1));  // orient with w
  ShapePoint s;
  s.z = reduce_modular(basis_to_halfplane(m)).z;
  s.reduced = true;
  return s;
}

std::string point_to_json(const PointX23& x) {
  nlohmann::ordered_json j;
  j["basis"] = {{x.basis(0, 0), x.basis(0, 1), x.basis(0, 2)},
                {x.basis(1, 0), x.basis(1, 1), x.basis(1, 2)}};
  j["w"] = {x.w(0), x.w(1), x.w(2)};
  return j.dump();
}

PointX23 point_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  PointX23 x;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) x.basis(r, c) = j.at("basis").at(r).at(c);
  for (int c = 0; c < 3; ++c) x.w(c) = j.at("w").at(c);
  if (x.invariant_defect() > 1e-6)
    throw std::invalid_argument("point_from_json: invalid point");
  return x;
}

std::string orbit_csv_row(const ShapePoint& s, const Vec3& w) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g",
                s.z.real(), s.z.imag(), w(0), w(1), w(2));
  return buf;
}

bool same_lattice(const Basis23& a, const Basis23& b, double tol) {
  // b's rows in terms of a's rows must be integral, and vice versa.
  auto integral_change = [&](const Basis23& from, const Basis23& to) {
    Mat2 gram = from * from.transpose();
    Mat2 coef = (to * from.transpose()) * gram.inverse();
    for (int i = 0; i < 4; ++i) {
      double c = coef(i / 2, i % 2);
      if (std::abs(c - std::round(c)) > tol) return false;
    }
    return ((coef * from) - to).cwiseAbs().maxCoeff() < tol;
  };
  return integral_change(a, b) && integral_change(b, a);
}

}  // namespace latorb
