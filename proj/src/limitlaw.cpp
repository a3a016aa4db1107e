#include "latorb/limitlaw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "latorb/matcore.hpp"
#include "latorb/quadrature.hpp"

namespace latorb {

Mat2 plane_shape_matrix(const Basis23& basis, double tol) {
  const double cov = covolume(basis);
  if (std::abs(cov - 1.0) > tol)
    throw std::invalid_argument("plane_shape_matrix: covolume != 1");
  Vec3 n = Vec3(basis.row(0)).cross(Vec3(basis.row(1)));
  n /= n.norm();
  Basis23 flat = basis * rotation_to_e3(n);
  Mat2 m = flat.leftCols<2>();
  return m;  // det = +1 by the right-handed normal choice
}

TruncatedSeries psi(const Basis23& x0_basis, const Basis23& lambda_basis,
                    double K) {
  const Mat2 a = plane_shape_matrix(x0_basis).inverse();
  const Mat2 b = plane_shape_matrix(lambda_basis);
  return skewed_series(4.0, a, b, K);
}

Bracket alpha_ratio(const Mat3& g1, const Mat3& g2, double K) {
  const BlockIwasawa left = block_iwasawa_left(g1.inverse());
  const BlockIwasawa right = block_iwasawa_right(g2);
  const auto num = skewed_series(4.0, left.block, right.block, K);
  const auto den = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), K);
  const double pref = 1.0 / (left.corner * left.corner *
                             std::abs(right.block.determinant()));
  return (num.bracket() / den.bracket()) * pref;
}

double bump_profile(double t) {
  const double t2 = t * t;
  if (t2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t2));
}

double hyperbolic_distance(Complex a, Complex b) {
  const double q = 1.0 + std::norm(a - b) / (2.0 * a.imag() * b.imag());
  return std::acosh(q);
}

const std::vector<TestFunction>& dictionary() {
  static const std::vector<TestFunction> dict = [] {
    auto p4 = [](double c) {
      return (35.0 * c * c * c * c - 30.0 * c * c + 3.0) / 8.0;
    };
    const Vec3 tilt = Vec3(1, 1, 1) / std::sqrt(3.0);
    const Complex center_i(0.0, 1.0);
    const Complex center_corner(0.30, 1.25);
    auto bump_i = [=](Complex z) {
      return bump_profile(hyperbolic_distance(z, center_i) / 0.5);
    };
    auto bump_corner = [=](Complex z) {
      return bump_profile(hyperbolic_distance(z, center_corner) / 0.15);
    };
    std::vector<TestFunction> d;
    d.push_back({"p4_axis", nullptr, [=](const Vec3& w) { return p4(w(2)); }});
    d.push_back(
        {"p4_tilt", nullptr, [=](const Vec3& w) { return p4(w.dot(tilt)); }});
    d.push_back({"bump_i", bump_i, nullptr});
    d.push_back({"bump_corner", bump_corner, nullptr});
    d.push_back(
        {"bump_i_w2", bump_i, [](const Vec3& w) { return w(2) * w(2); }});
    d.push_back({"bump_corner_w4", bump_corner, [](const Vec3& w) {
                   return w(2) * w(2) * w(2) * w(2);
                 }});
    return d;
  }();
  return dict;
}

double sphere_integral(const std::function<double(const Vec3&)>& f,
                       int polar_nodes, int azimuth_nodes) {
  if (!f) return 1.0;
  std::vector<double> xs, ws;
  gauss_legendre(polar_nodes, xs, ws);
  double total = 0;
  for (int i = 0; i < polar_nodes; ++i) {
    const double c = xs[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    double ring = 0;
    for (int j = 0; j < azimuth_nodes; ++j) {
      const double phi = 2.0 * kPi * (j + 0.5) / azimuth_nodes;
      ring += f(Vec3(s * std::cos(phi), s * std::sin(phi), c));
    }
    total += ws[i] * ring / azimuth_nodes;
  }
  return 0.5 * total;
}

namespace {

// One enumeration pass evaluating sum ||A gamma B_i||^-4 for every node i
// whose gamma-ball bound admits the current gamma.
std::vector<double> psi_batch(const Mat2& A, const std::vector<Mat2>& B,
                              const std::vector<double>& bound) {
  const std::size_t n = B.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return bound[i] > bound[j]; });
  std::vector<double> b2(n);
  std::vector<double> be(4 * n);
  for (std::size_t k = 0; k < n; ++k) {
    b2[k] = bound[order[k]] * bound[order[k]];
    const Mat2& m = B[order[k]];
    be[4 * k] = m(0, 0);
    be[4 * k + 1] = m(0, 1);
    be[4 * k + 2] = m(1, 0);
    be[4 * k + 3] = m(1, 1);
  }
  std::vector<double> acc(n, 0.0);
  const double a00 = A(0, 0), a01 = A(0, 1), a10 = A(1, 0), a11 = A(1, 1);
  const double maxbound = n ? bound[order[0]] : 0.0;
  for_each_sl2z(maxbound, [&](const Mat2i& g) {
    const double n2 = double(g.norm2());
    const auto it =
        std::lower_bound(b2.begin(), b2.end(), n2, std::greater<double>());
    const auto prefix = std::size_t(it - b2.begin());
    if (prefix == 0) return;
    const double c0 = a00 * g.a + a01 * g.c, c1 = a00 * g.b + a01 * g.d;
    const double c2 = a10 * g.a + a11 * g.c, c3 = a10 * g.b + a11 * g.d;
    for (std::size_t k = 0; k < prefix; ++k) {
      const double* bk = &be[4 * k];
      const double m0 = c0 * bk[0] + c1 * bk[2], m1 = c0 * bk[1] + c1 * bk[3];
      const double m2 = c2 * bk[0] + c3 * bk[2], m3 = c2 * bk[1] + c3 * bk[3];
      const double q = m0 * m0 + m1 * m1 + m2 * m2 + m3 * m3;
      acc[k] += 1.0 / (q * q);
    }
  });
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[order[k]] = acc[k];
  return out;
}

Mat2 oriented_base_factor(const PointX23& x0) {
  Basis23 b = x0.basis;
  Vec3 n = Vec3(b.row(0)).cross(Vec3(b.row(1)));
  if (n.dot(x0.w) < 0) b.row(0).swap(b.row(1));
  return plane_shape_matrix(b).inverse();
}

}  // namespace

NuContext::NuContext(const PointX23& x0, const QuadParams& params)
    : params_(params) {
  if (x0.invariant_defect() > 1e-6)
    throw std::invalid_argument("NuContext: invalid base point");
  a_factor_ = oriented_base_factor(x0);
  const double smin_a = smin2(a_factor_);

  auto add_grid = [&](int nx, int nu, bool coarse) {
    std::vector<double> xs, wx, us, wu;
    gauss_legendre(nx, xs, wx);
    gauss_legendre(nu, us, wu);
    for (int i = 0; i < nx; ++i) {
      const double x = 0.5 * xs[i];  // [-1/2, 1/2]
      const double wxi = 0.5 * wx[i];
      const double ylow = std::sqrt(1.0 - x * x);
      const double ulo = 1.0 / params_.y_max, uhi = 1.0 / ylow;
      for (int j = 0; j < nu; ++j) {
        const double u = 0.5 * (ulo + uhi) + 0.5 * (uhi - ulo) * us[j];
        const double wuj = 0.5 * (uhi - ulo) * wu[j];
        Node nd;
        nd.z = Complex(x, 1.0 / u);
        nd.weight = wxi * wuj;  // u = 1/y turns dx dy / y^2 into dx du
        nd.psi = 0;
        nd.coarse = coarse;
        nodes_.push_back(nd);
      }
    }
  };
  add_grid(params_.x_nodes, params_.u_nodes, false);
  add_grid(std::max(8, 2 * params_.x_nodes / 3),
           std::max(10, 2 * params_.u_nodes / 3), true);

  std::vector<Mat2> bs(nodes_.size());
  std::vector<double> bounds(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    bs[i] = shape_matrix(nodes_[i].z);
    bounds[i] = params_.series_K / (smin_a * smin2(bs[i]));
  }
  auto psis = psi_batch(a_factor_, bs, bounds);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].psi = psis[i];
    if (!nodes_[i].coarse) psi_max_ = std::max(psi_max_, psis[i]);
  }

  double z_main = 0, z_coarse = 0, trunc = 0, cusp = 0;
  const double tail_scale = counting_tail_coefficient() * 2.0 /
                            (params_.series_K * params_.series_K);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    if (nd.coarse) {
      z_coarse += nd.weight * nd.psi;
      continue;
    }
    z_main += nd.weight * nd.psi;
    const double ss = smin_a * smin2(bs[i]);
    trunc += nd.weight * tail_scale / (ss * ss);
    if (nd.z.imag() > 0.5 * params_.y_max) cusp += nd.weight * nd.psi;
  }
  z_mass_ = z_main;
  truncation_err_ = trunc;
  cusp_err_ = cusp / 3.0;  // 1/y^2 cusp-tail extrapolation
  z_mass_err_ = std::abs(z_main - z_coarse) + trunc + cusp_err_;
}

Expectation NuContext::integrate_zpart(
    const std::function<double(Complex)>& f) const {
  double main = 0, coarse = 0, cusp = 0, fmax = 0;
  for (const Node& nd : nodes_) {
    const double fv = f ? f(nd.z) : 1.0;
    if (nd.coarse) {
      coarse += nd.weight * fv * nd.psi;
      continue;
    }
    main += nd.weight * fv * nd.psi;
    fmax = std::max(fmax, std::abs(fv));
    if (nd.z.imag() > 0.5 * params_.y_max) cusp += nd.weight * fv * nd.psi;
  }
  Expectation e;
  e.value = main;
  e.error = std::abs(main - coarse) + fmax * truncation_err_ +
            std::abs(cusp) / 3.0;
  return e;
}

Expectation NuContext::expectation(const TestFunction& f) const {
  const double wpart = sphere_integral(f.w_part, params_.sphere_polar_nodes,
                                       params_.sphere_azimuth_nodes);
  Expectation e;
  if (!f.z_part) {
    // product structure: the w-marginal is exactly the uniform sphere
    e.value = wpart;
    e.error = 1e-12 * (1.0 + std::abs(wpart));
    return e;
  }
  const Expectation iz = integrate_zpart(f.z_part);
  e.value = iz.value / z_mass_ * wpart;
  e.error = std::abs(wpart) *
            (iz.error / z_mass_ +
             std::abs(iz.value) * z_mass_err_ / (z_mass_ * z_mass_));
  return e;
}

Expectation nu_expectation(const PointX23& x0, const TestFunction& f,
                           const QuadParams& params) {
  if (!f.z_part) {
    Expectation e;
    e.value = sphere_integral(f.w_part, params.sphere_polar_nodes,
                              params.sphere_azimuth_nodes);
    e.error = 1e-12 * (1.0 + std::abs(e.value));
    return e;
  }
  NuContext ctx(x0, params);
  return ctx.expectation(f);
}

// ---------------------------------------------------------------------------
// Sampler

NuSampler::NuSampler(const PointX23& x0, const SamplerParams& params)
    : params_(params) {
  a_factor_ = oriented_base_factor(x0);
  smin_a_ = smin2(a_factor_);

  // envelope constant from a coarse bulk grid
  double m = 0;
  for (double y : {0.87, 1.0, 1.2, 1.6, 2.2, 3.0}) {
    for (double x : {0.0, 0.15, 0.3, 0.45}) {
      if (x * x + y * y < 1.0) continue;
      m = std::max(m, psi(Complex(x, y)));
      m = std::max(m, psi(Complex(-x, y)));
    }
  }
  envelope_ = 1.5 * m;

  // cusp bound Psi <= cusp_coef / y for y >= 3, calibrated then inflated
  double c = 0;
  for (double y : {3.0, 5.0, 8.0, 14.0, 30.0}) {
    for (double x : {0.0, 0.3, 0.49}) {
      c = std::max(c, y * psi(Complex(x, y)));
    }
  }
  cusp_coef_ = 1.5 * c;
}

double NuSampler::psi(Complex z) const {
  const Mat2 b = shape_matrix(z);
  const Mat2 ab = a_factor_ * b;
  const double floor2 = ab.squaredNorm();
  const double psi_floor = 2.0 / (floor2 * floor2);  // the gamma = +-I terms
  const double y = z.imag();
  double rel = params_.rel_tail;
  if (y > 3.0) rel = std::min(0.06, rel * std::pow(y / 3.0, 1.5));
  const double ss = smin_a_ * smin2(b);
  const double c_fit = counting_tail_coefficient();
  const double bound = std::sqrt(c_fit / (ss * ss * rel * psi_floor));
  double head = 0;
  const double a00 = a_factor_(0, 0), a01 = a_factor_(0, 1),
               a10 = a_factor_(1, 0), a11 = a_factor_(1, 1);
  const double b00 = b(0, 0), b01 = b(0, 1), b10 = b(1, 0), b11 = b(1, 1);
  for_each_sl2z(bound, [&](const Mat2i& g) {
    const double c0 = a00 * g.a + a01 * g.c, c1 = a00 * g.b + a01 * g.d;
    const double c2 = a10 * g.a + a11 * g.c, c3 = a10 * g.b + a11 * g.d;
    const double m0 = c0 * b00 + c1 * b10, m1 = c0 * b01 + c1 * b11;
    const double m2 = c2 * b00 + c3 * b10, m3 = c2 * b01 + c3 * b11;
    const double q = m0 * m0 + m1 * m1 + m2 * m2 + m3 * m3;
    head += 1.0 / (q * q);
  });
  // centre of the truncation bracket as the working value
  const double tail_mid = 0.25 * c_fit / (ss * ss * bound * bound);
  return head + tail_mid;
}

NuSample NuSampler::sample(Rng& rng) const {
  const double y0 = std::sqrt(3.0) / 2.0;
  for (std::size_t attempt = 0; attempt < params_.max_attempts; ++attempt) {
    const double y = y0 / rng.uniform();
    const double x = rng.uniform(-0.5, 0.5);
    const double u = rng.uniform();
    if (y > params_.y_cap) continue;
    if (x * x + y * y < 1.0) continue;
    if (y > 3.0 && u * envelope_ > cusp_coef_ / y) continue;
    const Complex z(x, y);
    if (u * envelope_ > psi(z)) continue;
    NuSample s;
    s.z = z;
    s.theta = rng.uniform(0.0, 2.0 * kPi);
    s.w = rng.unit_sphere();
    return s;
  }
  throw std::runtime_error("NuSampler: rejection stalled");
}

std::vector<NuSample> NuSampler::run(std::uint64_t seed,
                                     std::size_t n) const {
  Rng rng(seed);
  std::vector<NuSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample(rng));
  return out;
}

PointX23 sample_to_point(const NuSample& s) {
  Mat2 rot;
  rot << std::cos(s.theta), std::sin(s.theta), -std::sin(s.theta),
      std::cos(s.theta);
  const Mat2 m = shape_matrix(s.z) * rot;
  Basis23 flat;
  flat << m(0, 0), m(0, 1), 0.0, m(1, 0), m(1, 1), 0.0;
  PointX23 x;
  // carry the plane onto w-perp with e3 * sigma = w
  const Mat3 sigma = rotation_to_e3(s.w).transpose();
  x.basis = flat * sigma;
  x.w = s.w;
  return x;
}

std::string samples_to_csv(const std::vector<NuSample>& samples) {
  std::string out = "z_re,z_im,w1,w2,w3,weight\n";
  char buf[200];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,1\n",
                  s.z.real(), s.z.imag(), s.w(0), s.w(1), s.w(2));
    out += buf;
  }
  return out;
}

}  // namespace latorb
