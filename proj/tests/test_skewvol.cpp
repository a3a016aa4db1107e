#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "latorb/quadrature.hpp"
#include "latorb/rng.hpp"
#include "latorb/skewvol.hpp"

using namespace latorb;

namespace {

Mat3 random_rotation(Rng& rng) {
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Mat3> qr(g);
  Mat3 q = qr.householderQ();
  if (q.determinant() < 0) q.col(2) *= -1;
  return q;
}

// bounded unimodular matrices with singular values in [1/1.6, 1.6]
Mat3 random_bounded_sl3(Rng& rng) {
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = 0.25 * rng.gaussian();
  g += Mat3::Identity();
  Eigen::JacobiSVD<Mat3> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sv = svd.singularValues().transpose();
  for (int i = 0; i < 3; ++i) sv(i) = std::clamp(sv(i), 1.0 / 1.5, 1.5);
  sv /= std::cbrt(sv(0) * sv(1) * sv(2));
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  if (u.determinant() < 0) u.col(2) *= -1;
  if (v.determinant() < 0) v.col(2) *= -1;
  return u * sv.asDiagonal() * v.transpose();
}

HElement random_h(Rng& rng, const std::vector<Mat2i>& ball) {
  return HElement{Vec2(rng.gaussian(), rng.gaussian()),
                  std::exp(rng.uniform(-1.0, 1.0)),
                  ball[rng.next_u64() % ball.size()]};
}

}  // namespace

TEST_CASE("h_embed golden cases") {
  CHECK((h_embed({Vec2(0, 0), 1.0, Mat2i::identity()}) - Mat3::Identity())
            .cwiseAbs()
            .maxCoeff() == 0.0);
  Mat3 expect;
  expect << 1, 0, 0, 0, 1, 0, 1, 2, 1;
  CHECK((h_embed({Vec2(1, 2), 1.0, Mat2i::identity()}) - expect)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK_THROWS(h_embed({Vec2(0, 0), -1.0, Mat2i::identity()}));
}

TEST_CASE("h_embed: determinant one and invariant reconstruction") {
  Rng rng(3);
  auto ball = enumerate_sl2z(6.0);
  for (int i = 0; i < 50; ++i) {
    HElement h = random_h(rng, ball);
    Mat3 m = h_embed(h);
    CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    Mat3 parts = unipotent_u(h.v) * diag_a(h.t) * upper_embed(h.gamma.real());
    CHECK((m - parts).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("h_compose matches the matrix product") {
  Rng rng(5);
  auto ball = enumerate_sl2z(6.0);
  for (int i = 0; i < 60; ++i) {
    HElement a = random_h(rng, ball), b = random_h(rng, ball);
    Mat3 lhs = h_embed(h_compose(a, b));
    Mat3 rhs = h_embed(a) * h_embed(b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("cubic roots golden cases") {
  SUBCASE("double root is flagged near-degenerate") {
    // -t^3 + 3t - 2 = -(t-1)^2 (t+2), F equals the max M_T
    auto r = cubic_roots_from_f(1.0, std::sqrt(3.0), 2.0);
    CHECK(r.degenerate);
    CHECK(r.a == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.b == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("factorable cubic") {
    // -t^3 + 4t - 3 = -(t-1)(t^2 + t - 3)
    auto r = cubic_roots_from_f(1.0, 2.0, 3.0);
    CHECK(!r.degenerate);
    CHECK(r.a == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.b ==
          doctest::Approx(0.5 * (std::sqrt(13.0) - 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("cubic roots: paper bracket for a, ordering, residuals") {
  Rng rng(7);
  for (int i = 0; i < 60; ++i) {
    Mat3 g1 = random_bounded_sl3(rng), g2 = random_bounded_sl3(rng);
    double T = rng.uniform(10.0, 80.0);
    auto spec = SkewedBallSpec::make(g1, g2, T);
    auto ball = enumerate_sl2z(8.0);
    Mat2i gamma = ball[rng.next_u64() % ball.size()];
    double F = spec.skew_norm2(gamma);
    if (F >= spec.MT * (1 - 1e-6)) continue;
    auto r = cubic_roots(spec, gamma);
    CHECK(r.a > F / (T * T));
    CHECK(r.a < 1.5 * F / (T * T));
    CHECK(r.a <= spec.t0);
    CHECK(r.b >= spec.t0);
    CHECK(r.b <= std::sqrt(3.0) * spec.t0 * (1 + 1e-12));
    double c2 = std::pow(spec.left.corner * spec.right.corner, 2);
    for (double t : {r.a, r.b}) {
      double p = -c2 * t * t * t + t * T * T - F;
      CHECK(std::abs(p) <= 1e-9 * T * T);
    }
  }
}

TEST_CASE("stratum volume: empty stratum, quadrature oracle") {
  Rng rng(9);
  Mat3 e = Mat3::Identity();
  auto spec = SkewedBallSpec::make(e, e, 5.0);
  // F >= MT gives zero
  Mat2i big{1, 39, 0, 1};
  CHECK(spec.skew_norm2(big) >= spec.MT);
  CHECK(stratum_volume(spec, big) == 0.0);

  for (int i = 0; i < 25; ++i) {
    Mat3 g1 = random_bounded_sl3(rng), g2 = random_bounded_sl3(rng);
    double T = rng.uniform(8.0, 40.0);
    auto sp = SkewedBallSpec::make(g1, g2, T);
    auto ball = enumerate_sl2z(6.0);
    Mat2i gamma = ball[rng.next_u64() % ball.size()];
    double F = sp.skew_norm2(gamma);
    if (F >= 0.9 * sp.MT) continue;
    auto roots = cubic_roots(sp, gamma);
    double pref = ellipse_prefactor(sp);
    double c2 = std::pow(sp.left.corner * sp.right.corner, 2);
    auto integrand = [&](double t) {
      return pref * (-c2 * t * t * t + t * T * T - F) / (t * t * t * t);
    };
    auto q = integrate_adaptive(integrand, roots.a, roots.b);
    CHECK(stratum_volume(sp, gamma) ==
          doctest::Approx(q.value).epsilon(1e-6));
  }
}

TEST_CASE("stratum volume: identity stratum tends to (pi/24) T^6") {
  Mat3 e = Mat3::Identity();
  auto spec = SkewedBallSpec::make(e, e, 1000.0);
  double v = stratum_volume(spec, Mat2i::identity());
  double t6 = std::pow(1000.0, 6.0);
  CHECK(v / t6 == doctest::Approx(kPi / 24.0).epsilon(0.01));
}

TEST_CASE("stratum volumes are Theta(T^6 / F^2) across the ball") {
  Mat3 e = Mat3::Identity();
  auto spec = SkewedBallSpec::make(e, e, 1000.0);
  double t6 = std::pow(1000.0, 6.0);
  double pref = ellipse_prefactor(spec);
  for_each_sl2z(60.0, [&](const Mat2i& gamma) {
    double F = spec.skew_norm2(gamma);
    double v = stratum_volume(spec, gamma);
    double ratio = v / (pref * t6 / (6.0 * F * F));
    CHECK(ratio > 0.1);
    CHECK(ratio < 10.0);
  });
}

TEST_CASE("stratum diagnostics partition the stratum") {
  Rng rng(11);
  Mat3 g1 = random_bounded_sl3(rng), g2 = random_bounded_sl3(rng);
  auto spec = SkewedBallSpec::make(g1, g2, 200.0);
  Mat2i gamma{2, 1, 1, 1};
  auto d = stratum_diagnostics(spec, gamma);
  CHECK(d.vol_head >= 0);
  CHECK(d.vol_mid >= 0);
  CHECK(d.vol_tail >= 0);
  CHECK(d.vol_head + d.vol_mid + d.vol_tail ==
        doctest::Approx(stratum_volume(spec, gamma)).epsilon(1e-9));
  CHECK(d.a < d.cut_c);
  CHECK(d.cut_c < d.b);
}

TEST_CASE("ball volume: identity spec approaches the series form") {
  Mat3 e = Mat3::Identity();
  auto spec = SkewedBallSpec::make(e, e, 1000.0);
  auto bv = ball_volume(spec);
  auto s4 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), 200.0);
  double t6 = std::pow(1000.0, 6.0);
  double target = (kPi / 6.0) * s4.bracket().mid();
  CHECK(bv.head / t6 == doctest::Approx(target).epsilon(0.01));
  CHECK(bv.tail_hi / bv.head < 1e-3);
}

TEST_CASE("ball volume: rotations do not change the ball") {
  Rng rng(13);
  Mat3 e = Mat3::Identity();
  double T = 60.0;
  auto base = ball_volume(SkewedBallSpec::make(e, e, T));
  Mat3 r1 = random_rotation(rng), r2 = random_rotation(rng);
  auto rot = ball_volume(SkewedBallSpec::make(r1, r2, T));
  CHECK(rot.head == doctest::Approx(base.head).epsilon(1e-9));
  CHECK(rot.strata == base.strata);
}

TEST_CASE("ball volume vs Monte Carlo oracle") {
  Rng rng(17);
  for (int i = 0; i < 3; ++i) {
    Mat3 g1 = random_bounded_sl3(rng), g2 = random_bounded_sl3(rng);
    auto spec = SkewedBallSpec::make(g1, g2, 12.0);
    auto exact = ball_volume(spec);
    auto mc = ball_volume_mc(spec, 1000 + i, 400000);
    CHECK(std::abs(mc.value - exact.bracket().mid()) <=
          3.0 * mc.sigma + exact.tail_hi);
  }
}

TEST_CASE("D1 uniform growth check") {
  Rng rng(19);
  Mat3 e = Mat3::Identity();
  std::vector<double> grid{50, 100, 200, 400};
  // (1+delta)^6 <= 1+eps passes for large T
  auto rep = check_d1(e, e, 0.01, 0.1, grid);
  CHECK(rep.pass);
  CHECK(rep.first_passing_T == 50);
  // delta = 0 trivially passes
  auto rep0 = check_d1(e, e, 0.0, 0.1, grid);
  CHECK(rep0.pass);
  for (double r : rep0.ratios) CHECK(r <= 1.0 + 1e-9);
  // random bounded pair
  Mat3 g1 = random_bounded_sl3(rng), g2 = random_bounded_sl3(rng);
  auto repg = check_d1(g1, g2, 0.01, 0.1, grid);
  CHECK(repg.pass);
}

TEST_CASE("sampler: membership, determinant, stratum frequencies") {
  Rng rng(23);
  Mat3 g1 = random_bounded_sl3(rng), g2 = random_bounded_sl3(rng);
  auto spec = SkewedBallSpec::make(g1, g2, 25.0);
  HBallSampler sampler(spec);
  const std::size_t n = 20000;
  std::map<std::array<std::int64_t, 4>, std::size_t> freq;
  Rng sr(1234);
  for (std::size_t i = 0; i < n; ++i) {
    HElement h = sampler.sample(sr);
    CHECK(spec.contains(h));
    CHECK(std::abs(h_embed(h).determinant() - 1.0) < 1e-9);
    freq[{h.gamma.a, h.gamma.b, h.gamma.c, h.gamma.d}]++;
  }
  // the three biggest strata appear with the expected frequencies
  const auto& gs = sampler.strata();
  const auto& vols = sampler.stratum_volumes();
  std::vector<std::size_t> order(gs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return vols[a] > vols[b]; });
  for (int rank = 0; rank < 3; ++rank) {
    std::size_t i = order[rank];
    double p = vols[i] / sampler.total_volume();
    double got = double(freq[{gs[i].a, gs[i].b, gs[i].c, gs[i].d}]) / n;
    double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(got - p) <= 3.0 * sigma);
  }
}

TEST_CASE("sampler: t marginal matches the closed-form CDF (chi^2)") {
  Mat3 e = Mat3::Identity();
  auto spec = SkewedBallSpec::make(e, e, 25.0);
  HBallSampler sampler(spec);
  // condition on the identity stratum
  const std::size_t want = 20000;
  std::vector<double> ts;
  Rng sr(777);
  while (ts.size() < want) {
    HElement h = sampler.sample(sr);
    if (h.gamma == Mat2i::identity()) ts.push_back(h.t);
  }
  std::size_t idx = 0;
  while (!(sampler.strata()[idx] == Mat2i::identity())) ++idx;
  const int bins = 10;
  std::vector<int> counts(bins, 0);
  for (double t : ts) {
    double u = sampler.t_cdf(idx, t);
    int b = std::min(bins - 1, int(u * bins));
    counts[b]++;
  }
  double expect = double(want) / bins;
  double chi2 = 0;
  for (int b = 0; b < bins; ++b) {
    double d = counts[b] - expect;
    chi2 += d * d / expect;
  }
  CHECK(chi2 < 21.67);  // chi^2_9 at the 1% level
}

TEST_CASE("left invariance of the Haar density") {
  // integral of f(h0 h) over a coordinate box equals the integral of f over
  // the translated box, both by tensor quadrature in each box's own
  // coordinates
  Rng rng(29);
  auto ball = enumerate_sl2z(4.0);
  for (int rep = 0; rep < 4; ++rep) {
    HElement h0 = random_h(rng, ball);
    Mat2i gamma = ball[rng.next_u64() % ball.size()];
    const double t1 = 0.6, t2 = 1.7;
    const Vec2 vlo(-0.8, 0.2), vhi(0.4, 1.5);
    Mat3 probe;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) probe(i, j) = 0.3 * rng.gaussian();
    auto f = [&](const Mat3& m) {
      return std::exp(-0.02 * (m * (Mat3::Identity() + probe)).squaredNorm());
    };

    // different node counts on the two sides so agreement certifies the
    // integrals rather than the arithmetic
    std::vector<double> xs, wx, ys, wy;
    gauss_legendre(24, xs, wx);
    gauss_legendre(31, ys, wy);
    auto map01 = [&](double node, double lo, double hi, double& x,
                     double w, double& wt) {
      x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * node;
      wt = 0.5 * (hi - lo) * w;
    };

    double lhs = 0;
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 24; ++j)
        for (int k = 0; k < 24; ++k) {
          double t, wt, vx, wvx, vy, wvy;
          map01(xs[i], t1, t2, t, wx[i], wt);
          map01(xs[j], vlo(0), vhi(0), vx, wx[j], wvx);
          map01(xs[k], vlo(1), vhi(1), vy, wx[k], wvy);
          HElement h{Vec2(vx, vy), t, gamma};
          lhs += wt * wvx * wvy * f(h_embed(h_compose(h0, h))) /
                 (t * t * t * t);
        }

    // translated box: t' in t0*[t1,t2], v' over the affine image
    // parallelogram, gamma' = gamma0 gamma
    const Mat2i gamma_p = h0.gamma * gamma;
    const Mat2 gi = h0.gamma.inverse().real();
    const double f32 = std::pow(h0.t, 1.5);
    auto vmap = [&](double vx, double vy) {
      Vec2 v(vx, vy);
      return Vec2(h0.v + f32 * v * gi);
    };
    // Jacobian of v -> v' is t0^3 (|det gamma0| = 1)
    const double jac = f32 * f32;
    double rhs = 0;
    for (int i = 0; i < 31; ++i)
      for (int j = 0; j < 31; ++j)
        for (int k = 0; k < 31; ++k) {
          double t, wt, vx, wvx, vy, wvy;
          map01(ys[i], h0.t * t1, h0.t * t2, t, wy[i], wt);
          map01(ys[j], vlo(0), vhi(0), vx, wy[j], wvx);
          map01(ys[k], vlo(1), vhi(1), vy, wy[k], wvy);
          HElement h{vmap(vx, vy), t, gamma_p};
          rhs += wt * wvx * wvy * jac * f(h_embed(h)) / (t * t * t * t);
        }

    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}
