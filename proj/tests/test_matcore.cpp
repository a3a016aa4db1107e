#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latorb/matcore.hpp"
#include "latorb/rng.hpp"

using namespace latorb;

namespace {

Mat3 random_rotation(Rng& rng) {
  // QR of a Gaussian matrix, sign-fixed to det +1.
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Mat3> qr(g);
  Mat3 q = qr.householderQ();
  if (q.determinant() < 0) q.col(2) *= -1;
  return q;
}

Mat3 random_sl3(Rng& rng, double spread = 1.0) {
  Mat3 g;
  do {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = spread * rng.gaussian();
  } while (std::abs(g.determinant()) < 1e-3);
  return g / std::cbrt(g.determinant());
}

}  // namespace

TEST_CASE("hs_norm basics") {
  CHECK(hs_norm(Mat3::Identity()) == doctest::Approx(std::sqrt(3.0)));
  Mat2 m;
  m << 1, 1, 0, 1;
  CHECK(hs_norm(m) == doctest::Approx(std::sqrt(3.0)));
  CHECK(hs_norm(diag_a(4.0)) == doctest::Approx(std::sqrt(16.5)));
}

TEST_CASE("hs_norm rotation invariance") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Mat3 g = random_sl3(rng);
    Mat3 r1 = random_rotation(rng), r2 = random_rotation(rng);
    CHECK(hs_norm(r1 * g * r2) ==
          doctest::Approx(hs_norm(g)).epsilon(1e-12));
  }
}

TEST_CASE("block iwasawa left: structure and golden cases") {
  SUBCASE("already lower block triangular") {
    Mat3 g;
    g << 2.0, 0.5, 0,
         -1.0, 0.3, 0,
         0.7, -0.2, 1.0 / 1.1;  // block det 1.1, so det(g) = 1
    auto f = block_iwasawa_left(g);
    CHECK((f.k - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f.lower() - g).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("rotation input") {
    Rng rng(5);
    Mat3 g = random_rotation(rng);
    auto f = block_iwasawa_left(g);
    CHECK(f.corner == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.off.norm() < 1e-12);
    // the 2x2 factor is orthogonal with det 1 (gauge freedom only)
    CHECK((f.block * f.block.transpose() - Mat2::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(f.block.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((f.k * f.lower() - g).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("random reconstruction") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
      Mat3 g = random_sl3(rng);
      auto f = block_iwasawa_left(g);
      CHECK((f.k * f.lower() - g).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(f.corner > 0);
      CHECK(f.corner == doctest::Approx(g.col(2).norm()).epsilon(1e-12));
      CHECK(f.k.determinant() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK((f.k * f.k.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK(f.block.determinant() ==
            doctest::Approx(1.0 / f.corner).epsilon(1e-10));
    }
  }
}

TEST_CASE("block iwasawa right: structure and golden cases") {
  SUBCASE("already lower block triangular") {
    Mat3 g;
    g << 1.5, -0.25, 0,
         0.4, 4.0 / 15.0, 0,   // det of the 2x2 block is 1/2
         3.0, 4.0, 2.0;
    CHECK(g.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    auto f = block_iwasawa_right(g);
    CHECK((f.k - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f.lower() - g).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("rotation input") {
    Rng rng(6);
    Mat3 g = random_rotation(rng);
    auto f = block_iwasawa_right(g);
    CHECK(f.corner == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((f.block * f.block.transpose() - Mat2::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((f.lower() * f.k - g).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("random reconstruction") {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
      Mat3 g = random_sl3(rng);
      auto f = block_iwasawa_right(g);
      CHECK((f.lower() * f.k - g).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(f.corner > 0);
      // third row of k is the unit normal to the span of rows 1-2
      Vec3 n = Vec3(g.row(0)).cross(Vec3(g.row(1))).normalized();
      CHECK(std::abs(std::abs(Vec3(f.k.row(2)).dot(n)) - 1.0) < 1e-12);
      CHECK(f.block.determinant() ==
            doctest::Approx(1.0 / f.corner).epsilon(1e-10));
    }
  }
}

TEST_CASE("operator_hs golden values and invariance") {
  Basis23 e12;
  e12 << 1, 0, 0, 0, 1, 0;
  CHECK(operator_hs(e12, e12) == doctest::Approx(std::sqrt(2.0)));

  Basis23 img;
  img << 2, 0, 0, 0, 1, 0;
  CHECK(operator_hs(e12, img) == doctest::Approx(std::sqrt(5.0)));

  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    Basis23 src, dst;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) {
        src(r, c) = rng.gaussian();
        dst(r, c) = rng.gaussian();
      }
    double base = operator_hs(src, dst);
    // bi-rotation invariance
    Mat3 q1 = random_rotation(rng), q2 = random_rotation(rng);
    CHECK(operator_hs(src * q1, dst * q2) ==
          doctest::Approx(base).epsilon(1e-10));
    // independent of the orthonormal basis chosen for the source plane:
    // re-expressing the pair by any invertible row mix leaves the map alone
    Mat2 mix;
    do {
      mix << rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian();
    } while (std::abs(mix.determinant()) < 0.1);
    CHECK(operator_hs(mix * src, mix * dst) ==
          doctest::Approx(base).epsilon(1e-9));
  }

  Basis23 degenerate;
  degenerate << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS(operator_hs(degenerate, e12));
}

TEST_CASE("operator_hs equals 2x2 hs_norm on in-plane maps") {
  Rng rng(31);
  Basis23 e12;
  e12 << 1, 0, 0, 0, 1, 0;
  for (int i = 0; i < 20; ++i) {
    Mat2 m;
    m << rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian();
    Basis23 img = m * e12;  // rows are images of e1, e2
    CHECK(operator_hs(e12, img) == doctest::Approx(hs_norm(m)).epsilon(1e-12));
  }
}

TEST_CASE("rotation_to_e3") {
  const Vec3 e3(0, 0, 1);
  CHECK((rotation_to_e3(e3) - Mat3::Identity()).cwiseAbs().maxCoeff() <
        1e-12);

  Mat3 expected;
  expected << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  CHECK((rotation_to_e3(Vec3(0, 0, -1)) - expected).cwiseAbs().maxCoeff() <
        1e-12);

  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    Vec3 w = rng.unit_sphere();
    Mat3 rho = rotation_to_e3(w);
    CHECK((w * rho - e3).norm() < 1e-12);
    CHECK((rho * rho.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(rho.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS(rotation_to_e3(Vec3(0, 0, 0)));
  CHECK_THROWS(rotation_to_e3(Vec3(0, 0, 2)));
}

TEST_CASE("embedding helpers multiply out") {
  Rng rng(51);
  Vec2 v(rng.gaussian(), rng.gaussian());
  double t = 0.7;
  Mat2 m;
  m << 2, 1, 1, 1;
  Mat3 prod = unipotent_u(v) * diag_a(t) * upper_embed(m);
  CHECK(prod.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prod(0, 2) == 0.0);
  CHECK(prod(1, 2) == 0.0);
}
