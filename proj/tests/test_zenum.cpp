#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "latorb/matcore.hpp"
#include "latorb/rng.hpp"
#include "latorb/zenum.hpp"

using namespace latorb;

namespace {
std::set<std::array<std::int64_t, 4>> as_set(const std::vector<Mat2i>& v) {
  std::set<std::array<std::int64_t, 4>> s;
  for (auto& m : v) s.insert({m.a, m.b, m.c, m.d});
  return s;
}
std::set<std::array<std::int64_t, 9>> as_set(const std::vector<Mat3z>& v) {
  std::set<std::array<std::int64_t, 9>> s;
  for (auto& m : v)
    s.insert({m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0),
              m(2, 1), m(2, 2)});
  return s;
}
}  // namespace

TEST_CASE("sl2z ball: golden small cases") {
  CHECK(enumerate_sl2z(1.0).empty());
  auto ball = enumerate_sl2z(std::sqrt(2.0));
  CHECK(ball.size() == 4);
  auto s = as_set(ball);
  CHECK(s.count({1, 0, 0, 1}));
  CHECK(s.count({-1, 0, 0, -1}));
  CHECK(s.count({0, 1, -1, 0}));
  CHECK(s.count({0, -1, 1, 0}));
}

TEST_CASE("sl2z ball: matches entrywise brute force") {
  for (double T : {std::sqrt(2.0), 2.0, 3.0, 4.0, 10.0}) {
    auto fast = enumerate_sl2z(T);
    auto brute = enumerate_sl2z_bruteforce(T);
    CHECK(fast.size() == brute.size());
    CHECK(as_set(fast) == as_set(brute));
  }
}

TEST_CASE("sl2z ball: emitted set is valid, duplicate-free, inversion closed") {
  auto ball = enumerate_sl2z(12.0);
  auto s = as_set(ball);
  CHECK(s.size() == ball.size());
  for (auto& g : ball) {
    CHECK(g.det() == 1);
    CHECK(double(g.norm2()) <= 144.0);
    Mat2i inv = g.inverse();
    CHECK(s.count({inv.a, inv.b, inv.c, inv.d}));
  }
}

TEST_CASE("sl2z ball: lexicographic emission order") {
  auto ball = enumerate_sl2z(6.0);
  std::vector<std::array<std::int64_t, 4>> seq;
  for (auto& m : ball) seq.push_back({m.a, m.b, m.c, m.d});
  CHECK(std::is_sorted(seq.begin(), seq.end()));
}

TEST_CASE("count_n_tau golden and growth") {
  CHECK(count_n_tau(1.0) == 0);
  CHECK(count_n_tau(std::sqrt(2.0)) == 4);
  double n50 = double(count_n_tau(50));
  double n100 = double(count_n_tau(100));
  CHECK(n100 / n50 == doctest::Approx(4.0).epsilon(0.10));
}

TEST_CASE("N(tau)/tau^2 stabilizes at the tau^(-1/3) rate") {
  // The error term is O(tau^(5/3+eta)), so the doubling differences of
  // N/tau^2 sit inside a tau^(-1/3) envelope; they are not monotone.
  for (double tau : {25.0, 50.0, 100.0}) {
    double r1 = double(count_n_tau(tau)) / (tau * tau);
    double r2 = double(count_n_tau(2 * tau)) / (4 * tau * tau);
    CHECK(std::abs(r2 - r1) <= std::pow(tau, -1.0 / 3.0));
  }
}

TEST_CASE("fitted counting constant dominates the grid") {
  double c_fit = counting_tail_coefficient();  // 2x the least-squares c
  for (double tau = 20; tau <= 100; tau += 5) {
    CHECK(double(count_n_tau(tau)) <= c_fit * tau * tau);
  }
}

TEST_CASE("sl3z ball: golden small cases") {
  CHECK(enumerate_sl3z(1.0).empty());
  auto ball = enumerate_sl3z(std::sqrt(3.0));
  CHECK(ball.size() == 24);  // signed permutation matrices of determinant 1
  for (auto& m : ball) {
    CHECK(m.cast<double>().determinant() == doctest::Approx(1.0));
    std::int64_t n2 = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) n2 += m(i, j) * m(i, j);
    CHECK(n2 == 3);
  }
}

TEST_CASE("sl3z ball: matches entrywise brute force up to T=4") {
  for (double T : {std::sqrt(3.0), 2.0, 3.0, 4.0}) {
    auto fast = enumerate_sl3z(T);
    auto brute = enumerate_sl3z_bruteforce(T);
    CHECK(fast.size() == brute.size());
    CHECK(as_set(fast) == as_set(brute));
  }
}

TEST_CASE("sl3z pair iteration reproduces the ball size") {
  for (double T : {2.0, 3.0, 4.5}) {
    long total = 0;
    for_each_sl3z_pair(T, [&](const std::array<std::int64_t, 3>&,
                              const std::array<std::int64_t, 3>&, long c) {
      total += c;
    });
    CHECK(total == long(enumerate_sl3z(T).size()));
  }
}

TEST_CASE("skewed series: identity golden value at K=sqrt(2)") {
  auto s = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(),
                         std::sqrt(2.0));
  CHECK(s.head == doctest::Approx(1.0));  // four matrices, each norm^-4 = 1/4
  CHECK(s.terms == 4);
  CHECK(s.tail_hi > 0);
}

TEST_CASE("skewed series: monotone bracket") {
  auto s50 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), 50);
  auto s100 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), 100);
  auto s200 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), 200);
  CHECK(s100.head >= s50.head);
  CHECK(s100.tail_hi <= s50.tail_hi);
  CHECK(s100.head - s50.head <= s50.tail_hi);
  // bracket at K contains the head at 4K
  CHECK(s50.bracket().contains(s200.head));
  // nesting
  CHECK(s50.bracket().contains(s100.bracket()));
}

TEST_CASE("skewed series: rotation factors leave the series alone") {
  Rng rng(77);
  double ang1 = rng.uniform(0, 2 * kPi), ang2 = rng.uniform(0, 2 * kPi);
  Mat2 r1, r2;
  r1 << std::cos(ang1), -std::sin(ang1), std::sin(ang1), std::cos(ang1);
  r2 << std::cos(ang2), -std::sin(ang2), std::sin(ang2), std::cos(ang2);
  for (double K : {5.0, 20.0}) {
    auto s0 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), K);
    auto s1 = skewed_series(4.0, r1, r2, K);
    CHECK(s1.head == doctest::Approx(s0.head).epsilon(1e-12));
    CHECK(s1.terms == s0.terms);
  }
}

TEST_CASE("skewed series: brute-force oracle for skewed factors") {
  Mat2 a, b;
  a << 2.0, 0.3, 0.0, 0.5;
  b << 1.0, 0.0, -0.7, 1.0;
  double K = 12.0;
  auto s = skewed_series(4.0, a, b, K);
  // direct sum over a generously larger ball
  double oracle = 0;
  std::size_t terms = 0;
  for (auto& g : enumerate_sl2z(4.0 * K)) {
    Mat2 m = a * g.real() * b;
    double n = m.norm();
    if (n <= K) {
      oracle += std::pow(n, -4.0);
      ++terms;
    }
  }
  CHECK(s.terms == terms);
  CHECK(s.head == doctest::Approx(oracle).epsilon(1e-12));
  // the enlarged-ball sum with no cutoff stays inside the bracket
  double larger = 0;
  for (auto& g : enumerate_sl2z(6.0 * K)) {
    larger += std::pow((a * g.real() * b).norm(), -4.0);
  }
  CHECK(s.bracket().contains(larger));
  CHECK_THROWS(skewed_series(4.0, Mat2::Zero(), b, K));
  CHECK_THROWS(skewed_series(1.5, a, b, K));
}

TEST_CASE("ball cache round trip") {
  auto ball = enumerate_sl2z(5.0);
  std::vector<std::int64_t> entries;
  for (auto& m : ball) {
    entries.push_back(m.a);
    entries.push_back(m.b);
    entries.push_back(m.c);
    entries.push_back(m.d);
  }
  const std::string path = "zenum_cache_test.bin";
  write_ball_cache(path, 2, 5.0, entries);
  int group = 0;
  double T = 0;
  std::vector<std::int64_t> back;
  REQUIRE(read_ball_cache(path, group, T, back));
  CHECK(group == 2);
  CHECK(T == 5.0);
  CHECK(back == entries);
  std::remove(path.c_str());
}
