#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "latorb/types.hpp"

namespace latorb {

// Integer 2x2 matrix [[a,b],[c,d]], kept as plain fields for hot loops.
struct Mat2i {
  std::int64_t a = 0, b = 0, c = 0, d = 0;

  std::int64_t det() const { return a * d - b * c; }
  std::int64_t norm2() const { return a * a + b * b + c * c + d * d; }
  Mat2i inverse() const { return {d, -b, -c, a}; }  // det 1 only
  Mat2i operator*(const Mat2i& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }
  bool operator==(const Mat2i& o) const = default;
  Mat2 real() const {
    Mat2 m;
    m << double(a), double(b), double(c), double(d);
    return m;
  }
  static Mat2i identity() { return {1, 0, 0, 1}; }
};

// Norm-square budget for ||gamma|| <= T with slack for inexact radii such
// as sqrt(2); all enumerators (fast and brute-force) share it.
inline double ball_budget(double T) {
  const double t2 = T * T;
  return t2 + 1e-9 * (1.0 + t2);
}

// Visits every gamma in SL(2,Z) with ||gamma|| <= T exactly once, in
// lexicographic (a,b,c,d) order. f is called as f(const Mat2i&).
template <class F>
void for_each_sl2z(double T, F&& f);

std::vector<Mat2i> enumerate_sl2z(double T);
std::vector<Mat3z> enumerate_sl3z(double T);

// Visits (r1, r2, multiplicity) for every first-two-row pair of a matrix in
// the SL(3,Z) ball, where multiplicity is the number of completing third
// rows. Orbit statistics of the base point only need this much.
void for_each_sl3z_pair(
    double T,
    const std::function<void(const std::array<std::int64_t, 3>&,
                             const std::array<std::int64_t, 3>&, long)>& f);

// Streaming version of enumerate_sl3z.
void for_each_sl3z_mat(double T, const std::function<void(const Mat3z&)>& f);

// Entrywise brute-force counterparts; exponential in the bound, test oracles.
std::vector<Mat2i> enumerate_sl2z_bruteforce(double T);
std::vector<Mat3z> enumerate_sl3z_bruteforce(double T);

// N(tau) = #{gamma in SL(2,Z) : ||gamma|| <= tau}.
std::size_t count_n_tau(double tau);

// Least-squares coefficient of N(tau) ~ c tau^2 on a tau grid.
double fit_count_coefficient(const std::vector<double>& tau_grid,
                             std::vector<double>* residuals = nullptr);

// Safety-factor-2 version of the fitted coefficient, cached after first use;
// the constant in every truncation-tail bound below.
double counting_tail_coefficient();

// Partial sum of sum_gamma ||A gamma B||^-alpha with a rigorous tail bound:
// the true value lies in [head, head + tail_hi].
struct TruncatedSeries {
  double alpha = 4.0;
  double cutoff = 0.0;    // the ||A gamma B|| <= K threshold
  double head = 0.0;
  double tail_hi = 0.0;
  std::size_t terms = 0;

  Bracket bracket() const { return {head, head + tail_hi}; }
};

// head = sum over ||A gamma B|| <= K, enumerating ||gamma|| up to
// K / (smin(A) smin(B)); tail_hi = C_fit/(smin(A) smin(B))^2 *
// alpha/(alpha-2) * K^(2-alpha). Requires alpha > 2 and A, B invertible.
TruncatedSeries skewed_series(double alpha, const Mat2& A, const Mat2& B,
                              double K);

// Binary ball cache: magic "ZENUM1", then group, T, count, then the entries
// of each matrix row-major, all 64-bit little-endian (T as float64).
void write_ball_cache(const std::string& path, int group, double T,
                      const std::vector<std::int64_t>& entries);
bool read_ball_cache(const std::string& path, int& group, double& T,
                     std::vector<std::int64_t>& entries);

namespace detail {
// k-range of ||(c0 + k a, d0 + k b)||^2 <= R2 for the second-row fiber.
bool second_row_range(std::int64_t a, std::int64_t b, std::int64_t c0,
                      std::int64_t d0, double R2, std::int64_t& klo,
                      std::int64_t& khi);
void second_row_base(std::int64_t a, std::int64_t b, std::int64_t& c0,
                     std::int64_t& d0);
}  // namespace detail

template <class F>
void for_each_sl2z(double T, F&& f) {
  if (T < 1.0) return;
  const double T2 = ball_budget(T);
  if (T2 < 2.0) return;
  const auto amax = static_cast<std::int64_t>(std::floor(std::sqrt(T2 - 1.0)));
  for (std::int64_t a = -amax; a <= amax; ++a) {
    const double rb = std::sqrt(T2 - 1.0 - double(a) * double(a));
    const auto bmax = static_cast<std::int64_t>(std::floor(rb));
    for (std::int64_t b = -bmax; b <= bmax; ++b) {
      if (std::gcd(a < 0 ? -a : a, b < 0 ? -b : b) != 1) continue;
      std::int64_t c0, d0;
      detail::second_row_base(a, b, c0, d0);
      const double R2 = T2 - double(a * a + b * b);
      std::int64_t klo, khi;
      if (!detail::second_row_range(a, b, c0, d0, R2, klo, khi)) continue;
      // Emit (c,d) in lexicographic order: c = c0 + k a is monotone in k.
      const bool forward = a > 0 || (a == 0 && b > 0);
      if (forward) {
        for (std::int64_t k = klo; k <= khi; ++k)
          f(Mat2i{a, b, c0 + k * a, d0 + k * b});
      } else {
        for (std::int64_t k = khi; k >= klo; --k)
          f(Mat2i{a, b, c0 + k * a, d0 + k * b});
      }
    }
  }
}

}  // namespace latorb
