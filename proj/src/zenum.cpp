#include "latorb/zenum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "latorb/matcore.hpp"

namespace latorb {

namespace detail {

// x,y with a*x + b*y = gcd(a,b) >= 0.
static void egcd(std::int64_t a, std::int64_t b, std::int64_t& g,
                 std::int64_t& x, std::int64_t& y) {
  std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    std::int64_t q = old_r / r;
    std::int64_t tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
    tmp = old_t - q * t;
    old_t = t;
    t = tmp;
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  g = old_r;
  x = old_s;
  y = old_t;
}

void second_row_base(std::int64_t a, std::int64_t b, std::int64_t& c0,
                     std::int64_t& d0) {
  // a*d0 - b*c0 = 1, then recentered so the fiber parameter starts near the
  // norm minimum.
  std::int64_t g, x, y;
  egcd(a, -b, g, x, y);  // a*x + (-b)*y = 1
  d0 = x;
  c0 = y;
  std::int64_t n1 = a * a + b * b;
  std::int64_t beta = a * c0 + b * d0;
  std::int64_t kc = std::llround(-double(beta) / double(n1));
  c0 += kc * a;
  d0 += kc * b;
}

bool second_row_range(std::int64_t a, std::int64_t b, std::int64_t c0,
                      std::int64_t d0, double R2, std::int64_t& klo,
                      std::int64_t& khi) {
  const double n1 = double(a * a + b * b);
  const double beta = double(a * c0 + b * d0);
  auto valid = [&](std::int64_t k) {
    std::int64_t c = c0 + k * a, d = d0 + k * b;
    return double(c * c + d * d) <= R2;
  };
  const double disc = beta * beta - n1 * (double(c0 * c0 + d0 * d0) - R2);
  if (disc < 0) {
    if (!valid(0)) return false;
    klo = khi = 0;
  } else {
    const double root = std::sqrt(disc);
    klo = std::llround((-beta - root) / n1);
    khi = std::llround((-beta + root) / n1);
  }
  while (valid(klo - 1)) --klo;
  while (klo <= khi && !valid(klo)) ++klo;
  while (valid(khi + 1)) ++khi;
  while (khi >= klo && !valid(khi)) --khi;
  return klo <= khi;
}

}  // namespace detail

std::vector<Mat2i> enumerate_sl2z(double T) {
  std::vector<Mat2i> out;
  for_each_sl2z(T, [&](const Mat2i& m) { out.push_back(m); });
  return out;
}

std::vector<Mat2i> enumerate_sl2z_bruteforce(double T) {
  std::vector<Mat2i> out;
  if (T < 1.0) return out;
  const double T2 = ball_budget(T);
  const auto m = static_cast<std::int64_t>(std::floor(T));
  for (std::int64_t a = -m; a <= m; ++a)
    for (std::int64_t b = -m; b <= m; ++b)
      for (std::int64_t c = -m; c <= m; ++c)
        for (std::int64_t d = -m; d <= m; ++d) {
          Mat2i g{a, b, c, d};
          if (g.det() == 1 && double(g.norm2()) <= T2) out.push_back(g);
        }
  return out;
}

std::size_t count_n_tau(double tau) {
  std::size_t n = 0;
  for_each_sl2z(tau, [&](const Mat2i&) { ++n; });
  return n;
}

double fit_count_coefficient(const std::vector<double>& tau_grid,
                             std::vector<double>* residuals) {
  if (tau_grid.size() < 2)
    throw std::invalid_argument("fit_count_coefficient: need >= 2 points");
  double num = 0, den = 0;
  std::vector<double> counts(tau_grid.size());
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    counts[i] = double(count_n_tau(tau_grid[i]));
    const double t2 = tau_grid[i] * tau_grid[i];
    num += counts[i] * t2;
    den += t2 * t2;
  }
  const double c = num / den;
  if (residuals) {
    residuals->clear();
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
      residuals->push_back(counts[i] / (tau_grid[i] * tau_grid[i]) - c);
  }
  return c;
}

double counting_tail_coefficient() {
  static const double c_fit = [] {
    std::vector<double> grid;
    for (double t = 20; t <= 100.5; t += 10) grid.push_back(t);
    return 2.0 * fit_count_coefficient(grid);
  }();
  return c_fit;
}

TruncatedSeries skewed_series(double alpha, const Mat2& A, const Mat2& B,
                              double K) {
  if (alpha <= 2.0) throw std::invalid_argument("skewed_series: alpha <= 2");
  const double sa = smin2(A), sb = smin2(B);
  if (sa <= 0 || sb <= 0)
    throw std::invalid_argument("skewed_series: singular A or B");
  TruncatedSeries s;
  s.alpha = alpha;
  s.cutoff = K;
  const double bound = K / (sa * sb);
  const double K2 = K * K;
  const double a00 = A(0, 0), a01 = A(0, 1), a10 = A(1, 0), a11 = A(1, 1);
  const double b00 = B(0, 0), b01 = B(0, 1), b10 = B(1, 0), b11 = B(1, 1);
  double head = 0;
  std::size_t terms = 0;
  for_each_sl2z(bound, [&](const Mat2i& g) {
    // rows of A*gamma, then columns against B
    const double p = a00 * g.a + a01 * g.c, q = a00 * g.b + a01 * g.d;
    const double r = a10 * g.a + a11 * g.c, t = a10 * g.b + a11 * g.d;
    const double m00 = p * b00 + q * b10, m01 = p * b01 + q * b11;
    const double m10 = r * b00 + t * b10, m11 = r * b01 + t * b11;
    const double n2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
    if (n2 <= K2) {
      head += std::pow(n2, -0.5 * alpha);
      ++terms;
    }
  });
  s.head = head;
  s.terms = terms;
  const double c_ab = counting_tail_coefficient() / (sa * sa * sb * sb);
  s.tail_hi = c_ab * (alpha / (alpha - 2.0)) * std::pow(K, 2.0 - alpha);
  return s;
}

// ---------------------------------------------------------------------------
// SL(3,Z)

namespace {

using V3 = std::array<std::int64_t, 3>;

std::int64_t gcd3(std::int64_t a, std::int64_t b, std::int64_t c) {
  return std::gcd(std::gcd(a < 0 ? -a : a, b < 0 ? -b : b), c < 0 ? -c : c);
}

V3 cross(const V3& u, const V3& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
          u[0] * v[1] - u[1] * v[0]};
}

std::int64_t dot(const V3& u, const V3& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
}

// p with p . n = 1; requires gcd(n) = 1.
V3 particular_solution(const V3& n) {
  std::int64_t g12, x, y;
  detail::egcd(n[0], n[1], g12, x, y);
  std::int64_t g, u, v;
  detail::egcd(g12, n[2], g, u, v);
  return {u * x, u * y, v};
}

struct PairGram {
  double A, B, C;        // <r1,r1>, <r1,r2>, <r2,r2>
  double pr1, pr2, pp;   // <p,r1>, <p,r2>, <p,p>
};

// Visit integer (s,u) with ||p + s r1 + u r2||^2 <= R3sq. Emitter receives
// (s, u); ranges are widened from the real ellipse and tightened exactly.
template <class Emit>
void scan_completions(const PairGram& g, double R3sq, Emit&& emit) {
  const double det = g.A * g.C - g.B * g.B;
  if (det <= 0) return;
  // minimum over s at fixed u is (C - B^2/A) u^2 + 2 (pr2 - B pr1 / A) u + ...
  const double cu = g.C - g.B * g.B / g.A;
  const double bu = g.pr2 - g.B * g.pr1 / g.A;
  const double au = g.pp - g.pr1 * g.pr1 / g.A - R3sq;
  const double disc_u = bu * bu - cu * au;
  if (disc_u < 0) return;
  const double ru = std::sqrt(disc_u);
  const auto ulo =
      static_cast<std::int64_t>(std::ceil((-bu - ru) / cu - 1e-9)) - 1;
  const auto uhi =
      static_cast<std::int64_t>(std::floor((-bu + ru) / cu + 1e-9)) + 1;
  for (std::int64_t u = ulo; u <= uhi; ++u) {
    const double bs = g.B * double(u) + g.pr1;
    const double cs = g.C * double(u) * double(u) + 2.0 * g.pr2 * double(u) +
                      g.pp - R3sq;
    const double disc_s = bs * bs - g.A * cs;
    if (disc_s < 0) continue;
    const double rs = std::sqrt(disc_s);
    auto slo = static_cast<std::int64_t>(std::ceil((-bs - rs) / g.A - 1e-9));
    auto shi = static_cast<std::int64_t>(std::floor((-bs + rs) / g.A + 1e-9));
    auto q = [&](std::int64_t s) {
      return g.A * double(s) * double(s) + 2.0 * bs * double(s) + cs;
    };
    while (slo <= shi && q(slo) > 0) ++slo;
    while (slo <= shi && q(shi) > 0) --shi;
    if (slo > shi) continue;
    while (q(slo - 1) <= 0) --slo;
    while (q(shi + 1) <= 0) ++shi;
    for (std::int64_t s = slo; s <= shi; ++s) emit(s, u);
  }
}

// Core double loop over row pairs; calls f(r1, r2, n, R3sq, p) for pairs
// with primitive cross product.
template <class F>
void for_each_valid_pair(double T, F&& f) {
  const double T2 = ball_budget(T);
  if (T2 < 3.0) return;
  const auto m1 = static_cast<std::int64_t>(std::floor(std::sqrt(T2 - 2.0)));
  V3 r1, r2;
  for (r1[0] = -m1; r1[0] <= m1; ++r1[0]) {
    const double b1x = T2 - 2.0 - double(r1[0] * r1[0]);
    const auto m1y = static_cast<std::int64_t>(std::floor(std::sqrt(b1x)));
    for (r1[1] = -m1y; r1[1] <= m1y; ++r1[1]) {
      const double b1y = b1x - double(r1[1] * r1[1]);
      const auto m1z = static_cast<std::int64_t>(std::floor(std::sqrt(b1y)));
      for (r1[2] = -m1z; r1[2] <= m1z; ++r1[2]) {
        if (gcd3(r1[0], r1[1], r1[2]) != 1) continue;
        const std::int64_t n1sq = dot(r1, r1);
        const double rem1 = T2 - 1.0 - double(n1sq);
        const auto m2x = static_cast<std::int64_t>(std::floor(std::sqrt(rem1)));
        for (r2[0] = -m2x; r2[0] <= m2x; ++r2[0]) {
          const double b2x = rem1 - double(r2[0] * r2[0]);
          const auto m2y =
              static_cast<std::int64_t>(std::floor(std::sqrt(b2x)));
          for (r2[1] = -m2y; r2[1] <= m2y; ++r2[1]) {
            const double b2y = b2x - double(r2[1] * r2[1]);
            const auto m2z =
                static_cast<std::int64_t>(std::floor(std::sqrt(b2y)));
            for (r2[2] = -m2z; r2[2] <= m2z; ++r2[2]) {
              const V3 n = cross(r1, r2);
              if ((n[0] | n[1] | n[2]) == 0) continue;
              if (gcd3(n[0], n[1], n[2]) != 1) continue;
              const double R3sq =
                  T2 - double(n1sq) - double(dot(r2, r2));
              if (R3sq < 1.0) continue;  // any third row has norm >= 1
              V3 p = particular_solution(n);
              f(r1, r2, n, R3sq, p);
            }
          }
        }
      }
    }
  }
}

PairGram make_gram(const V3& r1, const V3& r2, V3& p) {
  // Babai rounding keeps the particular solution small.
  const double A = double(dot(r1, r1)), B = double(dot(r1, r2)),
               C = double(dot(r2, r2));
  const double det = A * C - B * B;
  for (int pass = 0; pass < 2; ++pass) {
    const double pr1 = double(dot(p, r1)), pr2 = double(dot(p, r2));
    const auto s = std::llround((pr1 * C - pr2 * B) / det);
    const auto u = std::llround((pr2 * A - pr1 * B) / det);
    if (s == 0 && u == 0) break;
    for (int i = 0; i < 3; ++i) p[i] -= s * r1[i] + u * r2[i];
  }
  PairGram g;
  g.A = A;
  g.B = B;
  g.C = C;
  g.pr1 = double(dot(p, r1));
  g.pr2 = double(dot(p, r2));
  g.pp = double(dot(p, p));
  return g;
}

}  // namespace

void for_each_sl3z_mat(double T, const std::function<void(const Mat3z&)>& f) {
  std::vector<V3> rows;
  for_each_valid_pair(T, [&](const V3& r1, const V3& r2, const V3&,
                             double R3sq, V3 p) {
    const PairGram g = make_gram(r1, r2, p);
    rows.clear();
    scan_completions(g, R3sq, [&](std::int64_t s, std::int64_t u) {
      rows.push_back({p[0] + s * r1[0] + u * r2[0],
                      p[1] + s * r1[1] + u * r2[1],
                      p[2] + s * r1[2] + u * r2[2]});
    });
    std::sort(rows.begin(), rows.end());
    for (const V3& r3 : rows) {
      Mat3z m;
      m << r1[0], r1[1], r1[2], r2[0], r2[1], r2[2], r3[0], r3[1], r3[2];
      f(m);
    }
  });
}

std::vector<Mat3z> enumerate_sl3z(double T) {
  std::vector<Mat3z> out;
  for_each_sl3z_mat(T, [&](const Mat3z& m) { out.push_back(m); });
  return out;
}

std::vector<Mat3z> enumerate_sl3z_bruteforce(double T) {
  // Nested loops over all nine entries, pruned by the running norm budget.
  std::vector<Mat3z> out;
  const double T2 = ball_budget(T);
  if (T2 < 3.0) return out;
  std::array<std::int64_t, 9> e{};
  auto det3 = [&]() {
    return e[0] * (e[4] * e[8] - e[5] * e[7]) -
           e[1] * (e[3] * e[8] - e[5] * e[6]) +
           e[2] * (e[3] * e[7] - e[4] * e[6]);
  };
  auto rec = [&](auto&& self, int idx, double budget) -> void {
    if (idx == 9) {
      if (det3() == 1) {
        Mat3z m;
        m << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
        out.push_back(m);
      }
      return;
    }
    const auto b = static_cast<std::int64_t>(std::floor(std::sqrt(budget)));
    for (e[idx] = -b; e[idx] <= b; ++e[idx])
      self(self, idx + 1, budget - double(e[idx] * e[idx]));
  };
  rec(rec, 0, T2);
  return out;
}

// ---------------------------------------------------------------------------
// Ball cache

namespace {
constexpr char kCacheMagic[6] = {'Z', 'E', 'N', 'U', 'M', '1'};

void put_u64(std::ofstream& f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  f.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u64(std::ifstream& f, std::uint64_t& v) {
  unsigned char b[8];
  if (!f.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return true;
}
}  // namespace

void write_ball_cache(const std::string& path, int group, double T,
                      const std::vector<std::int64_t>& entries) {
  const std::size_t per = group == 2 ? 4 : 9;
  if (entries.size() % per != 0)
    throw std::invalid_argument("write_ball_cache: ragged entry list");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_ball_cache: cannot open " + path);
  f.write(kCacheMagic, 6);
  put_u64(f, std::uint64_t(group));
  std::uint64_t tbits;
  static_assert(sizeof(double) == 8);
  std::memcpy(&tbits, &T, 8);
  put_u64(f, tbits);
  put_u64(f, entries.size() / per);
  for (std::int64_t e : entries) put_u64(f, std::uint64_t(e));
}

bool read_ball_cache(const std::string& path, int& group, double& T,
                     std::vector<std::int64_t>& entries) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  char magic[6];
  if (!f.read(magic, 6) || std::memcmp(magic, kCacheMagic, 6) != 0)
    return false;
  std::uint64_t g, tbits, count;
  if (!get_u64(f, g) || !get_u64(f, tbits) || !get_u64(f, count)) return false;
  if (g != 2 && g != 3) return false;
  group = int(g);
  std::memcpy(&T, &tbits, 8);
  const std::size_t per = group == 2 ? 4 : 9;
  entries.assign(count * per, 0);
  for (auto& e : entries) {
    std::uint64_t v;
    if (!get_u64(f, v)) return false;
    e = std::int64_t(v);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Pair-level iteration for orbit experiments: the orbit point of the base
// point under gamma depends only on the first two rows, so callers can work
// with (r1, r2, multiplicity).

void for_each_sl3z_pair(
    double T,
    const std::function<void(const std::array<std::int64_t, 3>&,
                             const std::array<std::int64_t, 3>&, long)>& f) {
  for_each_valid_pair(T, [&](const V3& r1, const V3& r2, const V3&,
                             double R3sq, V3 p) {
    const PairGram g = make_gram(r1, r2, p);
    long count = 0;
    scan_completions(g, R3sq,
                     [&](std::int64_t, std::int64_t) { ++count; });
    if (count > 0) f(r1, r2, count);
  });
}

}  // namespace latorb
