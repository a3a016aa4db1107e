#include "latorb/skewvol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latorb {

Mat3 h_embed(const HElement& h) {
  if (!(h.t > 0)) throw std::invalid_argument("h_embed: t <= 0");
  const double s = 1.0 / std::sqrt(h.t);
  const Mat2 g = h.gamma.real();
  Mat3 m;
  m << s * g(0, 0), s * g(0, 1), 0,
       s * g(1, 0), s * g(1, 1), 0,
       s * (h.v(0) * g(0, 0) + h.v(1) * g(1, 0)),
       s * (h.v(0) * g(0, 1) + h.v(1) * g(1, 1)), h.t;
  return m;
}

HElement h_compose(const HElement& a, const HElement& b) {
  HElement c;
  const Mat2i gi = a.gamma.inverse();
  const double f = std::pow(a.t, 1.5);
  c.v(0) = a.v(0) + f * (b.v(0) * double(gi.a) + b.v(1) * double(gi.c));
  c.v(1) = a.v(1) + f * (b.v(0) * double(gi.b) + b.v(1) * double(gi.d));
  c.t = a.t * b.t;
  c.gamma = a.gamma * b.gamma;
  return c;
}

SkewedBallSpec SkewedBallSpec::make(const Mat3& g1, const Mat3& g2,
                                    double T) {
  if (!(T > 0)) throw std::invalid_argument("SkewedBallSpec: T <= 0");
  SkewedBallSpec s;
  s.g1 = g1;
  s.g2 = g2;
  s.T = T;
  s.left = block_iwasawa_left(g1);
  s.right = block_iwasawa_right(g2);
  const double c = s.left.corner * s.right.corner;
  s.MT = 2.0 * T * T * T / (3.0 * std::sqrt(3.0) * c);
  s.t0 = T / (std::sqrt(3.0) * c);
  return s;
}

double SkewedBallSpec::skew_norm2(const Mat2i& gamma) const {
  Mat2 m = left.block * gamma.real() * right.block;
  return m.squaredNorm();
}

bool SkewedBallSpec::contains(const HElement& h) const {
  return (g1 * h_embed(h) * g2).norm() <= T * (1.0 + 1e-12);
}

CubicRoots cubic_roots_from_f(double g4h4, double T, double F) {
  const double c2 = g4h4 * g4h4;
  const double T2 = T * T;
  const double MT = 2.0 * T * T2 / (3.0 * std::sqrt(3.0) * g4h4);
  const double t0 = T / (std::sqrt(3.0) * g4h4);
  CubicRoots r;
  if (F >= MT * (1.0 - 1e-9)) {
    r.a = r.b = t0;
    r.degenerate = true;
    return r;
  }
  auto p = [&](double t) { return t * (T2 - c2 * t * t) - F; };
  auto dp = [&](double t) { return T2 - 3.0 * c2 * t * t; };
  // guaranteed sign-change brackets: p < 0 at F/T^2 and sqrt(3) t0,
  // p > 0 at 1.5 F/T^2 and t0
  auto solve = [&](double lo, double hi, bool rising) {
    for (int i = 0; i < 60; ++i) {
      double mid = 0.5 * (lo + hi);
      bool pos = p(mid) > 0;
      if (pos == rising)
        hi = mid;
      else
        lo = mid;
      // Newton polish once the bracket is tight
      if (i > 30) {
        double t = 0.5 * (lo + hi);
        double d = dp(t);
        if (d != 0) {
          double n = t - p(t) / d;
          if (n > std::min(lo, hi) && n < std::max(lo, hi)) {
            return n;
          }
        }
      }
    }
    return 0.5 * (lo + hi);
  };
  // for the small root the bracket is rising in p going left
  r.a = solve(F / T2, 1.5 * F / T2, false);
  r.b = solve(t0, std::sqrt(3.0) * t0, true);
  // one extra Newton step each for residual polish
  for (int i = 0; i < 3; ++i) {
    if (dp(r.a) != 0) r.a -= p(r.a) / dp(r.a);
    if (dp(r.b) != 0) r.b -= p(r.b) / dp(r.b);
  }
  return r;
}

CubicRoots cubic_roots(const SkewedBallSpec& spec, const Mat2i& gamma) {
  return cubic_roots_from_f(spec.left.corner * spec.right.corner, spec.T,
                            spec.skew_norm2(gamma));
}

double ellipse_prefactor(const SkewedBallSpec& spec) {
  return kPi / (spec.left.corner * spec.left.corner *
                std::abs(spec.right.block.determinant()));
}

namespace {

// antiderivative of (-c^2 t^3 + T^2 t - F)/t^4
double stratum_antiderivative(double c2, double T2, double F, double t) {
  return -c2 * std::log(t) - T2 / (2.0 * t * t) + F / (3.0 * t * t * t);
}

struct StratumGeometry {
  double F = 0, a = 0, b = 0;
  bool empty = true;
};

StratumGeometry stratum_geometry(const SkewedBallSpec& spec,
                                 const Mat2i& gamma, std::size_t* near_deg) {
  StratumGeometry g;
  g.F = spec.skew_norm2(gamma);
  if (g.F >= spec.MT * (1.0 - 1e-9)) {
    if (g.F < spec.MT && near_deg) ++*near_deg;
    return g;
  }
  CubicRoots r = cubic_roots_from_f(spec.left.corner * spec.right.corner,
                                    spec.T, g.F);
  g.a = r.a;
  g.b = r.b;
  g.empty = false;
  return g;
}

}  // namespace

double stratum_volume(const SkewedBallSpec& spec, const Mat2i& gamma) {
  StratumGeometry g = stratum_geometry(spec, gamma, nullptr);
  if (g.empty) return 0.0;
  const double c = spec.left.corner * spec.right.corner;
  const double T2 = spec.T * spec.T;
  return ellipse_prefactor(spec) *
         (stratum_antiderivative(c * c, T2, g.F, g.b) -
          stratum_antiderivative(c * c, T2, g.F, g.a));
}

StratumDiagnostics stratum_diagnostics(const SkewedBallSpec& spec,
                                       const Mat2i& gamma) {
  StratumDiagnostics d;
  StratumGeometry g = stratum_geometry(spec, gamma, nullptr);
  if (g.empty) return d;
  d.a = g.a;
  d.b = g.b;
  const double norm = std::sqrt(g.F);
  d.cut_c = std::pow(norm, 1.5) / std::pow(spec.T, 1.5);
  d.delta = std::pow(norm, 2.5) / std::pow(spec.T, 2.5);
  const double c = spec.left.corner * spec.right.corner;
  const double T2 = spec.T * spec.T;
  const double pref = ellipse_prefactor(spec);
  auto piece = [&](double lo, double hi) {
    lo = std::clamp(lo, g.a, g.b);
    hi = std::clamp(hi, g.a, g.b);
    if (hi <= lo) return 0.0;
    return pref * (stratum_antiderivative(c * c, T2, g.F, hi) -
                   stratum_antiderivative(c * c, T2, g.F, lo));
  };
  d.vol_head = piece(g.a, g.a + d.delta);
  d.vol_mid = piece(g.a + d.delta, d.cut_c);
  d.vol_tail = piece(std::max(d.cut_c, g.a + d.delta), g.b);
  return d;
}

namespace {
double full_gamma_bound(const SkewedBallSpec& spec) {
  const double s = smin2(spec.left.block) * smin2(spec.right.block);
  return std::sqrt(spec.MT) / s + 1.0;
}

double effective_cutoff(const SkewedBallSpec& spec, double gamma_cutoff) {
  const double full = full_gamma_bound(spec);
  if (gamma_cutoff > 0) return std::min(gamma_cutoff, full);
  return std::min(400.0, full);
}
}  // namespace

BallVolume ball_volume(const SkewedBallSpec& spec, double gamma_cutoff) {
  BallVolume out;
  const double cutoff = effective_cutoff(spec, gamma_cutoff);
  out.gamma_cutoff = cutoff;
  const double c = spec.left.corner * spec.right.corner;
  const double T2 = spec.T * spec.T;
  const double pref = ellipse_prefactor(spec);
  const double T6 = T2 * T2 * T2;
  double head = 0, lead = 0;
  for_each_sl2z(cutoff, [&](const Mat2i& gamma) {
    StratumGeometry g = stratum_geometry(spec, gamma, &out.near_degenerate);
    if (g.empty) return;
    head += pref * (stratum_antiderivative(c * c, T2, g.F, g.b) -
                    stratum_antiderivative(c * c, T2, g.F, g.a));
    lead += pref * T6 / (6.0 * g.F * g.F);
    ++out.strata;
  });
  out.head = head;
  out.leading_head = lead;
  const double full = full_gamma_bound(spec);
  if (cutoff < full - 1e-9) {
    // every skipped stratum obeys V <= pref T^6 / (2 F^2), and the sum of
    // F^-2 over the skipped gammas has the series tail bound
    const double smin_prod = smin2(spec.left.block) * smin2(spec.right.block);
    const double K = smin_prod * cutoff;
    const double tail_sum = counting_tail_coefficient() /
                            (smin_prod * smin_prod) * 2.0 / (K * K);
    out.tail_hi = pref * (T6 / 2.0) * tail_sum;
  }
  return out;
}

D1Report check_d1(const Mat3& g1, const Mat3& g2, double delta, double eps,
                  const std::vector<double>& T_grid) {
  D1Report rep;
  rep.delta = delta;
  rep.epsilon = eps;
  rep.grid = T_grid;
  rep.first_passing_T = -1;
  bool all_from_first = false;
  for (double T : T_grid) {
    auto lo = ball_volume(SkewedBallSpec::make(g1, g2, T));
    auto hi = ball_volume(SkewedBallSpec::make(g1, g2, (1.0 + delta) * T));
    const double ratio = hi.bracket().hi / lo.bracket().lo;
    rep.ratios.push_back(ratio);
    const bool ok = ratio <= 1.0 + eps;
    if (ok && rep.first_passing_T < 0) {
      rep.first_passing_T = T;
      all_from_first = true;
    }
    if (!ok) {
      if (rep.first_passing_T >= 0) all_from_first = false;
    }
  }
  rep.pass = rep.first_passing_T >= 0 && all_from_first;
  return rep;
}

McVolume ball_volume_mc(const SkewedBallSpec& spec, std::uint64_t seed,
                        std::size_t samples, double gamma_cutoff) {
  // Stratified over gamma; inside a stratum, t is uniform on a widened root
  // interval and v uniform on a box around the ellipse slice. Membership is
  // tested on the defining inequality ||g1 h g2|| <= T, independent of the
  // closed forms under test.
  McVolume mc;
  const double cutoff = effective_cutoff(spec, gamma_cutoff);
  struct Stratum {
    Mat2i gamma;
    double a, b, vol;
  };
  std::vector<Stratum> strata;
  double total = 0;
  for_each_sl2z(cutoff, [&](const Mat2i& gamma) {
    StratumGeometry g = stratum_geometry(spec, gamma, nullptr);
    if (g.empty) return;
    double v = stratum_volume(spec, gamma);
    strata.push_back({gamma, g.a, g.b, v});
    total += v;
  });
  if (strata.empty() || total <= 0) return mc;

  Rng rng(seed);
  const Mat2 s_base = spec.right.block;  // v-box needs (gamma H1)^-1
  double value = 0, var = 0;
  std::size_t used = 0;
  for (auto& st : strata) {
    auto n = std::max<std::size_t>(
        4, std::size_t(double(samples) * st.vol / total));
    const double lo = 0.8 * st.a, hi = 1.05 * st.b;
    const Mat2 s_mat = spec.left.corner * st.gamma.real() * s_base;
    const Mat2 s_inv = s_mat.inverse();
    const Vec2 base_shift =
        Vec2(spec.left.off * st.gamma.real() * s_base);
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = rng.uniform(lo, hi);
      const double radicand = t * (spec.T * spec.T -
                                   spec.left.corner * spec.left.corner *
                                       spec.right.corner * spec.right.corner *
                                       t * t) -
                              spec.skew_norm2(st.gamma);
      double f = 0;
      if (radicand > 0) {
        const double R = std::sqrt(radicand);
        const Vec2 center =
            -(base_shift +
              spec.left.corner * spec.right.off * std::pow(t, 1.5)) *
            s_inv;
        const double hx = R * s_inv.col(0).norm();
        const double hy = R * s_inv.col(1).norm();
        Vec2 v(center(0) + rng.uniform(-hx, hx),
               center(1) + rng.uniform(-hy, hy));
        HElement h{v, t, st.gamma};
        if (spec.contains(h)) f = 4.0 * hx * hy / (t * t * t * t);
      } else {
        rng.uniform();  // keep the stream aligned
        rng.uniform();
      }
      sum += f;
      sum2 += f * f;
    }
    const double mean = sum / double(n);
    value += (hi - lo) * mean;
    const double v_hat = (sum2 / double(n) - mean * mean) / double(n);
    var += (hi - lo) * (hi - lo) * std::max(0.0, v_hat);
    used += n;
  }
  mc.value = value;
  mc.sigma = std::sqrt(var);
  mc.samples = used;
  return mc;
}

HBallSampler::HBallSampler(const SkewedBallSpec& spec, double gamma_cutoff)
    : spec_(spec) {
  const double cutoff = effective_cutoff(spec, gamma_cutoff);
  for_each_sl2z(cutoff, [&](const Mat2i& gamma) {
    const double v = stratum_volume(spec_, gamma);
    if (v > 0) {
      gammas_.push_back(gamma);
      volumes_.push_back(v);
      total_ += v;
      cumulative_.push_back(total_);
    }
  });
  if (gammas_.empty())
    throw std::invalid_argument("HBallSampler: empty ball");
}

double HBallSampler::t_cdf(std::size_t i, double t) const {
  const Mat2i& gamma = gammas_.at(i);
  StratumGeometry g = stratum_geometry(spec_, gamma, nullptr);
  const double c = spec_.left.corner * spec_.right.corner;
  const double T2 = spec_.T * spec_.T;
  t = std::clamp(t, g.a, g.b);
  const double fa = stratum_antiderivative(c * c, T2, g.F, g.a);
  const double fb = stratum_antiderivative(c * c, T2, g.F, g.b);
  return (stratum_antiderivative(c * c, T2, g.F, t) - fa) / (fb - fa);
}

HElement HBallSampler::sample(Rng& rng) const {
  // stratum by cumulative volume
  const double pick = rng.uniform() * total_;
  const auto it =
      std::lower_bound(cumulative_.begin(), cumulative_.end(), pick);
  const std::size_t idx =
      std::min<std::size_t>(it - cumulative_.begin(), gammas_.size() - 1);
  const Mat2i gamma = gammas_[idx];

  StratumGeometry g = stratum_geometry(spec_, gamma, nullptr);
  const double c = spec_.left.corner * spec_.right.corner;
  const double T2 = spec_.T * spec_.T;
  const double fa = stratum_antiderivative(c * c, T2, g.F, g.a);
  const double fb = stratum_antiderivative(c * c, T2, g.F, g.b);
  const double target = fa + rng.uniform() * (fb - fa);
  double lo = g.a, hi = g.b;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (stratum_antiderivative(c * c, T2, g.F, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  const double t = 0.5 * (lo + hi);

  // v uniform on the ellipse slice: ||shift + v S|| <= R(t)
  const double radicand = t * (T2 - c * c * t * t) - g.F;
  const double R = std::sqrt(std::max(0.0, radicand));
  const Mat2 s_mat = spec_.left.corner * gamma.real() * spec_.right.block;
  const Vec2 shift = Vec2(spec_.left.off * gamma.real() * spec_.right.block) +
                     spec_.left.corner * spec_.right.off * std::pow(t, 1.5);
  const Vec2 y = R * rng.unit_disk() - shift;
  return HElement{y * s_mat.inverse(), t, gamma};
}

}  // namespace latorb
