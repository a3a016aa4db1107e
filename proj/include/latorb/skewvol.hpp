#pragma once

#include <cstdint>
#include <vector>

#include "latorb/matcore.hpp"
#include "latorb/rng.hpp"
#include "latorb/types.hpp"
#include "latorb/zenum.hpp"

namespace latorb {

// (v, t, gamma) coordinates of u_v a_t gamma, the stabilizer group element
// [[t^-1/2 gamma, 0], [t^-1/2 v gamma, t]]. Left Haar measure in these
// coordinates is dv dt/t^4 times counting measure on gamma.
struct HElement {
  Vec2 v;
  double t = 1.0;
  Mat2i gamma = Mat2i::identity();
};

Mat3 h_embed(const HElement& h);
HElement h_compose(const HElement& a, const HElement& b);

// Skewed ball H_T[g1,g2] = {h : ||g1 h g2|| < T}, with the Iwasawa factors
// of g1 (left form) and g2 (right form) cached. Only gamma with
// ||G1 gamma H1||^2 < MT contribute a stratum.
struct SkewedBallSpec {
  Mat3 g1, g2;
  double T = 0;
  BlockIwasawa left;   // g1 = k1 [[G1,0],[G3,G4]]
  BlockIwasawa right;  // g2 = [[H1,0],[H3,H4]] k2
  double MT = 0;       // max of -G4^2 H4^2 t^3 + t T^2 over t > 0
  double t0 = 0;       // where the max is attained

  static SkewedBallSpec make(const Mat3& g1, const Mat3& g2, double T);
  double skew_norm2(const Mat2i& gamma) const;  // ||G1 gamma H1||^2
  bool contains(const HElement& h) const;       // ||g1 h g2|| <= T
};

// Positive roots a <= b of -G4^2 H4^2 t^3 + t T^2 - F. Degenerate when
// F >= MT (within fp slack); then a = b = t0 and the stratum is empty.
struct CubicRoots {
  double a = 0, b = 0;
  bool degenerate = false;
};

CubicRoots cubic_roots(const SkewedBallSpec& spec, const Mat2i& gamma);
CubicRoots cubic_roots_from_f(double g4h4, double T, double F);

// Exact Haar volume of the stratum V_{gamma,T}[g1,g2] via the closed-form
// antiderivative of the ellipse-area integrand.
double stratum_volume(const SkewedBallSpec& spec, const Mat2i& gamma);

// t-split diagnostics of a stratum: the (a, a+delta, c, b) partition of the
// integration range and the sub-volumes on each piece.
struct StratumDiagnostics {
  double a = 0, b = 0;
  double cut_c = 0;      // F^(3/4) / T^(3/2) truncation point
  double delta = 0;      // F^(5/4) / T^(5/2) inner sliver
  double vol_head = 0;   // (a, a+delta)
  double vol_mid = 0;    // (a+delta, c)
  double vol_tail = 0;   // (c, b)
};
StratumDiagnostics stratum_diagnostics(const SkewedBallSpec& spec,
                                       const Mat2i& gamma);

// Sum of stratum volumes over the enumerated gamma ball, with an upper
// bound for the skipped strata, plus the truncation-matched leading term
// (pi / (G4^2 |det H1|)) (T^6/6) sum F^-2 for comparison.
struct BallVolume {
  double head = 0;
  double tail_hi = 0;
  double leading_head = 0;  // same gamma set, asymptotic form
  std::size_t strata = 0;
  std::size_t near_degenerate = 0;
  double gamma_cutoff = 0;

  Bracket bracket() const { return {head, head + tail_hi}; }
};

// gamma_cutoff <= 0 picks min(400, full F < MT range).
BallVolume ball_volume(const SkewedBallSpec& spec, double gamma_cutoff = 0);

// Volume prefactor pi / (G4^2 |det H1|).
double ellipse_prefactor(const SkewedBallSpec& spec);

// D1-style uniform growth check: mu(H_{(1+delta)T}) <= (1+eps) mu(H_T)
// across a T grid (conservative: upper bracket vs lower bracket).
struct D1Report {
  bool pass = false;
  double delta = 0, epsilon = 0;
  double first_passing_T = 0;
  std::vector<double> grid;
  std::vector<double> ratios;
};
D1Report check_d1(const Mat3& g1, const Mat3& g2, double delta, double eps,
                  const std::vector<double>& T_grid);

// Monte-Carlo estimate of the ball volume: exact strata mixture with
// uniform-t sampling inside each stratum (no use of the closed-form
// antiderivative, only the ellipse area).
struct McVolume {
  double value = 0;
  double sigma = 0;
  std::size_t samples = 0;
};
McVolume ball_volume_mc(const SkewedBallSpec& spec, std::uint64_t seed,
                        std::size_t samples, double gamma_cutoff = 0);

// Sampler of the normalized left Haar measure restricted to H_T[g1,g2]:
// gamma by stratum volume, t by inverse CDF of the closed-form marginal,
// v uniform on the ellipse slice.
class HBallSampler {
 public:
  HBallSampler(const SkewedBallSpec& spec, double gamma_cutoff = 0);

  HElement sample(Rng& rng) const;

  const SkewedBallSpec& spec() const { return spec_; }
  const std::vector<Mat2i>& strata() const { return gammas_; }
  const std::vector<double>& stratum_volumes() const { return volumes_; }
  double total_volume() const { return total_; }

  // conditional t-CDF within stratum i (exposed for distribution tests)
  double t_cdf(std::size_t i, double t) const;

 private:
  SkewedBallSpec spec_;
  std::vector<Mat2i> gammas_;
  std::vector<double> volumes_;
  std::vector<double> cumulative_;
  double total_ = 0;
};

}  // namespace latorb
