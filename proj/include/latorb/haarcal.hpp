#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latorb/types.hpp"

namespace latorb {

struct QuadratureResult {
  double value = 0;
  double error_estimate = 0;
  long nodes = 0;
};

// Haar volume of {g in SL(2,R) : ||g|| <= tau} in Iwasawa coordinates with
// the SO(2) fiber of mass 2pi: 2pi * integral of 2 sqrt(tau^2 - 2 cosh t)
// e^(-t/2) over cosh t <= tau^2/2. Square-root endpoint vanishing is removed
// by the substitution t = endpoint -/+ s^2.
QuadratureResult vol_b_tau(double tau);

// Monte-Carlo cross-check of vol_b_tau in the (x, t, theta) coordinates with
// density e^-t; returns the estimate and its standard error.
struct McEstimate {
  double value = 0;
  double sigma = 0;
  std::size_t samples = 0;
};
McEstimate vol_b_tau_mc(double tau, std::uint64_t seed, std::size_t samples);

// The double integral 2pi * int (a^2 + a^-2 + x^2 a^-2)^-2 a^-3 dx da over
// a > 0; equals pi^2/2.
QuadratureResult integral_norm_minus4();

// Inner x-integral of the display above at fixed a (closed form used by
// consistency tests): (pi/2) a^4 (1 + a^4)^(-3/2).
double norm_minus4_inner(double a);

// Least-squares c in N(tau) ~ c tau^2 together with the per-point residuals.
struct CountingFit {
  double c = 0;
  std::vector<double> tau;
  std::vector<double> residual;  // N/tau^2 - c
};
CountingFit fit_counting_constant(const std::vector<double>& tau_grid);

// Ratio of the ball-volume and counting laws at tau; estimates the covolume
// of the integer points under the same normalization as vol_b_tau.
double covolume_estimate(double tau = 100.0);

// Target pi^4/3 for m(G_T)/T^6 along with a Monte-Carlo estimate assembled
// from the section unfolding: the H-ball volume Monte Carlo times the
// section mass 2 pi^3 / S4, where 2 pi^3 = 4 pi * integral_norm_minus4.
struct MGtCheck {
  double target = 0;
  double mc = 0;
  double sigma = 0;
  double T = 0;
  std::size_t samples = 0;
};
MGtCheck m_gt_constant(double T = 50.0, std::size_t samples = 10'000'000,
                       std::uint64_t seed = 20240901);

// {c_prime, c, pi4_over_3_check, pi2_over_2_check, covolume_estimate} as an
// ordered-JSON string.
std::string constants_report(std::uint64_t seed = 20240901);

}  // namespace latorb
