#include "latorb/haarcal.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "latorb/quadrature.hpp"
#include "latorb/rng.hpp"
#include "latorb/skewvol.hpp"
#include "latorb/zenum.hpp"

namespace latorb {

QuadratureResult vol_b_tau(double tau) {
  if (tau < std::sqrt(2.0) - 1e-12)
    throw std::invalid_argument("vol_b_tau: tau < sqrt(2)");
  QuadratureResult out;
  const double half = tau * tau / 2.0;
  if (half <= 1.0) return out;  // degenerate interval, f(0) = 0
  const double tmax = std::acosh(half);
  auto f = [&](double t) {
    const double rad = tau * tau - 2.0 * std::cosh(t);
    return rad <= 0 ? 0.0 : 2.0 * std::sqrt(rad) * std::exp(-0.5 * t);
  };
  // integrand vanishes like a square root at both ends; substitute
  // t = tmax - s^2 (and mirrored) to make the transformed integrand smooth
  auto upper = [&](double s) { return f(tmax - s * s) * 2.0 * s; };
  auto lower = [&](double s) { return f(-tmax + s * s) * 2.0 * s; };
  const double split = std::sqrt(tmax);
  auto hi = integrate_adaptive(upper, 0.0, split);
  auto lo = integrate_adaptive(lower, 0.0, split);
  out.value = 2.0 * kPi * (hi.value + lo.value);
  out.error_estimate = 2.0 * kPi * (hi.error + lo.error) + 1e-12 * out.value;
  out.nodes = hi.evals + lo.evals;
  return out;
}

McEstimate vol_b_tau_mc(double tau, std::uint64_t seed,
                        std::size_t samples) {
  // t uniform on [-tmax, tmax], x uniform on the allowed slice; weight is
  // the slice width times e^-t, and the theta fiber contributes 2 pi.
  McEstimate mc;
  const double half = tau * tau / 2.0;
  if (half <= 1.0) return mc;
  const double tmax = std::acosh(half);
  Rng rng(seed);
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = rng.uniform(-tmax, tmax);
    const double rad = tau * tau - 2.0 * std::cosh(t);
    double f = 0;
    if (rad > 0) {
      // x ranges over |x| <= e^(t/2) sqrt(rad); sample it to exercise the
      // full 3-d picture even though the slice width is explicit
      const double xmax = std::exp(0.5 * t) * std::sqrt(rad);
      const double x = rng.uniform(-xmax, xmax);
      (void)x;
      f = 2.0 * xmax * std::exp(-t);
    } else {
      rng.uniform();
    }
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / double(samples);
  const double var =
      std::max(0.0, sum2 / double(samples) - mean * mean) / double(samples);
  mc.value = 2.0 * kPi * 2.0 * tmax * mean;
  mc.sigma = 2.0 * kPi * 2.0 * tmax * std::sqrt(var);
  mc.samples = samples;
  return mc;
}

double norm_minus4_inner(double a) {
  const double a4 = a * a * a * a;
  return 0.5 * kPi * a4 * std::pow(1.0 + a4, -1.5);
}

QuadratureResult integral_norm_minus4() {
  // outer integral in u = log a so both tails decay exponentially; the
  // integrand with measure a^-3 da is (pi/2) a^-2 (a^2 + a^-2)^(-3/2) da
  auto outer = [](double u) {
    const double a = std::exp(u);
    const double c = a * a + 1.0 / (a * a);
    return 0.5 * kPi / (a * a) * std::pow(c, -1.5) * a;  // da = a du
  };
  auto q = integrate_adaptive(outer, -30.0, 30.0, {1e-12, 1e-16, 8000});
  QuadratureResult out;
  out.value = 2.0 * kPi * q.value;
  out.error_estimate = 2.0 * kPi * q.error + 1e-12 * out.value;
  out.nodes = q.evals;
  return out;
}

CountingFit fit_counting_constant(const std::vector<double>& tau_grid) {
  if (tau_grid.size() < 3)
    throw std::invalid_argument("fit_counting_constant: grid too small");
  for (double t : tau_grid)
    if (t > 150.0)
      throw std::invalid_argument("fit_counting_constant: tau > 150 budget");
  CountingFit fit;
  fit.tau = tau_grid;
  fit.c = fit_count_coefficient(tau_grid, &fit.residual);
  return fit;
}

double covolume_estimate(double tau) {
  return vol_b_tau(tau).value / double(count_n_tau(tau));
}

MGtCheck m_gt_constant(double T, std::size_t samples, std::uint64_t seed) {
  MGtCheck out;
  out.T = T;
  out.target = kPi * kPi * kPi * kPi / 3.0;
  // unfolding: m(G_T)/T^6 -> (4 pi * int ||g||^-4 dg) / S4(I,I) *
  // mu(H_T)/T^6, with the first factor 2 pi^3 evaluated by quadrature and
  // the H-ball volume by Monte Carlo.
  const double section_mass = 4.0 * kPi * integral_norm_minus4().value;
  auto s4 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), 200.0);
  auto spec = SkewedBallSpec::make(Mat3::Identity(), Mat3::Identity(), T);
  auto mc = ball_volume_mc(spec, seed, samples);
  const double t6 = std::pow(T, 6.0);
  const double scale = section_mass / s4.bracket().mid() / t6;
  out.mc = scale * mc.value;
  out.sigma = scale * mc.sigma +
              out.mc * s4.tail_hi / s4.head;  // series width folded in
  out.samples = mc.samples;
  return out;
}

std::string constants_report(std::uint64_t seed) {
  nlohmann::ordered_json j;
  auto v100 = vol_b_tau(100.0);
  auto v200 = vol_b_tau(200.0);
  j["c_prime"] = v200.value / (200.0 * 200.0);
  j["c_prime_drift"] =
      std::abs(v200.value / (200.0 * 200.0) - v100.value / (100.0 * 100.0));
  std::vector<double> grid;
  for (double t = 20; t <= 100.5; t += 10) grid.push_back(t);
  j["c"] = fit_counting_constant(grid).c;
  auto mgt = m_gt_constant(50.0, 2'000'000, seed);
  j["pi4_over_3_check"] = {{"target", mgt.target},
                           {"mc", mgt.mc},
                           {"sigma", mgt.sigma}};
  auto i4 = integral_norm_minus4();
  j["pi2_over_2_check"] = {{"value", i4.value},
                           {"error", i4.error_estimate},
                           {"target", kPi * kPi / 2.0}};
  j["covolume_estimate"] = covolume_estimate(100.0);
  return j.dump(2);
}

}  // namespace latorb
