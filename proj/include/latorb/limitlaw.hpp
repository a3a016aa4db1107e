#pragma once

#include <functional>
#include <string>
#include <vector>

#include "latorb/moduli.hpp"
#include "latorb/rng.hpp"
#include "latorb/types.hpp"
#include "latorb/zenum.hpp"

namespace latorb {

// 2x2 shape matrix of a unimodular 2-lattice basis after rotating its plane
// onto e3-perp, oriented by the basis's own right-handed normal (det +1).
// Throws unless the covolume is 1 within tol.
Mat2 plane_shape_matrix(const Basis23& basis, double tol = 1e-9);

// Density value of the limiting shape measure: the inverse-fourth-power sum
// over maps from the x0 lattice to lambda. Equals
// skewed_series(4, M0^-1, M, K) for the two shape matrices.
TruncatedSeries psi(const Basis23& x0_basis, const Basis23& lambda_basis,
                    double K);

// Limit ratio of skewed-ball volumes mu(H_T[g1^-1, g2]) / mu(H_T):
// (1 / (G4^2 |det H1|)) S4(G1, H1; K) / S4(I, I; K) with the factors of
// g1^-1 (left form) and g2 (right form), brackets propagated.
Bracket alpha_ratio(const Mat3& g1, const Mat3& g2, double K);

// Product-form test function on (shape z, normal w); a missing part means
// the constant 1.
struct TestFunction {
  std::string name;
  std::function<double(Complex)> z_part;
  std::function<double(const Vec3&)> w_part;
};

// The six-function dictionary used by the experiments: two degree-4
// spherical harmonics in w, two interior hyperbolic bumps in z, and two
// products.
const std::vector<TestFunction>& dictionary();

// smooth bump exp(1 - 1/(1-t^2)) on |t|<1
double bump_profile(double t);
double hyperbolic_distance(Complex a, Complex b);

struct QuadParams {
  int x_nodes = 24;
  int u_nodes = 32;
  double y_max = 50.0;
  double series_K = 200.0;
  int sphere_polar_nodes = 32;
  int sphere_azimuth_nodes = 64;
};

struct Expectation {
  double value = 0;
  double error = 0;
};

// Quadrature state over the reduced domain for one base point: node list
// with psi values, the normalization Z (which tends to pi for every base
// point), and error components.
class NuContext {
 public:
  NuContext(const PointX23& x0, const QuadParams& params = {});

  Expectation expectation(const TestFunction& f) const;

  double normalization() const { return z_mass_; }
  double normalization_error() const { return z_mass_err_; }
  const Mat2& base_factor() const { return a_factor_; }
  double psi_max() const { return psi_max_; }

  // integral of f(z) Psi(z) dmu_hyp over the truncated reduced domain
  Expectation integrate_zpart(const std::function<double(Complex)>& f) const;

 private:
  struct Node {
    Complex z;
    double weight;
    double psi;
    bool coarse;  // member of the error-estimation subgrid
  };
  QuadParams params_;
  Mat2 a_factor_;
  std::vector<Node> nodes_;
  double z_mass_ = 0, z_mass_err_ = 0;
  double truncation_err_ = 0, cusp_err_ = 0;
  double psi_max_ = 0;
};

double sphere_integral(const std::function<double(const Vec3&)>& f,
                       int polar_nodes = 32, int azimuth_nodes = 64);

Expectation nu_expectation(const PointX23& x0, const TestFunction& f,
                           const QuadParams& params = {});

// One draw of the limiting measure in section coordinates.
struct NuSample {
  Complex z;
  double theta;
  Vec3 w;
};

struct SamplerParams {
  double y_cap = 500.0;       // proposals above this are rejected outright
  std::size_t max_attempts = 100000;
  double rel_tail = 8e-3;     // per-evaluation truncation target
};

class NuSampler {
 public:
  NuSampler(const PointX23& x0, const SamplerParams& params = {});

  NuSample sample(Rng& rng) const;
  std::vector<NuSample> run(std::uint64_t seed, std::size_t n) const;

  double envelope() const { return envelope_; }
  double psi(Complex z) const;  // tail-corrected evaluation

 private:
  SamplerParams params_;
  Mat2 a_factor_;
  double smin_a_ = 1.0;
  double envelope_ = 0;   // 1.5 x grid max of Psi
  double cusp_coef_ = 0;  // bound Psi <= cusp_coef / y for y >= 3
};

PointX23 sample_to_point(const NuSample& s);

std::string samples_to_csv(const std::vector<NuSample>& samples);

}  // namespace latorb
