#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latorb/limitlaw.hpp"
#include "latorb/moduli.hpp"
#include "latorb/skewvol.hpp"
#include "latorb/types.hpp"

namespace latorb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weighted point cloud on the shape-times-normal coordinates.
struct EmpiricalMeasure {
  struct Atom {
    Complex z;
    Vec3 w;
    double weight;
  };
  std::vector<Atom> atoms;
  double total_weight = 0;

  double mean(const TestFunction& f) const;
  void normalize();  // rescale weights to sum to 1
};

struct OrbitParams {
  std::vector<double> T_list{8.0, 12.0, 15.0};
  PointX23 x0 = base_point();
  QuadParams quad;
  int cap_count = 1000;
  std::uint64_t cap_seed = 99;
  std::size_t max_csv_rows = 2'000'000;
  double max_pair_budget = 3e8;  // predicted row-pair iterations
  std::string out_dir;           // empty = no CSV dumps
};

struct DualParams {
  Mat3 g1 = Mat3::Identity();
  Mat3 g2 = Mat3::Identity();
  double T = 30.0;
  std::size_t samples = 100'000;
  std::vector<double> r_list{1.0, 1.5, 2.0};
};

struct RunConfig {
  std::uint64_t seed = 20240901;
  int workers = 1;
  std::string out_dir = ".";
  OrbitParams orbit;
  DualParams dual;
  std::size_t compare_samples = 100'000;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
};

// Spherical-cap star discrepancy of a weighted normal cloud against the
// uniform sphere, over `count` seeded random caps.
double cap_discrepancy(const std::vector<std::pair<Vec3, double>>& cloud,
                       int count, std::uint64_t seed);

struct OrbitReportRow {
  double T = 0;
  double matrix_count = 0;
  double discrepancy = 0;
  std::map<std::string, double> empirical;   // dictionary means
  std::map<std::string, double> reference;   // quadrature expectations
  std::map<std::string, double> ref_error;
};

struct OrbitReport {
  std::vector<OrbitReportRow> rows;
  bool discrepancy_decreasing = false;
  std::map<std::string, bool> deviation_decreasing;
  bool aborted = false;  // budget abort with partial rows
  std::string json() const;
};

OrbitReport orbit_experiment(const OrbitParams& params);

struct DualReport {
  double T = 0;
  std::size_t samples = 0;
  std::vector<double> r_list;
  std::vector<double> mean_count;     // average F_r per radius
  std::vector<double> sigma;          // std error of the mean
  std::vector<double> expected;       // (4/3) pi r^3
  std::vector<double> zero_fraction;  // P(F_r = 0)
  std::vector<double> systole;        // sorted sample systoles (decile table)
  std::string json() const;
};

DualReport dual_experiment(const DualParams& params, std::uint64_t seed);

// Lattice point counter: nonzero x in Z^3 with ||L x|| <= r (columns span).
long count_lattice_points(const Mat3& L, double r);
double lattice_systole(const Mat3& L);

struct RatioReportRow {
  double T = 0;
  double gamma_count = 0;
  Bracket h_volume;
  double ratio_mid = 0;          // mu(H_T) / #Gamma_T
  Bracket implied_covolume;      // 2 pi^3 ratio / S4
  double cross_check = 0;        // #Gamma_T * implied / T^6 vs pi^4/3
};

struct RatioReport {
  std::vector<RatioReportRow> rows;
  double s4_mid = 0;
  std::string json() const;
};

RatioReport ratio_experiment(const std::vector<double>& T_list);

// Sampler-vs-quadrature consistency over the dictionary.
struct CompareReport {
  struct Row {
    std::string name;
    double mc = 0, mc_sigma = 0;
    double quad = 0, quad_err = 0;
    bool within_3sigma = false;
  };
  std::vector<Row> rows;
  double z_mass = 0;       // quadrature normalization, tends to pi
  bool all_pass = false;
  std::string json() const;
};

CompareReport compare_experiment(const PointX23& x0, std::size_t samples,
                                 std::uint64_t seed, const QuadParams& quad);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace latorb
