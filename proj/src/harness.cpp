#include "latorb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "latorb/haarcal.hpp"

namespace latorb {

using ordered_json = nlohmann::ordered_json;

double EmpiricalMeasure::mean(const TestFunction& f) const {
  double acc = 0;
  for (const Atom& a : atoms) {
    const double fz = f.z_part ? f.z_part(a.z) : 1.0;
    const double fw = f.w_part ? f.w_part(a.w) : 1.0;
    acc += a.weight * fz * fw;
  }
  return acc / total_weight;
}

void EmpiricalMeasure::normalize() {
  if (total_weight <= 0) return;
  for (Atom& a : atoms) a.weight /= total_weight;
  total_weight = 1.0;
}

// ---------------------------------------------------------------------------
// Config

namespace {

PointX23 parse_point(const nlohmann::json& j) {
  PointX23 x;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) x.basis(r, c) = j.at("basis").at(r).at(c);
  for (int c = 0; c < 3; ++c) x.w(c) = j.at("w").at(c);
  if (x.invariant_defect() > 1e-6)
    throw ConfigError("x0 violates the moduli-space constraints");
  return x;
}

Mat3 parse_mat3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 9)
    throw ConfigError("matrix fields must be 9-element arrays (row major)");
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = j.at(i);
  if (std::abs(m.determinant() - 1.0) > 1e-9)
    throw ConfigError("matrix determinant must be 1");
  return m;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", 1);
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.orbit.out_dir = cfg.out_dir;
    if (j.contains("orbit")) {
      const auto& o = j["orbit"];
      if (o.contains("T_list"))
        cfg.orbit.T_list = o["T_list"].get<std::vector<double>>();
      if (o.contains("x0")) cfg.orbit.x0 = parse_point(o["x0"]);
      if (o.contains("quad")) {
        const auto& q = o["quad"];
        cfg.orbit.quad.x_nodes = q.value("x_nodes", cfg.orbit.quad.x_nodes);
        cfg.orbit.quad.u_nodes = q.value("u_nodes", cfg.orbit.quad.u_nodes);
        cfg.orbit.quad.y_max = q.value("y_max", cfg.orbit.quad.y_max);
        cfg.orbit.quad.series_K = q.value("series_K", cfg.orbit.quad.series_K);
      }
      cfg.orbit.cap_count = o.value("cap_count", cfg.orbit.cap_count);
      cfg.orbit.cap_seed = o.value("cap_seed", cfg.orbit.cap_seed);
      cfg.orbit.max_csv_rows = o.value("max_csv_rows", cfg.orbit.max_csv_rows);
      cfg.orbit.max_pair_budget =
          o.value("max_pair_budget", cfg.orbit.max_pair_budget);
    }
    if (j.contains("dual")) {
      const auto& d = j["dual"];
      if (d.contains("g1")) cfg.dual.g1 = parse_mat3(d["g1"]);
      if (d.contains("g2")) cfg.dual.g2 = parse_mat3(d["g2"]);
      cfg.dual.T = d.value("T", cfg.dual.T);
      cfg.dual.samples = d.value("samples", cfg.dual.samples);
      if (d.contains("r_list"))
        cfg.dual.r_list = d["r_list"].get<std::vector<double>>();
    }
    if (j.contains("compare")) {
      cfg.compare_samples =
          j["compare"].value("samples", cfg.compare_samples);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config schema error: ") + e.what());
  }
  const double tmin = std::sqrt(3.0) - 1e-9;
  if (cfg.orbit.T_list.empty()) throw ConfigError("orbit.T_list is empty");
  for (double t : cfg.orbit.T_list)
    if (t < tmin) throw ConfigError("orbit.T_list entries must be >= sqrt(3)");
  if (cfg.dual.T < tmin) throw ConfigError("dual.T must be >= sqrt(3)");
  for (double r : cfg.dual.r_list)
    if (r <= 0) throw ConfigError("dual.r_list entries must be positive");
  return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
}

// ---------------------------------------------------------------------------
// Discrepancy

double cap_discrepancy(const std::vector<std::pair<Vec3, double>>& cloud,
                       int count, std::uint64_t seed) {
  double total = 0;
  for (auto& [w, wt] : cloud) total += wt;
  Rng rng(seed);
  double worst = 0;
  for (int c = 0; c < count; ++c) {
    const Vec3 axis = rng.unit_sphere();
    const double t = rng.uniform(-1.0, 1.0);
    double inside = 0;
    for (auto& [w, wt] : cloud)
      if (w.dot(axis) >= t) inside += wt;
    worst = std::max(worst, std::abs(inside / total - 0.5 * (1.0 - t)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Orbit experiment

namespace {

bool is_base_point(const PointX23& x) {
  return (x.basis - base_point().basis).cwiseAbs().maxCoeff() < 1e-12 &&
         (x.w - base_point().w).norm() < 1e-12;
}

double predicted_pairs(double T) {
  const double r2 = std::max(0.0, T * T - 3.0);
  return kPi * kPi * kPi / 6.0 * r2 * r2 * r2 / 10.0;
  // the /10 reflects the primitive-row and gcd pruning observed in practice
}

struct OrbitAccumulator {
  const std::vector<TestFunction>& dict = dictionary();
  std::vector<double> sums;
  double total = 0;
  std::unordered_map<std::uint64_t, std::pair<Vec3, double>> normals;
  std::FILE* csv = nullptr;
  std::size_t csv_rows = 0, csv_cap = 0;

  OrbitAccumulator() : sums(dict.size(), 0.0) {}

  static std::uint64_t key3(std::int64_t a, std::int64_t b, std::int64_t c) {
    auto h = [](std::uint64_t x) {
      x ^= x >> 33;
      x *= 0xff51afd7ed558ccdull;
      x ^= x >> 33;
      return x;
    };
    return h(std::uint64_t(a) * 0x9e3779b97f4a7c15ull) ^
           h(std::uint64_t(b) + 0x165667b19e3779f9ull) ^
           h(std::uint64_t(c) ^ 0x27d4eb2f165667c5ull);
  }

  void add(Complex z, const Vec3& w, double weight,
           const std::int64_t* nkey) {
    total += weight;
    for (std::size_t i = 0; i < dict.size(); ++i) {
      const double fz = dict[i].z_part ? dict[i].z_part(z) : 1.0;
      const double fw = dict[i].w_part ? dict[i].w_part(w) : 1.0;
      sums[i] += weight * fz * fw;
    }
    if (nkey) {
      auto& slot = normals[key3(nkey[0], nkey[1], nkey[2])];
      slot.first = w;
      slot.second += weight;
    }
    if (csv && csv_rows < csv_cap) {
      const long reps = std::min<long>(long(weight), long(csv_cap - csv_rows));
      for (long r = 0; r < reps; ++r)
        std::fprintf(csv, "%.17g,%.17g,%.17g,%.17g,%.17g\n", z.real(),
                     z.imag(), w(0), w(1), w(2));
      csv_rows += reps;
    }
  }
};

}  // namespace

OrbitReport orbit_experiment(const OrbitParams& params) {
  OrbitReport report;
  NuContext ctx(params.x0, params.quad);
  const auto& dict = dictionary();

  for (double T : params.T_list) {
    if (predicted_pairs(T) > params.max_pair_budget) {
      report.aborted = true;
      break;
    }
    OrbitAccumulator acc;
    std::string csv_path;
    if (!params.out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "orbit_T%g.csv", T);
      csv_path = params.out_dir + "/" + name;
      acc.csv = std::fopen(csv_path.c_str(), "w");
      if (acc.csv) std::fprintf(acc.csv, "z_re,z_im,w1,w2,w3\n");
      acc.csv_cap = params.max_csv_rows;
    }

    std::vector<std::pair<Vec3, double>> cloud;
    if (is_base_point(params.x0)) {
      // the orbit point depends only on the first two rows
      for_each_sl3z_pair(
          T, [&](const std::array<std::int64_t, 3>& r1,
                 const std::array<std::int64_t, 3>& r2, long count) {
            const std::int64_t n[3] = {r1[1] * r2[2] - r1[2] * r2[1],
                                       r1[2] * r2[0] - r1[0] * r2[2],
                                       r1[0] * r2[1] - r1[1] * r2[0]};
            Vec3 cross(double(n[0]), double(n[1]), double(n[2]));
            const double cov = cross.norm();
            const Vec3 w = cross / cov;
            Basis23 b;
            b << double(r1[0]), double(r1[1]), double(r1[2]), double(r2[0]),
                double(r2[1]), double(r2[2]);
            Basis23 flat = (b * rotation_to_e3(w)) / std::sqrt(cov);
            const Mat2 m = flat.leftCols<2>();
            const Complex z = reduce_modular(basis_to_halfplane(m)).z;
            acc.add(z, w, double(count), n);
          });
      cloud.reserve(acc.normals.size());
      for (auto& [k, v] : acc.normals) cloud.push_back(v);
      std::sort(cloud.begin(), cloud.end(),
                [](const auto& a, const auto& b) {
                  if (a.first(0) != b.first(0)) return a.first(0) < b.first(0);
                  if (a.first(1) != b.first(1)) return a.first(1) < b.first(1);
                  return a.first(2) < b.first(2);
                });
    } else {
      for_each_sl3z_mat(T, [&](const Mat3z& g) {
        const PointX23 y = act(params.x0, g.cast<double>());
        const ShapePoint s = shape(y);
        acc.add(s.z, y.w, 1.0, nullptr);
        cloud.emplace_back(y.w, 1.0);
      });
    }
    if (acc.csv) std::fclose(acc.csv);

    OrbitReportRow row;
    row.T = T;
    row.matrix_count = acc.total;
    row.discrepancy =
        cap_discrepancy(cloud, params.cap_count, params.cap_seed);
    for (std::size_t i = 0; i < dict.size(); ++i) {
      row.empirical[dict[i].name] = acc.sums[i] / acc.total;
      const Expectation e = ctx.expectation(dict[i]);
      row.reference[dict[i].name] = e.value;
      row.ref_error[dict[i].name] = e.error;
    }
    report.rows.push_back(std::move(row));
  }

  report.discrepancy_decreasing = report.rows.size() >= 2;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (!(report.rows[i].discrepancy < report.rows[i - 1].discrepancy))
      report.discrepancy_decreasing = false;
  for (const auto& f : dict) {
    bool dec = report.rows.size() >= 2;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      const auto& cur = report.rows[i];
      const auto& prev = report.rows[i - 1];
      const double dc = std::abs(cur.empirical.at(f.name) -
                                 cur.reference.at(f.name));
      const double dp = std::abs(prev.empirical.at(f.name) -
                                 prev.reference.at(f.name));
      if (!(dc <= dp + 1e-12)) dec = false;
    }
    report.deviation_decreasing[f.name] = dec;
  }
  return report;
}

std::string OrbitReport::json() const {
  ordered_json j;
  j["aborted"] = aborted;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["T"] = r.T;
    row["matrix_count"] = r.matrix_count;
    row["cap_discrepancy"] = r.discrepancy;
    for (auto& [k, v] : r.empirical) {
      row["dictionary"][k] = {{"empirical", v},
                              {"reference", r.reference.at(k)},
                              {"reference_error", r.ref_error.at(k)},
                              {"abs_deviation",
                               std::abs(v - r.reference.at(k))}};
    }
    j["rows"].push_back(row);
  }
  j["discrepancy_decreasing"] = discrepancy_decreasing;
  for (auto& [k, v] : deviation_decreasing) j["deviation_decreasing"][k] = v;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Dual experiment

long count_lattice_points(const Mat3& L, double r) {
  const Mat3 gram = L.transpose() * L;
  Eigen::LLT<Mat3> llt(gram);
  const Mat3 U = llt.matrixU();
  const double r2 = r * r;
  long count = 0;
  const double b3 = r / U(2, 2);
  for (long x3 = long(-b3 - 1); x3 <= long(b3 + 1); ++x3) {
    const double t3 = U(2, 2) * x3;
    const double rem3 = r2 - t3 * t3;
    if (rem3 < 0) continue;
    const double c2 = -U(1, 2) * x3 / U(1, 1);
    const double h2 = std::sqrt(rem3) / U(1, 1);
    for (long x2 = long(std::ceil(c2 - h2 - 1e-12));
         x2 <= long(std::floor(c2 + h2 + 1e-12)); ++x2) {
      const double t2 = U(1, 1) * x2 + U(1, 2) * x3;
      const double rem2 = rem3 - t2 * t2;
      if (rem2 < 0) continue;
      const double c1 = -(U(0, 1) * x2 + U(0, 2) * x3) / U(0, 0);
      const double h1 = std::sqrt(rem2) / U(0, 0);
      for (long x1 = long(std::ceil(c1 - h1 - 1e-12));
           x1 <= long(std::floor(c1 + h1 + 1e-12)); ++x1) {
        const double t1 = U(0, 0) * x1 + U(0, 1) * x2 + U(0, 2) * x3;
        if (t1 * t1 + t2 * t2 + t3 * t3 <= r2 &&
            (x1 != 0 || x2 != 0 || x3 != 0))
          ++count;
      }
    }
  }
  return count;
}

double lattice_systole(const Mat3& L) {
  double best = L.col(0).norm();
  for (int i = 1; i < 3; ++i) best = std::min(best, L.col(i).norm());
  // shrink: enumerate within the current best radius until stable
  for (int round = 0; round < 8; ++round) {
    const Mat3 gram = L.transpose() * L;
    Eigen::LLT<Mat3> llt(gram);
    const Mat3 U = llt.matrixU();
    const double r2 = best * best * (1.0 - 1e-12);
    double found = best;
    const double b3 = std::sqrt(r2) / U(2, 2);
    for (long x3 = long(-b3 - 1); x3 <= long(b3 + 1); ++x3) {
      const double t3 = U(2, 2) * x3;
      if (t3 * t3 > r2) continue;
      const double c2 = -U(1, 2) * x3 / U(1, 1);
      const double h2 = std::sqrt(r2 - t3 * t3) / U(1, 1);
      for (long x2 = long(std::ceil(c2 - h2 - 1e-12));
           x2 <= long(std::floor(c2 + h2 + 1e-12)); ++x2) {
        const double t2 = U(1, 1) * x2 + U(1, 2) * x3;
        const double rem2 = r2 - t3 * t3 - t2 * t2;
        if (rem2 < 0) continue;
        const double c1 = -(U(0, 1) * x2 + U(0, 2) * x3) / U(0, 0);
        const double h1 = std::sqrt(rem2) / U(0, 0);
        for (long x1 = long(std::ceil(c1 - h1 - 1e-12));
             x1 <= long(std::floor(c1 + h1 + 1e-12)); ++x1) {
          if (x1 == 0 && x2 == 0 && x3 == 0) continue;
          Eigen::Vector3d x(double(x1), double(x2), double(x3));
          found = std::min(found, (L * x).norm());
        }
      }
    }
    if (found >= best * (1.0 - 1e-12)) break;
    best = found;
  }
  return best;
}

DualReport dual_experiment(const DualParams& params, std::uint64_t seed) {
  DualReport rep;
  rep.T = params.T;
  rep.r_list = params.r_list;
  const auto spec = SkewedBallSpec::make(params.g1, params.g2, params.T);
  HBallSampler sampler(spec);
  Rng rng(seed);
  const std::size_t n = params.samples;
  rep.samples = n;
  const std::size_t nr = params.r_list.size();
  std::vector<double> sum(nr, 0), sum2(nr, 0), zeros(nr, 0);
  std::vector<double> systoles;
  systoles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const HElement h = sampler.sample(rng);
    const Mat2i gi = h.gamma.inverse();
    Mat3 hinv;
    const double s = std::sqrt(h.t);
    hinv << s * double(gi.a), s * double(gi.b), 0,
            s * double(gi.c), s * double(gi.d), 0,
            -h.v(0) / h.t, -h.v(1) / h.t, 1.0 / h.t;
    const Mat3 L = hinv * params.g1;
    for (std::size_t k = 0; k < nr; ++k) {
      const long c = count_lattice_points(L, params.r_list[k]);
      sum[k] += double(c);
      sum2[k] += double(c) * double(c);
      if (c == 0) zeros[k] += 1;
    }
    systoles.push_back(lattice_systole(L));
  }
  for (std::size_t k = 0; k < nr; ++k) {
    const double mean = sum[k] / double(n);
    rep.mean_count.push_back(mean);
    rep.sigma.push_back(std::sqrt(
        std::max(0.0, sum2[k] / double(n) - mean * mean) / double(n)));
    rep.expected.push_back(4.0 / 3.0 * kPi * std::pow(params.r_list[k], 3));
    rep.zero_fraction.push_back(zeros[k] / double(n));
  }
  std::sort(systoles.begin(), systoles.end());
  for (int q = 0; q <= 10; ++q) {
    const std::size_t idx =
        std::min(n - 1, std::size_t(double(q) / 10.0 * double(n)));
    rep.systole.push_back(systoles[idx]);
  }
  // stash the full sorted systoles' zero-radius consistency: fraction of
  // samples with systole > r equals the F_r = 0 fraction by construction,
  // recomputed here as a cross-check value
  return rep;
}

std::string DualReport::json() const {
  ordered_json j;
  j["T"] = T;
  j["samples"] = samples;
  j["radii"] = ordered_json::array();
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    j["radii"].push_back({{"r", r_list[k]},
                          {"mean_count", mean_count[k]},
                          {"sigma", sigma[k]},
                          {"expected", expected[k]},
                          {"zero_fraction", zero_fraction[k]}});
  }
  j["systole_deciles"] = systole;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Ratio experiment

RatioReport ratio_experiment(const std::vector<double>& T_list) {
  RatioReport rep;
  const auto s4 = skewed_series(4.0, Mat2::Identity(), Mat2::Identity(), 200.0);
  rep.s4_mid = s4.bracket().mid();
  const Mat3 e = Mat3::Identity();
  for (double T : T_list) {
    RatioReportRow row;
    row.T = T;
    double count = 0;
    for_each_sl3z_pair(T, [&](const std::array<std::int64_t, 3>&,
                              const std::array<std::int64_t, 3>&, long c) {
      count += double(c);
    });
    row.gamma_count = count;
    const auto bv = ball_volume(SkewedBallSpec::make(e, e, T));
    row.h_volume = bv.bracket();
    row.ratio_mid = row.h_volume.mid() / count;
    const double two_pi3 = 2.0 * kPi * kPi * kPi;
    row.implied_covolume =
        (row.h_volume * (two_pi3 / count)) / s4.bracket();
    row.cross_check =
        count * row.implied_covolume.mid() / std::pow(T, 6.0);
    rep.rows.push_back(row);
  }
  return rep;
}

std::string RatioReport::json() const {
  ordered_json j;
  j["s4_mid"] = s4_mid;
  j["pi4_over_3"] = kPi * kPi * kPi * kPi / 3.0;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"T", r.T},
                         {"gamma_count", r.gamma_count},
                         {"h_volume_lo", r.h_volume.lo},
                         {"h_volume_hi", r.h_volume.hi},
                         {"ratio", r.ratio_mid},
                         {"implied_covolume_lo", r.implied_covolume.lo},
                         {"implied_covolume_hi", r.implied_covolume.hi},
                         {"cross_check", r.cross_check}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Sampler-vs-quadrature comparison

CompareReport compare_experiment(const PointX23& x0, std::size_t samples,
                                 std::uint64_t seed, const QuadParams& quad) {
  CompareReport rep;
  NuContext ctx(x0, quad);
  rep.z_mass = ctx.normalization();
  NuSampler sampler(x0);
  auto draws = sampler.run(seed, samples);
  rep.all_pass = true;
  for (const auto& f : dictionary()) {
    CompareReport::Row row;
    row.name = f.name;
    double s = 0, s2 = 0;
    for (const auto& d : draws) {
      const double v = (f.z_part ? f.z_part(d.z) : 1.0) *
                       (f.w_part ? f.w_part(d.w) : 1.0);
      s += v;
      s2 += v * v;
    }
    row.mc = s / double(samples);
    row.mc_sigma = std::sqrt(
        std::max(0.0, s2 / double(samples) - row.mc * row.mc) /
        double(samples));
    const Expectation e = ctx.expectation(f);
    row.quad = e.value;
    row.quad_err = e.error;
    row.within_3sigma =
        std::abs(row.mc - row.quad) <= 3.0 * (row.mc_sigma + row.quad_err);
    rep.all_pass = rep.all_pass && row.within_3sigma;
    rep.rows.push_back(row);
  }
  return rep;
}

std::string CompareReport::json() const {
  ordered_json j;
  j["z_mass"] = z_mass;
  j["all_pass"] = all_pass;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"name", r.name},
                         {"mc", r.mc},
                         {"mc_sigma", r.mc_sigma},
                         {"quad", r.quad},
                         {"quad_error", r.quad_err},
                         {"within_3sigma", r.within_3sigma}});
  }
  return j.dump(2);
}

}  // namespace latorb
