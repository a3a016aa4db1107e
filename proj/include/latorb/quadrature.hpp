#pragma once

#include <cmath>
#include <cstddef>
#include <vector>
#include <algorithm>

#include "latorb/types.hpp"

namespace latorb {

// Gauss 7 / Kronrod 15 panel. Column layout: node, Gauss weight, Kronrod weight.
namespace detail {
inline constexpr double kGk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};
}  // namespace detail

template <class F>
double gk15_panel(const F& f, double a, double b, double& err, long& evals) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double y0 = f(mid);
  double g = detail::kGk15[0][1] * y0;
  double k = detail::kGk15[0][2] * y0;
  for (int i = 1; i < 8; ++i) {
    const double dx = half * detail::kGk15[i][0];
    const double y = f(mid + dx) + f(mid - dx);
    g += detail::kGk15[i][1] * y;
    k += detail::kGk15[i][2] * y;
  }
  evals += 15;
  g *= half;
  k *= half;
  err = std::pow(200.0 * std::abs(g - k), 1.5);
  return k;
}

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_panels = 4000;
};

struct QuadOutcome {
  double value = 0.0;
  double error = 0.0;
  long evals = 0;
  bool converged = true;
};

// Adaptive bisection on [a,b]; worst panel split first.
template <class F>
QuadOutcome integrate_adaptive(const F& f, double a, double b,
                               QuadOptions opt = {}) {
  struct Panel {
    double a, b, value, error;
  };
  QuadOutcome out;
  double e0 = 0;
  double v0 = gk15_panel(f, a, b, e0, out.evals);
  std::vector<Panel> panels{{a, b, v0, e0}};
  auto total = [&panels]() {
    double v = 0, e = 0;
    for (auto& p : panels) v += p.value, e += p.error;
    return std::pair<double, double>(v, e);
  };
  while (true) {
    auto [v, e] = total();
    if (e <= opt.abs_tol || e <= opt.rel_tol * std::abs(v)) break;
    if ((int)panels.size() >= opt.max_panels) {
      out.converged = false;
      break;
    }
    auto worst = std::max_element(
        panels.begin(), panels.end(),
        [](const Panel& x, const Panel& y) { return x.error < y.error; });
    Panel p = *worst;
    panels.erase(worst);
    double m = 0.5 * (p.a + p.b);
    double e1, e2;
    double v1 = gk15_panel(f, p.a, m, e1, out.evals);
    double v2 = gk15_panel(f, m, p.b, e2, out.evals);
    panels.push_back({p.a, m, v1, e1});
    panels.push_back({m, p.b, v2, e2});
  }
  // Accumulate in a fixed order for determinism.
  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  out.value = 0;
  out.error = 0;
  for (auto& p : panels) out.value += p.value, out.error += p.error;
  return out;
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton on Legendre polynomials.
inline void gauss_legendre(int n, std::vector<double>& x,
                           std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace latorb
