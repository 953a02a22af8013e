#pragma once

// Iterated integrals r_m(s) of exp(i phi) over s in [0, 1] (t = T s).
// r_0' = exp(i phi), r_m' = r_{m-1}, r_m(0) = 0.

#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "flatpulse/numeric.hpp"
#include "flatpulse/phase.hpp"

namespace flatpulse {

inline constexpr int kDefaultCurveSamples = 2049;
inline constexpr int kCurvePanelNodes = 16;

struct CurveHierarchy {
  std::vector<double> s_grid;
  /// curves[m][i] = r_m(s_grid[i]).
  std::vector<std::vector<std::complex<double>>> curves;
  std::vector<double> closure_defects;
};

/// Each panel is advanced exactly: r_m(s+h) = sum_{j<=m} r_{m-j}(s) h^j/j!
/// + int_0^h (h-u)^m/m! exp(i phi(s+u)) du, the remainder by Gauss-Legendre.
/// The recursion never differentiates, so the only error is the panel rule.
inline CurveHierarchy r_sequence(const PhasePolynomial<double>& poly, int k,
                                 int n_s = kDefaultCurveSamples) {
  if (k < 0) throw std::invalid_argument("suppression order k must be >= 0");
  if (n_s < 65 || n_s % 2 == 0) throw std::invalid_argument("n_s must be odd and >= 65");
  using cd = std::complex<double>;
  const int levels = std::max(k, 1);
  CurveHierarchy h;
  h.s_grid.resize(n_s);
  for (int i = 0; i < n_s; ++i) h.s_grid[i] = static_cast<double>(i) / (n_s - 1);
  h.s_grid.back() = 1.0;
  h.curves.assign(levels, std::vector<cd>(n_s, cd(0.0, 0.0)));

  const auto& rule = gauss_legendre<double>(kCurvePanelNodes);
  std::vector<cd> state(levels, cd(0.0, 0.0)), next(levels);
  std::vector<double> pw(levels + 1);
  std::vector<double> inv_fact(levels + 1, 1.0);
  for (int j = 1; j <= levels; ++j) inv_fact[j] = inv_fact[j - 1] / j;

  for (int i = 0; i + 1 < n_s; ++i) {
    const double s0 = h.s_grid[i];
    const double step = h.s_grid[i + 1] - s0;
    pw[0] = 1.0;
    for (int j = 1; j <= levels; ++j) pw[j] = pw[j - 1] * step;
    std::vector<cd> rem(levels, cd(0.0, 0.0));
    for (int q = 0; q < kCurvePanelNodes; ++q) {
      const double u = 0.5 * step * (rule.nodes[q] + 1.0);
      const double w = 0.5 * step * rule.weights[q];
      const double x = 2.0 * (s0 + u) - 1.0;
      const double ph = poly.phi_unchecked(x);
      const cd e(std::cos(ph), std::sin(ph));
      double kern = w;
      const double lever = step - u;
      for (int m = 0; m < levels; ++m) {
        rem[m] += kern * inv_fact[m] * e;
        kern *= lever;
      }
    }
    for (int m = 0; m < levels; ++m) {
      cd acc = rem[m];
      for (int j = 0; j <= m; ++j) acc += state[m - j] * (pw[j] * inv_fact[j]);
      next[m] = acc;
    }
    state.swap(next);
    for (int m = 0; m < levels; ++m) h.curves[m][i + 1] = state[m];
  }
  if (k == 0) h.curves.clear();
  for (const auto& c : h.curves) h.closure_defects.push_back(std::abs(c.back()));
  return h;
}

inline std::vector<double> closure_defects(const CurveHierarchy& h) { return h.closure_defects; }

/// phi(1) - phi(-1) reduced to [0, 2 pi).
inline double cusp_tangent_jump(const CurveHierarchy&, const PhasePolynomial<double>& poly) {
  const double two_pi = 2.0 * pi<double>();
  double d = std::fmod(poly.phi_unchecked(1.0) - poly.phi_unchecked(-1.0), two_pi);
  if (d < 0) d += two_pi;
  if (two_pi - d < 1e-12) d = 0.0;
  return d;
}

/// Shoelace area enclosed by r_0, a diagnostic of the quasi-static
/// second-order term.
inline double curve_area(const CurveHierarchy& h) {
  if (h.curves.empty()) return 0.0;
  const auto& c = h.curves[0];
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) a += c[i].real() * c[i + 1].imag() - c[i + 1].real() * c[i].imag();
  a += c.back().real() * c.front().imag() - c.front().real() * c.back().imag();
  return 0.5 * a;
}

/// CSV rows `s,m,re,im`.
inline void write_curves_csv(std::ostream& os, const CurveHierarchy& h) {
  os << "s,m,re,im\n";
  os << std::setprecision(17);
  for (std::size_t m = 0; m < h.curves.size(); ++m)
    for (std::size_t i = 0; i < h.s_grid.size(); ++i)
      os << h.s_grid[i] << ',' << m << ',' << h.curves[m][i].real() << ',' << h.curves[m][i].imag() << '\n';
}

}  // namespace flatpulse
