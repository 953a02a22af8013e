#pragma once

// f(w, T) = int_0^T exp(i[phi(t) - w t]) dt and the symmetric filter
// F(w, T) = |f(w)|^2 + |f(-w)|^2, for smooth polynomial phases and for
// ideal decoupling sequences.

#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "flatpulse/constraints.hpp"
#include "flatpulse/numeric.hpp"
#include "flatpulse/phase.hpp"

namespace flatpulse {

/// Smooth phase on [0, T]: phi(t) = poly(2t/T - 1), read through u = t/T.
template <class Real = double>
struct SmoothPhase {
  PhasePolynomial<Real> poly;

  Real at(const Real& u) const { return poly.phi_unchecked(2 * u - 1); }
  std::vector<Real> breaks() const { return {}; }
  Real scale() const {
    using std::abs;
    Real s(0);
    for (const auto& c : poly.coeffs()) s += abs(c);
    return s;
  }
};

/// Instantaneous pi flips at fractions u_j of the gate; phi alternates 0, pi.
struct DDSequence {
  int n = 0;
  std::vector<double> switch_times;

  template <class Real = double>
  Real at(const Real& u) const {
    int flips = 0;
    for (double t : switch_times)
      if (u >= Real(t)) ++flips;
    return flips % 2 ? pi<Real>() : Real(0);
  }
  template <class Real = double>
  std::vector<Real> breaks() const {
    return std::vector<Real>(switch_times.begin(), switch_times.end());
  }
  /// +1 / -1 on each of the n+1 segments.
  int sign_on_segment(std::size_t j) const { return j % 2 ? -1 : 1; }
};

/// Uhrig timing u_j = sin^2(j pi / (2n + 2)), j = 1..n.
inline DDSequence udd_sequence(int n) {
  if (n < 1) throw std::invalid_argument("UDD needs n >= 1");
  DDSequence d;
  d.n = n;
  for (int j = 1; j <= n; ++j) {
    const double s = std::sin(j * pi<double>() / (2.0 * n + 2.0));
    d.switch_times.push_back(s * s);
  }
  return d;
}

template <class Real>
Real filter_tolerance() {
  if constexpr (std::is_same_v<Real, double>) return Real(1e-10);
  else return moment_tolerance<Real>();
}

inline constexpr int kFilterStartNodes = 64;
inline constexpr int kFilterMaxDoublings = 9;

namespace detail {

template <class Real, class Phase>
Cplx<Real> f_segment_fixed(const Phase& phase, const Real& a, const Real& b, const Real& wT, int n) {
  const auto& rule = gauss_legendre<Real>(n);
  const Real half = (b - a) / 2, mid = (a + b) / 2;
  Cplx<Real> acc;
  for (int i = 0; i < n; ++i) {
    const Real u = mid + half * rule.nodes[i];
    acc += Cplx<Real>::polar_unit(phase(u) - wT * u) * rule.weights[i];
  }
  return acc * half;
}

}  // namespace detail

/// f / T by Gauss-Legendre on each smooth segment of [0, 1], doubling the
/// node count until the change is below tol |f| plus the rounding floor.
template <class Real, class Provider>
Cplx<Real> f_adaptive_scaled(const Provider& provider, const Real& wT) {
  using std::abs;
  std::vector<Real> cuts{Real(0)};
  for (const auto& b : provider.template breaks<Real>()) cuts.push_back(b);
  cuts.push_back(Real(1));
  auto phase = [&](const Real& u) { return provider.template at<Real>(u); };
  Real mass(1);
  if constexpr (requires { provider.scale(); }) mass = Real(provider.scale());
  const Real floor = 16 * unit_roundoff<Real>() * (mass + abs(wT) + 1);
  const Real tol = filter_tolerance<Real>();
  Cplx<Real> total;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    int n = kFilterStartNodes;
    auto prev = detail::f_segment_fixed(phase, cuts[s], cuts[s + 1], wT, n);
    bool ok = false;
    Real change(0);
    for (int d = 0; d < kFilterMaxDoublings; ++d) {
      n *= 2;
      auto next = detail::f_segment_fixed(phase, cuts[s], cuts[s + 1], wT, n);
      change = (next - prev).abs();
      prev = next;
      if (change <= tol * prev.abs() + floor) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "filter quadrature did not converge at wT=" << to_double(wT) << ": change "
          << to_double(change) << " after " << n << " nodes";
      throw QuadratureError(msg.str());
    }
    total += prev;
  }
  return total;
}

/// Adapter so a SmoothPhase exposes the same template interface as DDSequence.
template <class Real>
struct SmoothAdapter {
  const SmoothPhase<Real>& s;
  template <class R>
  R at(const R& u) const { return s.at(u); }
  template <class R>
  std::vector<R> breaks() const { return {}; }
  Real scale() const { return s.scale(); }
};

template <class Real>
Cplx<Real> f_scaled(const SmoothPhase<Real>& p, const Real& wT) {
  return f_adaptive_scaled<Real>(SmoothAdapter<Real>{p}, wT);
}

/// Closed form per constant segment, written as
/// exp(-i w (a+b)/2) (b - a) sinc(w (b - a)/2) so small w T loses nothing.
template <class Real>
Cplx<Real> f_scaled(const DDSequence& d, const Real& wT) {
  using std::sin;
  std::vector<Real> cuts{Real(0)};
  for (double t : d.switch_times) cuts.emplace_back(t);
  cuts.emplace_back(1);
  Cplx<Real> total;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const Real len = cuts[j + 1] - cuts[j];
    const Real arg = wT * len / 2;
    const Real sinc = arg == 0 ? Real(1) : Real(sin(arg) / arg);
    auto seg = Cplx<Real>::polar_unit(-wT * (cuts[j] + cuts[j + 1]) / 2) * (len * sinc);
    if (d.sign_on_segment(j) < 0) seg = seg * Real(-1);
    total += seg;
  }
  return total;
}

/// f(w, T); `T` and `omega` in matching units.
template <class Real, class Provider>
std::complex<double> f_transform(const Provider& p, double T, double omega) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  return (f_scaled<Real>(p, Real(omega * T)) * Real(T)).to_std();
}

/// F(w, T) / T^2 at w T = `wT`, accumulated in Real.
template <class Real, class Provider>
Real filter_scaled(const Provider& p, const Real& wT) {
  return f_scaled<Real>(p, wT).norm() + f_scaled<Real>(p, Real(-wT)).norm();
}

template <class Real, class Provider>
double filter_F(const Provider& p, double T, double omega) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  return to_double(filter_scaled<Real>(p, Real(omega * T))) * T * T;
}

struct FilterSamples {
  std::vector<double> omega_T;
  std::vector<double> values;
};

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0 && hi > lo) || n < 2) throw std::invalid_argument("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline constexpr double kFilterGridLo = 1e-2;
inline constexpr double kFilterGridHi = 1e2;
inline constexpr int kFilterGridPoints = 200;

template <class Real, class Provider>
FilterSamples filter_samples(const Provider& p, const std::vector<double>& omega_T) {
  FilterSamples s;
  s.omega_T = omega_T;
  s.values.reserve(omega_T.size());
  for (double w : omega_T) s.values.push_back(to_double(filter_scaled<Real>(p, Real(w))));
  return s;
}

inline constexpr double kSlopeWindowLo = 0.1;
inline constexpr double kSlopeWindowHi = 1.0;

/// Least-squares slope of log10 F against log10 wT inside [lo, hi].
inline double slope_fit(const FilterSamples& s, double lo = kSlopeWindowLo, double hi = kSlopeWindowHi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < s.omega_T.size(); ++i) {
    const double w = s.omega_T[i];
    if (w < lo || w > hi) continue;
    if (!(s.values[i] > 0)) throw std::domain_error("slope fit needs positive filter values in the window");
    const double x = std::log10(w), y = std::log10(s.values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 8) throw std::invalid_argument("slope fit needs at least 8 samples in the window");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// CSV `omegaT,F_over_T2`.
inline void write_filter_csv(std::ostream& os, const FilterSamples& s) {
  os << "omegaT,F_over_T2\n" << std::setprecision(17);
  for (std::size_t i = 0; i < s.omega_T.size(); ++i) os << s.omega_T[i] << ',' << s.values[i] << '\n';
}

}  // namespace flatpulse
