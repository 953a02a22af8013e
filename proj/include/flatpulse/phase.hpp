#pragma once

// Odd phase polynomials over scaled time x = 2t/T - 1 and the control
// field they induce, Omega(t) = dphi/dt.

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "flatpulse/numeric.hpp"

namespace flatpulse {

/// phi(x) = sum_j c_j x^(2j+1), j = 0..N-1. The coefficient of x^(2j+1) is
/// stored at index j.
template <class Real = double>
class PhasePolynomial {
 public:
  PhasePolynomial() : coeffs_(1, Real(0)) {}
  explicit PhasePolynomial(std::vector<Real> coeffs) : coeffs_(std::move(coeffs)) {
    using std::isfinite;
    if (coeffs_.empty()) throw std::invalid_argument("PhasePolynomial needs at least one coefficient");
    for (const auto& c : coeffs_)
      if (!isfinite(c)) throw std::invalid_argument("PhasePolynomial coefficients must be finite");
  }

  std::size_t size() const { return coeffs_.size(); }
  const std::vector<Real>& coeffs() const { return coeffs_; }
  const Real& operator[](std::size_t j) const { return coeffs_[j]; }

  /// phi(x) without domain checks; x * P(x^2) evaluated by Horner in x^2.
  Real phi_unchecked(const Real& x) const {
    const Real u = x * x;
    Real acc(0);
    for (std::size_t j = coeffs_.size(); j-- > 0;) acc = acc * u + coeffs_[j];
    return acc * x;
  }

  /// dphi/dx, an even polynomial in x.
  Real dphi_unchecked(const Real& x) const {
    const Real u = x * x;
    Real acc(0);
    for (std::size_t j = coeffs_.size(); j-- > 0;) acc = acc * u + Real(2 * j + 1) * coeffs_[j];
    return acc;
  }

  /// d^2 phi / dx^2, odd in x.
  Real d2phi_unchecked(const Real& x) const {
    const Real u = x * x;
    Real acc(0);
    for (std::size_t j = coeffs_.size(); j-- > 1;)
      acc = acc * u + Real((2 * j + 1) * (2 * j)) * coeffs_[j];
    return acc * x;
  }

  template <class Other>
  PhasePolynomial<Other> cast() const {
    std::vector<Other> out;
    out.reserve(coeffs_.size());
    for (const auto& c : coeffs_) out.push_back(static_cast<Other>(c));
    return PhasePolynomial<Other>(std::move(out));
  }

 private:
  std::vector<Real> coeffs_;
};

/// Rotation angle about the control axis, suppression order and duration.
struct GateTarget {
  double theta = 0.0;
  int k = 0;
  double T = 1.0;

  void validate() const {
    if (k < 0) throw std::invalid_argument("suppression order k must be >= 0");
    if (!(T > 0) || !std::isfinite(T)) throw std::invalid_argument("gate duration T must be > 0");
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
  }
};

/// Control amplitudes sampled on a uniform grid over [0, T].
struct PulseWaveform {
  std::vector<double> times;
  std::vector<double> amplitudes;
  double T = 0.0;
  /// Source polynomial, kept so slopes can be taken analytically.
  PhasePolynomial<double> poly;
};

namespace detail {
inline void check_scaled(double x) {
  if (!(std::abs(x) <= 1.0 + 1e-12)) throw std::domain_error("scaled time x must lie in [-1, 1]");
}
inline double scaled_time(double t, double T) {
  if (!(T > 0)) throw std::domain_error("duration T must be positive");
  if (!(t >= 0.0 && t <= T)) throw std::domain_error("time t must lie in [0, T]");
  return 2.0 * t / T - 1.0;
}
}  // namespace detail

template <class Real>
Real eval_phi(const PhasePolynomial<Real>& poly, const Real& x) {
  detail::check_scaled(to_double(x));
  return poly.phi_unchecked(x);
}

template <class Real>
Real eval_omega(const PhasePolynomial<Real>& poly, const Real& t, const Real& T) {
  detail::scaled_time(to_double(t), to_double(T));
  const Real xs = 2 * t / T - 1;
  return 2 / T * poly.dphi_unchecked(xs);
}

/// (G_{k+1}, G_{k+2}): phi(1) - theta/2 and dphi/dx at x = 1.
template <class Real>
std::pair<Real, Real> boundary_residuals(const PhasePolynomial<Real>& poly, const Real& theta) {
  Real sum(0), weighted(0);
  for (std::size_t j = 0; j < poly.size(); ++j) {
    sum += poly[j];
    weighted += Real(2 * j + 1) * poly[j];
  }
  return {sum - theta / 2, weighted};
}

inline constexpr int kDefaultWaveformSamples = 1025;

inline PulseWaveform sample_waveform(const PhasePolynomial<double>& poly, double T,
                                     int n_t = kDefaultWaveformSamples) {
  if (n_t < 2) throw std::invalid_argument("waveform needs at least 2 samples");
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  PulseWaveform w;
  w.T = T;
  w.poly = poly;
  w.times.resize(n_t);
  w.amplitudes.resize(n_t);
  for (int i = 0; i < n_t; ++i) {
    // Endpoints exact; x from the index keeps the grid symmetric.
    const double x = -1.0 + 2.0 * i / (n_t - 1);
    w.times[i] = (i == n_t - 1) ? T : T * (x + 1.0) / 2.0;
    w.amplitudes[i] = 2.0 / T * poly.dphi_unchecked(x);
  }
  return w;
}

inline constexpr int kSlopeGridPoints = 4097;

/// Maximum |dOmega/dt| = (2/T)^2 |phi''(x)|, scanned on a 4097-point grid
/// plus both endpoints, with a golden-section polish around the best sample.
inline double max_slope(const PulseWaveform& w) {
  if (w.times.size() < 2) throw std::invalid_argument("waveform needs at least 2 samples");
  const auto& poly = w.poly;
  auto g = [&](double x) { return std::abs(poly.d2phi_unchecked(x)); };
  int best_i = 0;
  double best = -1.0;
  const int n = kSlopeGridPoints;
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * i / (n - 1);
    const double v = g(x);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const double h = 2.0 / (n - 1);
  double a = std::max(-1.0, -1.0 + h * (best_i - 1));
  double b = std::min(1.0, -1.0 + h * (best_i + 1));
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double c = b - r * (b - a);
    const double d = a + r * (b - a);
    if (g(c) > g(d)) b = d;
    else a = c;
  }
  best = std::max({best, g(0.5 * (a + b)), g(-1.0), g(1.0)});
  const double scale = 2.0 / w.T;
  return scale * scale * best;
}

/// CSV with header `t,omega`, 17 significant digits.
inline void write_waveform_csv(std::ostream& os, const PulseWaveform& w) {
  os << "t,omega\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < w.times.size(); ++i) os << w.times[i] << ',' << w.amplitudes[i] << '\n';
}

}  // namespace flatpulse
