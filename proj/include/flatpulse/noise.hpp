#pragma once

// Noise sources: a finite random quantum bath built from GUE draws and a
// composite random-telegraph process with a 1/f band.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "flatpulse/numeric.hpp"

namespace flatpulse {

/// splitmix64 finalizer; derives independent stream seeds from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using MatrixXcd = Eigen::MatrixXcd;

/// GUE draw: real N(0,1) diagonal, off-diagonal real and imaginary parts
/// N(0,1/2) each. Divided by sqrt(m) the spectrum fills [-2, 2].
inline MatrixXcd sample_gue(int m, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("GUE dimension must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = std::sqrt(0.5);
  MatrixXcd w(m, m);
  for (int i = 0; i < m; ++i) {
    w(i, i) = normal(rng);
    for (int j = i + 1; j < m; ++j) {
      const double re = s * normal(rng), im = s * normal(rng);
      w(i, j) = {re, im};
      w(j, i) = {re, -im};
    }
  }
  return w;
}

struct BathInstance {
  int m = 0;
  double omega_B = 1.0;
  double beta = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  MatrixXcd B;
  MatrixXcd H_B;
  Eigen::VectorXd bath_eigvals;
  MatrixXcd bath_eigvecs;
  /// B in the H_B eigenbasis.
  MatrixXcd B_eig;
  /// Thermal populations in the H_B eigenbasis.
  Eigen::VectorXd populations;

  MatrixXcd rho_B() const { return bath_eigvecs * populations.cast<std::complex<double>>().asDiagonal() * bath_eigvecs.adjoint(); }
};

inline BathInstance build_bath(int m, double omega_B, double beta, double lambda, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("bath dimension must be >= 2");
  if (!(omega_B > 0)) throw std::invalid_argument("omega_B must be > 0");
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  BathInstance b;
  b.m = m;
  b.omega_B = omega_B;
  b.beta = beta;
  b.lambda = lambda;
  b.seed = seed;
  const double inv = 1.0 / std::sqrt(static_cast<double>(m));
  b.B = sample_gue(m, derive_seed(seed, 0)) * inv;
  b.H_B = sample_gue(m, derive_seed(seed, 1)) * (omega_B * inv);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(b.H_B);
  b.bath_eigvals = es.eigenvalues();
  b.bath_eigvecs = es.eigenvectors();
  b.B_eig = b.bath_eigvecs.adjoint() * b.B * b.bath_eigvecs;
  b.populations.resize(m);
  const double e0 = b.bath_eigvals.minCoeff();
  for (int i = 0; i < m; ++i) b.populations[i] = std::exp(-beta * omega_B * (b.bath_eigvals[i] / omega_B - e0 / omega_B));
  b.populations /= b.populations.sum();
  return b;
}

/// Semicircle density on [-2, 2].
inline double semicircle(double u) {
  const double r = 4.0 - u * u;
  return r > 0 ? std::sqrt(r) / (2.0 * pi<double>()) : 0.0;
}

namespace detail {

/// int_lo^hi g(u) du with u = mid + half cos(t); the square-root edges of
/// the semicircle factors cancel against sin(t), leaving a smooth integrand.
template <class G>
double edge_smoothed_integral(G g, double lo, double hi, double rel_tol = 1e-10) {
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  if (half <= 0) return 0.0;
  auto sweep = [&](int n) {
    const auto& rule = gauss_legendre<double>(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = 0.5 * pi<double>() * (rule.nodes[i] + 1.0);
      acc += rule.weights[i] * g(mid + half * std::cos(t)) * std::sin(t);
    }
    return acc * 0.5 * pi<double>() * half;
  };
  int n = 32;
  double prev = sweep(n);
  for (int d = 0; d < 8; ++d) {
    n *= 2;
    const double next = sweep(n);
    if (std::abs(next - prev) <= rel_tol * std::abs(next)) return next;
    prev = next;
  }
  return prev;
}

}  // namespace detail

inline double vrqb_partition(double omega_B, double beta) {
  if (beta == 0.0) return 1.0;
  return detail::edge_smoothed_integral([&](double u) { return semicircle(u) * std::exp(-beta * omega_B * u); }, -2.0, 2.0);
}

/// S(w) = (2 pi l^2 / Z w_B) int p(u) p(u - w/w_B) exp(-beta w_B u) du.
inline double vrqb_spectrum(double omega, double lambda, double omega_B, double beta) {
  if (!(omega_B > 0)) throw std::invalid_argument("omega_B must be > 0");
  const double v = omega / omega_B;
  if (std::abs(v) >= 4.0) return 0.0;
  const double lo = std::max(-2.0, v - 2.0), hi = std::min(2.0, v + 2.0);
  auto integrand = [&](double u) { return semicircle(u) * semicircle(u - v) * std::exp(-beta * omega_B * u); };
  const double I = detail::edge_smoothed_integral(integrand, lo, hi);
  return 2.0 * pi<double>() * lambda * lambda * I / (vrqb_partition(omega_B, beta) * omega_B);
}

struct EmpiricalSpectrum {
  std::vector<double> t;
  std::vector<std::complex<double>> C;
  std::vector<double> omega;
  std::vector<double> S;
};

/// C(t) = l^2 sum_kl rho_k |B_kl|^2 exp(i (E_k - E_l) t) on t = 0..t_max, then
/// S(w) = int C(t) w_H(t) exp(-i w t) dt over [-t_max, t_max] with the Hann
/// window w_H(t) = cos^2(pi t / (2 t_max)), w_H(0) = 1.
inline EmpiricalSpectrum empirical_bath_spectrum(const BathInstance& bath, double t_max, double dt,
                                                 const std::vector<double>& omegas) {
  if (!(t_max >= 20.0 / bath.omega_B - 1e-12)) throw std::invalid_argument("time grid must span at least 20/omega_B");
  if (!(dt > 0 && dt <= 0.05 / bath.omega_B + 1e-15)) throw std::invalid_argument("time step must be <= 0.05/omega_B");
  const int m = bath.m;
  const int n = static_cast<int>(std::llround(t_max / dt));
  std::vector<double> weight;
  std::vector<double> freq;
  weight.reserve(static_cast<std::size_t>(m) * m);
  freq.reserve(static_cast<std::size_t>(m) * m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      weight.push_back(bath.populations[k] * std::norm(bath.B_eig(k, l)));
      freq.push_back(bath.bath_eigvals[k] - bath.bath_eigvals[l]);
    }
  const double l2 = bath.lambda * bath.lambda;
  EmpiricalSpectrum out;
  out.t.resize(n + 1);
  out.C.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = i * dt;
    double re = 0, im = 0;
    for (std::size_t q = 0; q < weight.size(); ++q) {
      re += weight[q] * std::cos(freq[q] * t);
      im += weight[q] * std::sin(freq[q] * t);
    }
    out.t[i] = t;
    out.C[i] = {l2 * re, l2 * im};
  }
  out.omega = omegas;
  for (double w : omegas) {
    double acc = out.C[0].real();
    for (int i = 1; i <= n; ++i) {
      const double c = std::cos(pi<double>() * out.t[i] / (2.0 * t_max));
      acc += 2.0 * c * c * std::real(out.C[i] * std::exp(std::complex<double>(0.0, -w * out.t[i])));
    }
    out.S.push_back(acc * dt);
  }
  return out;
}

/// S(w) = (2 l^2 C^2 / w)[atan(2 nu_b / w) - atan(2 nu_a / w)], C^2 = 1/ln(nu_b/nu_a),
/// written as one arctangent so w -> 0 reaches l^2 C^2 (nu_b - nu_a)/(nu_a nu_b).
inline double rtn_spectrum(double omega, double lambda, double nu_a, double nu_b) {
  if (!(nu_a > 0 && nu_b > nu_a)) throw std::invalid_argument("need 0 < nu_a < nu_b");
  const double c2 = 1.0 / std::log(nu_b / nu_a);
  const double w = std::abs(omega);
  const double slope = 2.0 * (nu_b - nu_a) / (w * w + 4.0 * nu_a * nu_b);
  const double z = w * slope;
  const double ratio = z < 1e-8 ? 1.0 - z * z / 3.0 : std::atan(z) / z;
  return 2.0 * lambda * lambda * c2 * slope * ratio;
}

enum class SpectrumKind { VRQB, RTN, StaticDelta };

/// Analytic spectrum by kind. StaticDelta stands for S(w) = 2 pi weight delta(w).
struct SpectrumModel {
  SpectrumKind kind = SpectrumKind::VRQB;
  double lambda = 0.0;
  double omega_B = 1.0;
  double beta = 0.0;
  double nu_a = 0.01;
  double nu_b = 1.0;
  double weight = 0.0;

  double operator()(double omega) const {
    switch (kind) {
      case SpectrumKind::VRQB: return vrqb_spectrum(omega, lambda, omega_B, beta);
      case SpectrumKind::RTN: return rtn_spectrum(omega, lambda, nu_a, nu_b);
      case SpectrumKind::StaticDelta: return 0.0;
    }
    return 0.0;
  }
};

inline constexpr int kDefaultRtnComponents = 20;

struct RTNTrajectory {
  double dt = 0.0;
  std::vector<double> samples;
  std::vector<double> component_frequencies;
  std::vector<double> weights;
  std::uint64_t seed = 0;
};

/// Log-spaced bins over [nu_a, nu_b]; nu_i the geometric bin centre and
/// w_i proportional to sqrt(dnu_i / nu_i), normalized to sum w_i^2 = 1.
inline void rtn_components(double nu_a, double nu_b, int n, std::vector<double>& freqs, std::vector<double>& weights) {
  if (!(nu_a > 0 && nu_b > nu_a)) throw std::invalid_argument("need 0 < nu_a < nu_b");
  if (n < 10) throw std::invalid_argument("need at least 10 telegraph components");
  freqs.clear();
  weights.clear();
  const double r = std::log(nu_b / nu_a);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e0 = nu_a * std::exp(r * i / n), e1 = nu_a * std::exp(r * (i + 1) / n);
    const double nu = std::sqrt(e0 * e1);
    freqs.push_back(nu);
    weights.push_back(std::sqrt((e1 - e0) / nu));
    total += (e1 - e0) / nu;
  }
  for (auto& w : weights) w /= std::sqrt(total);
}

/// One +-1 telegraph signal on n samples spaced dt, flipping at Poisson rate nu.
/// Returned as the grid indices at which the sign changes and the start sign.
template <class Rng>
std::vector<std::size_t> telegraph_flips(double nu, std::size_t n, double dt, Rng& rng, int& start) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::exponential_distribution<double> wait(nu);
  start = coin(rng) ? 1 : -1;
  std::vector<std::size_t> flips;
  const double horizon = dt * static_cast<double>(n - 1);
  for (double t = wait(rng); t <= horizon; t += wait(rng)) flips.push_back(static_cast<std::size_t>(std::ceil(t / dt)));
  return flips;
}

/// Telegraph samples in {+1, -1} expanded from the flip list.
inline std::vector<int> expand_telegraph(const std::vector<std::size_t>& flips, int start, std::size_t n) {
  std::vector<int> v(n);
  int s = start;
  std::size_t f = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (f < flips.size() && flips[f] <= i) {
      s = -s;
      ++f;
    }
    v[i] = s;
  }
  return v;
}

inline RTNTrajectory sample_rtn_trajectory(double nu_a, double nu_b, int n_components, double T, double dt,
                                           std::uint64_t seed) {
  if (!(dt > 0) || dt > 0.01 / nu_b * (1 + 1e-12)) throw std::invalid_argument("time step must be <= 0.01/nu_b");
  if (!(T > 0)) throw std::invalid_argument("duration must be > 0");
  RTNTrajectory tr;
  tr.dt = dt;
  tr.seed = seed;
  rtn_components(nu_a, nu_b, n_components, tr.component_frequencies, tr.weights);
  const std::size_t n = static_cast<std::size_t>(std::floor(T / dt + 1e-9)) + 1;
  std::vector<double> diff(n + 1, 0.0);
  std::mt19937_64 rng(seed);
  for (int c = 0; c < n_components; ++c) {
    int s = 1;
    const auto flips = telegraph_flips(tr.component_frequencies[c], n, dt, rng, s);
    const double w = tr.weights[c];
    diff[0] += w * s;
    for (std::size_t idx : flips) {
      diff[idx] -= 2.0 * w * s;
      s = -s;
    }
  }
  tr.samples.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += diff[i];
    tr.samples[i] = acc;
  }
  return tr;
}

struct Periodogram {
  std::vector<double> omega;
  std::vector<double> S;
};

/// Hann-windowed periodogram averaged over trajectories, one-sided in omega
/// but normalized to the two-sided density S(w) (unit lambda).
inline Periodogram rtn_periodogram(double nu_a, double nu_b, int n_components, std::size_t n_samples, double dt,
                                   int n_traj, std::uint64_t seed) {
  if (n_samples < 16 || (n_samples & (n_samples - 1))) throw std::invalid_argument("sample count must be a power of two");
  const double T = dt * static_cast<double>(n_samples - 1);
  std::vector<double> win(n_samples);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double s = std::sin(pi<double>() * static_cast<double>(i) / static_cast<double>(n_samples));
    win[i] = s * s;
    wsum += win[i] * win[i];
  }
  Eigen::FFT<double> fft;
  std::vector<double> frame(n_samples);
  std::vector<std::complex<double>> spec;
  std::vector<double> acc(n_samples / 2 + 1, 0.0);
  for (int r = 0; r < n_traj; ++r) {
    const auto tr = sample_rtn_trajectory(nu_a, nu_b, n_components, T, dt, derive_seed(seed, static_cast<std::uint64_t>(r)));
    for (std::size_t i = 0; i < n_samples; ++i) frame[i] = tr.samples[i] * win[i];
    fft.fwd(spec, frame);
    for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += std::norm(spec[q]);
  }
  Periodogram p;
  const double norm = dt / (wsum * n_traj);
  for (std::size_t q = 1; q < acc.size(); ++q) {
    p.omega.push_back(2.0 * pi<double>() * static_cast<double>(q) / (dt * static_cast<double>(n_samples)));
    p.S.push_back(acc[q] * norm);
  }
  return p;
}

}  // namespace flatpulse
