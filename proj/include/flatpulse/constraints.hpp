#pragma once

// Error-cancellation constraints for order-k filter flattening and the
// damped Newton iteration that solves them.
//
// The moments eta_l = int_{-1}^{1} x^l exp(i phi(x)) dx carry everything:
// G_l = i^(l-1) eta_(l-1) for 1 <= l <= k, and since
// d eta_l / d c_j = i eta_(l + 2j + 1) the Jacobian reuses the same sweep.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flatpulse/numeric.hpp"
#include "flatpulse/phase.hpp"

namespace flatpulse {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultQuadNodes = 64;
inline constexpr int kMaxQuadDoublings = 6;

/// Convergence tolerance of the moment quadrature for a working precision.
template <class Real>
Real moment_tolerance() {
  if constexpr (std::is_same_v<Real, double>) {
    return Real(1e-14);
  } else {
    using std::pow;
    const int digits = std::numeric_limits<Real>::digits10;
    return pow(Real(10), -(digits - 4));
  }
}

/// Moments eta_0..eta_max_ell together with the node count that produced them.
template <class Real>
struct MomentSweep {
  std::vector<Cplx<Real>> eta;
  int nodes = 0;
};

namespace detail {

template <class Real>
std::vector<Cplx<Real>> moments_fixed(const PhasePolynomial<Real>& poly, int max_ell, int n,
                                      Real* max_phase = nullptr) {
  using std::abs;
  const auto& rule = gauss_legendre<Real>(n);
  std::vector<Cplx<Real>> eta(max_ell + 1);
  Real peak(0);
  for (int i = 0; i < n; ++i) {
    const Real& x = rule.nodes[i];
    const Real phase = poly.phi_unchecked(x);
    peak = std::max(peak, Real(abs(phase)));
    Cplx<Real> term = Cplx<Real>::polar_unit(phase) * rule.weights[i];
    for (int l = 0; l <= max_ell; ++l) {
      eta[l] += term;
      term *= x;
    }
  }
  if (max_phase) *max_phase = peak;
  return eta;
}

}  // namespace detail

/// eta_0..eta_max_ell by Gauss-Legendre, doubling the node count until two
/// successive sweeps agree to `moment_tolerance` relative to (1 + |eta|).
/// The tolerance is raised to the rounding floor 16 u max(max|phi|, sum|c_j|)
/// since the phase cannot be evaluated more accurately than that.
template <class Real>
MomentSweep<Real> eta_moments(const PhasePolynomial<Real>& poly, int max_ell,
                              int quad_nodes = kDefaultQuadNodes) {
  using std::abs;
  if (max_ell < 0) throw std::invalid_argument("moment index must be >= 0");
  if (quad_nodes < 2) throw std::invalid_argument("quad_nodes must be >= 2");
  int n = quad_nodes;
  Real peak(0);
  auto prev = detail::moments_fixed(poly, max_ell, n, &peak);
  Real coeff_mass(0);
  for (const auto& c : poly.coeffs()) coeff_mass += abs(c);
  const Real tol =
      std::max(moment_tolerance<Real>(), Real(16 * unit_roundoff<Real>() * std::max(peak, coeff_mass)));
  Real worst(0);
  for (int d = 0; d < kMaxQuadDoublings; ++d) {
    n *= 2;
    auto next = detail::moments_fixed(poly, max_ell, n);
    worst = Real(0);
    for (int l = 0; l <= max_ell; ++l) {
      const Real diff = (next[l] - prev[l]).abs() / (1 + next[l].abs());
      worst = std::max(worst, diff);
    }
    if (worst < tol) return {std::move(next), n};
    prev = std::move(next);
  }
  std::ostringstream msg;
  msg << "moment quadrature did not converge: " << n << " nodes, relative change "
      << to_double(worst) << ", tolerance " << to_double(tol);
  throw QuadratureError(msg.str());
}

template <class Real>
Cplx<Real> eta(const PhasePolynomial<Real>& poly, int ell, int quad_nodes = kDefaultQuadNodes) {
  return eta_moments(poly, ell, quad_nodes).eta[ell];
}

/// G_1..G_{k+2}; `imag_residue` is the largest imaginary part discarded
/// from i^(l-1) eta_(l-1), scaled by (1 + |eta|).
template <class Real>
struct ConstraintVector {
  std::vector<Real> values;
  Real imag_residue{0};

  Real inf_norm() const { return max_abs(values); }
};

/// Threshold on the scaled imaginary residue before parity is declared broken.
template <class Real>
Real parity_tolerance() {
  if constexpr (std::is_same_v<Real, double>) {
    return Real(1e-12);
  } else {
    return moment_tolerance<Real>() * 100;
  }
}

namespace detail {

template <class Real>
ConstraintVector<Real> constraints_from_moments(const PhasePolynomial<Real>& poly, int k,
                                                const Real& theta,
                                                const std::vector<Cplx<Real>>& eta) {
  using std::abs;
  ConstraintVector<Real> g;
  g.values.reserve(k + 2);
  for (int l = 1; l <= k; ++l) {
    const auto z = eta[l - 1].times_i_pow(l - 1);
    g.values.push_back(z.re);
    g.imag_residue = std::max(g.imag_residue, Real(abs(z.im) / (1 + eta[l - 1].abs())));
  }
  auto [b1, b2] = boundary_residuals(poly, theta);
  g.values.push_back(b1);
  g.values.push_back(b2);
  if (g.imag_residue > parity_tolerance<Real>()) {
    std::ostringstream msg;
    msg << "constraint parity violated: imaginary residue " << to_double(g.imag_residue);
    throw ConsistencyError(msg.str());
  }
  return g;
}

template <class Real>
SquareMatrix<Real> jacobian_from_moments(std::size_t N, int k, const std::vector<Cplx<Real>>& eta) {
  SquareMatrix<Real> J(N);
  for (int l = 1; l <= k; ++l) {
    for (std::size_t j = 0; j < N; ++j) {
      // d G_l / d c_j = Re[i^l eta_(l + 2j)] with c_j the x^(2j+1) coefficient.
      J(l - 1, j) = eta[l + 2 * j].times_i_pow(l).re;
    }
  }
  for (std::size_t j = 0; j < N; ++j) {
    J(k, j) = Real(1);
    J(k + 1, j) = Real(2 * j + 1);
  }
  return J;
}

inline void check_size(std::size_t n, int k) {
  if (k < 0) throw std::invalid_argument("suppression order k must be >= 0");
  if (n != static_cast<std::size_t>(k + 2))
    throw std::invalid_argument("polynomial must have exactly k+2 coefficients");
}

inline int max_moment_index(int k) { return 3 * k + 3; }

}  // namespace detail

template <class Real>
ConstraintVector<Real> constraint_vector(const PhasePolynomial<Real>& poly, int k, const Real& theta,
                                         int quad_nodes = kDefaultQuadNodes) {
  detail::check_size(poly.size(), k);
  const auto sweep = eta_moments(poly, std::max(k - 1, 0), quad_nodes);
  return detail::constraints_from_moments(poly, k, theta, sweep.eta);
}

template <class Real>
SquareMatrix<Real> jacobian(const PhasePolynomial<Real>& poly, int k, int quad_nodes = kDefaultQuadNodes) {
  detail::check_size(poly.size(), k);
  const auto sweep = eta_moments(poly, detail::max_moment_index(k), quad_nodes);
  return detail::jacobian_from_moments(poly.size(), k, sweep.eta);
}

/// Square-pulse start: c_0 = [(k+1) pi + theta] / 2, higher terms zero.
template <class Real = double>
PhasePolynomial<Real> initial_guess(int k, const Real& theta) {
  if (k < 0) throw std::invalid_argument("suppression order k must be >= 0");
  std::vector<Real> c(k + 2, Real(0));
  c[0] = ((k + 1) * pi<Real>() + theta) / 2;
  return PhasePolynomial<Real>(std::move(c));
}

/// Square pulse with the same area as the target, c_0 = theta / 2. Unlike
/// `initial_guess` it already satisfies phi(1) = theta/2.
template <class Real = double>
PhasePolynomial<Real> area_matched_guess(int k, const Real& theta) {
  if (k < 0) throw std::invalid_argument("suppression order k must be >= 0");
  std::vector<Real> c(k + 2, Real(0));
  c[0] = theta / 2;
  return PhasePolynomial<Real>(std::move(c));
}

enum class StartGuess { AreaMatched, Shifted };

inline const char* to_string(StartGuess g) {
  return g == StartGuess::AreaMatched ? "area_matched" : "shifted";
}

inline StartGuess parse_start_guess(const std::string& s) {
  if (s == "area_matched") return StartGuess::AreaMatched;
  if (s == "shifted") return StartGuess::Shifted;
  throw std::invalid_argument("unknown start guess '" + s + "'");
}

struct SolverConfig {
  int k = 0;
  double theta = 0.0;
  /// Multiple of pi used when theta must be exact in extended precision;
  /// takes precedence over `theta` when set.
  std::optional<double> theta_pi_multiple;
  double alpha = 1.0;
  double epsilon = 1e-12;
  int max_iter = 500;
  int precision_digits = 0;
  int quad_nodes = kDefaultQuadNodes;
  bool backtracking = false;
  StartGuess start = StartGuess::AreaMatched;

  void validate() const {
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (quad_nodes < 2) throw std::invalid_argument("quad_nodes must be >= 2");
    precision_tier(precision_digits);
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
  }

  template <class Real>
  Real theta_as() const {
    if (theta_pi_multiple) return Real(*theta_pi_multiple) * pi<Real>();
    return Real(theta);
  }
};

enum class SolveStatus { Converged, MaxIterExceeded, Diverged, SingularJacobian };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterExceeded: return "max_iter_exceeded";
    case SolveStatus::Diverged: return "diverged";
    case SolveStatus::SingularJacobian: return "singular_jacobian";
  }
  return "unknown";
}

template <class Real>
struct SolveReport {
  PhasePolynomial<Real> coeffs;
  std::vector<double> residual_history;
  std::vector<double> condition_history;
  double max_imag_residue = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterExceeded;

  bool converged() const { return status == SolveStatus::Converged; }
  double residual_final() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

/// Damped Newton: c <- c - alpha J^{-1} G, starting from a square pulse or
/// from `warm_start`. Iteration count is the number of Newton updates taken.
/// An iterate whose moments cannot be resolved by the quadrature counts as
/// divergence.
template <class Real>
SolveReport<Real> solve(const SolverConfig& config,
                        std::optional<PhasePolynomial<Real>> warm_start = std::nullopt) {
  config.validate();
  const int k = config.k;
  const Real theta = config.theta_as<Real>();
  const Real alpha(config.alpha);
  const Real eps(config.epsilon);
  const Real cond_limit = 1 / (100 * unit_roundoff<Real>());

  SolveReport<Real> report;
  PhasePolynomial<Real> p = warm_start                             ? *warm_start
                            : config.start == StartGuess::Shifted ? initial_guess<Real>(k, theta)
                                                                  : area_matched_guess<Real>(k, theta);
  detail::check_size(p.size(), k);
  const std::size_t N = p.size();

  auto evaluate = [&](const PhasePolynomial<Real>& q, bool need_jac) {
    const int top = need_jac ? detail::max_moment_index(k) : std::max(k - 1, 0);
    return eta_moments(q, top, config.quad_nodes);
  };

  auto sweep = evaluate(p, true);
  auto g = detail::constraints_from_moments(p, k, theta, sweep.eta);
  Real r = g.inf_norm();
  const Real r0 = r;
  report.residual_history.push_back(to_double(r));
  report.max_imag_residue = to_double(g.imag_residue);

  for (int it = 0;; ++it) {
    if (r < eps) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (it > 0 && r > 10 * r0) {
      report.status = SolveStatus::Diverged;
      break;
    }
    if (it >= config.max_iter) {
      report.status = SolveStatus::MaxIterExceeded;
      break;
    }
    PivotedLU<Real> lu(detail::jacobian_from_moments(N, k, sweep.eta));
    const Real cond = lu.condition1();
    report.condition_history.push_back(to_double(cond));
    if (lu.singular() || !(cond < cond_limit)) {
      report.status = SolveStatus::SingularJacobian;
      break;
    }
    const auto delta = lu.solve(g.values);

    Real step = alpha;
    PhasePolynomial<Real> trial;
    for (int halving = 0;; ++halving) {
      std::vector<Real> c = p.coeffs();
      for (std::size_t j = 0; j < N; ++j) c[j] -= step * delta[j];
      trial = PhasePolynomial<Real>(std::move(c));
      try {
        sweep = evaluate(trial, true);
      } catch (const QuadratureError&) {
        if (config.backtracking && halving < 20) {
          step /= 2;
          continue;
        }
        report.iterations = it + 1;
        report.status = SolveStatus::Diverged;
        report.coeffs = std::move(trial);
        return report;
      }
      g = detail::constraints_from_moments(trial, k, theta, sweep.eta);
      if (!config.backtracking || g.inf_norm() <= r || halving >= 20) break;
      step /= 2;
    }
    p = std::move(trial);
    r = g.inf_norm();
    report.iterations = it + 1;
    report.residual_history.push_back(to_double(r));
    report.max_imag_residue = std::max(report.max_imag_residue, to_double(g.imag_residue));
  }
  report.coeffs = std::move(p);
  return report;
}

}  // namespace flatpulse
