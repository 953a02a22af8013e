#pragma once

// Gate infidelity: leading order through the filter function, full
// propagation against a finite quantum bath, and Monte Carlo over
// classical telegraph noise.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "flatpulse/filter.hpp"
#include "flatpulse/noise.hpp"
#include "flatpulse/parallel.hpp"
#include "flatpulse/phase.hpp"

namespace flatpulse {

class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- leading order

/// Large-frequency envelope |f(+-w)| <= a/y + b/y^2 with y = w - omega_max,
/// from one integration by parts of f.
struct TailEnvelope {
  double omega_max = 0.0;
  double a = 0.0;
  double b = 0.0;
};

template <class Real>
TailEnvelope tail_envelope(const SmoothPhase<Real>& p, double T) {
  const auto pd = p.poly.template cast<double>();
  const auto w = sample_waveform(pd, T, kSlopeGridPoints);
  const double slope = max_slope(w);
  double peak = 0.0;
  for (double v : w.amplitudes) peak = std::max(peak, std::abs(v));
  // Grid maximum plus the largest possible rise between samples.
  peak += slope * T / (kSlopeGridPoints - 1);
  return {peak, 2.0, T * slope};
}

inline TailEnvelope tail_envelope(const DDSequence& d, double) { return {0.0, 2.0 * (d.n + 1), 0.0}; }

inline constexpr int kPanelNodes = 16;
inline constexpr double kTailRelTol = 1e-4;
inline constexpr double kRefineRelTol = 1e-3;
inline constexpr int kMaxRefinements = 5;

namespace detail {

template <class Real, class Provider>
double panel_integral(const Provider& p, double T, const SpectrumModel& S, const std::vector<double>& edges) {
  const auto& rule = gauss_legendre<double>(kPanelNodes);
  double acc = 0.0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < kPanelNodes; ++i) {
      const double w = mid + half * rule.nodes[i];
      const double s = S(w) + S(-w);
      if (s == 0.0) continue;
      acc += half * rule.weights[i] * s * to_double(filter_scaled<Real>(p, Real(w * T)));
    }
  }
  return acc * T * T / (6.0 * pi<double>());
}

inline std::vector<double> refine(const std::vector<double>& edges) {
  std::vector<double> out;
  out.reserve(2 * edges.size());
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    out.push_back(edges[e]);
    out.push_back(0.5 * (edges[e] + edges[e + 1]));
  }
  out.push_back(edges.back());
  return out;
}

/// Uniform panels no wider than `width` between consecutive anchors.
inline std::vector<double> subdivide(const std::vector<double>& anchors, double width) {
  std::vector<double> out{anchors.front()};
  for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
    const double a = anchors[i], b = anchors[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
    for (int j = 1; j <= n; ++j) out.push_back(j == n ? b : a + (b - a) * j / n);
  }
  return out;
}

/// Upper bound on the leading-order contribution above `cut` for the RTN band.
inline double rtn_tail_bound(const SpectrumModel& S, const TailEnvelope& env, double T, double cut) {
  const double c2 = 1.0 / std::log(S.nu_b / S.nu_a);
  const double amp = 4.0 * S.lambda * S.lambda * c2 * (S.nu_b - S.nu_a);
  double bound = 2.0 * T * T / cut;
  const double y0 = cut - env.omega_max;
  if (y0 > 0) {
    const double ibp = 2.0 * (env.a * env.a / (3 * y0 * y0 * y0) + env.a * env.b / (2 * y0 * y0 * y0 * y0) +
                              env.b * env.b / (5 * std::pow(y0, 5)));
    bound = std::min(bound, ibp);
  }
  return 2.0 * amp * bound / (6.0 * pi<double>());
}

template <class Real, class Provider>
double refine_until_stable(const Provider& p, double T, const SpectrumModel& S, std::vector<double> edges) {
  double I = panel_integral<Real>(p, T, S, edges);
  for (int r = 0; r < kMaxRefinements; ++r) {
    edges = refine(edges);
    const double I2 = panel_integral<Real>(p, T, S, edges);
    if (std::abs(I2 - I) <= kRefineRelTol * std::abs(I2)) return I2;
    I = I2;
  }
  std::ostringstream msg;
  msg << "leading-order integral not stable under refinement at T=" << T << "; last value " << I;
  throw AccuracyError(msg.str());
}

}  // namespace detail

/// 1 - F ~ (1/3) int dw/2pi S(w) F(w, T), folded onto w >= 0.
template <class Real, class Provider>
double leading_infidelity(const Provider& p, double T, const SpectrumModel& S) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  switch (S.kind) {
    case SpectrumKind::StaticDelta:
      return S.weight * to_double(filter_scaled<Real>(p, Real(0))) * T * T / 3.0;
    case SpectrumKind::VRQB: {
      const double top = 4.0 * S.omega_B;
      const int n = std::max(8, static_cast<int>(std::ceil(top * T / pi<double>())));
      std::vector<double> edges(n + 1);
      for (int i = 0; i <= n; ++i) edges[i] = top * i / n;
      return detail::refine_until_stable<Real>(p, T, S, edges);
    }
    case SpectrumKind::RTN: {
      const TailEnvelope env = tail_envelope(p, T);
      const double width = pi<double>() / T;
      double cut = std::max({4.0 * S.nu_b, 2.0 * env.omega_max, 8.0 / T});
      auto build = [&](double c) {
        std::vector<double> anchors{0.0};
        for (double w = std::min(S.nu_a, 1.0 / T) / 4.0; w < c; w *= 2.0) anchors.push_back(w);
        anchors.push_back(c);
        return detail::subdivide(anchors, width);
      };
      double I = detail::panel_integral<Real>(p, T, S, build(cut));
      for (int grow = 0; grow < 40 && detail::rtn_tail_bound(S, env, T, cut) > kTailRelTol * I; ++grow) {
        cut *= 2.0;
        I = detail::panel_integral<Real>(p, T, S, build(cut));
      }
      const double tail = detail::rtn_tail_bound(S, env, T, cut);
      if (tail > kTailRelTol * I) {
        std::ostringstream msg;
        msg << "spectral tail bound " << tail << " not below tolerance at T=" << T;
        throw AccuracyError(msg.str());
      }
      return detail::refine_until_stable<Real>(p, T, S, build(cut));
    }
  }
  return 0.0;
}

// ------------------------------------------------------------- quantum bath

/// Average gate fidelity with the identity from the qubit-traced operator
/// M = U_00 + U_11 (bath blocks of U_I): F = 1/3 + tr(M rho M^dag)/6.
inline double fidelity_from_trace(const MatrixXcd& M, const Eigen::VectorXd& populations) {
  double X = 0.0;
  for (int k = 0; k < M.cols(); ++k) X += populations[k] * M.col(k).squaredNorm();
  return 1.0 / 3.0 + X / 6.0;
}

/// The same quantity as 1 - F once unitarity of U is used to remove the
/// cancellation in 4 - tr(M rho M^dag):
/// 1 - F = (1/6) sum_k p_k (|(U00 - U11) e_k|^2 + 2 |U10 e_k|^2 + 2 |U01 e_k|^2).
inline double infidelity_from_blocks(const MatrixXcd& U00, const MatrixXcd& U01, const MatrixXcd& U10,
                                     const MatrixXcd& U11, const Eigen::VectorXd& populations) {
  double acc = 0.0;
  for (int k = 0; k < U00.cols(); ++k)
    acc += populations[k] *
           ((U00.col(k) - U11.col(k)).squaredNorm() + 2.0 * U10.col(k).squaredNorm() + 2.0 * U01.col(k).squaredNorm());
  return acc / 6.0;
}

struct QuantumFidelity {
  double fidelity = 1.0;
  double infidelity = 0.0;
  /// |F(2n steps) - F(n steps)|.
  double step_disagreement = 0.0;
  /// max |U^dag U - 1| of the finer propagation.
  double unitarity_drift = 0.0;
  int n_steps = 0;
};

inline constexpr double kQuantumTolerance = 1e-8;
inline constexpr int kMinQuantumSteps = 1000;
inline constexpr double kMaxQuantumStepOmegaB = 0.02;

inline int default_quantum_steps(double T, double omega_B) {
  return std::max(kMinQuantumSteps, static_cast<int>(std::ceil(T * omega_B / kMaxQuantumStepOmegaB)));
}

namespace detail {

/// exp(-i (E +- lambda B) h) built from one eigendecomposition each.
class BlockPropagator {
 public:
  explicit BlockPropagator(const BathInstance& bath) : bath_(bath) {
    const int m = bath.m;
    MatrixXcd Hp = bath.B_eig * bath.lambda, Hm = bath.B_eig * (-bath.lambda);
    for (int i = 0; i < m; ++i) {
      Hp(i, i) += bath.bath_eigvals[i];
      Hm(i, i) += bath.bath_eigvals[i];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> ep(Hp), em(Hm);
    Wp_ = ep.eigenvectors();
    Wm_ = em.eigenvectors();
    mup_ = ep.eigenvalues();
    mum_ = em.eigenvalues();
  }
  MatrixXcd plus(double h) const { return expm(Wp_, mup_, h); }
  MatrixXcd minus(double h) const { return expm(Wm_, mum_, h); }

 private:
  static MatrixXcd expm(const MatrixXcd& W, const Eigen::VectorXd& mu, double h) {
    Eigen::VectorXcd ph(mu.size());
    for (int i = 0; i < mu.size(); ++i) ph[i] = std::polar(1.0, -mu[i] * h);
    return W * ph.asDiagonal() * W.adjoint();
  }
  const BathInstance& bath_;
  MatrixXcd Wp_, Wm_;
  Eigen::VectorXd mup_, mum_;
};

/// Rows of U with qubit 0 (top) and qubit 1 (bottom), each m x 2m.
struct BlockState {
  MatrixXcd top, bottom;

  explicit BlockState(int m) : top(MatrixXcd::Zero(m, 2 * m)), bottom(MatrixXcd::Zero(m, 2 * m)) {
    top.leftCols(m).setIdentity();
    bottom.rightCols(m).setIdentity();
  }
  /// exp(-i a sigma_x / 2) on the qubit.
  void rotate(double a) {
    if (a == 0.0) return;
    const double c = std::cos(a / 2), s = std::sin(a / 2);
    const std::complex<double> mis(0.0, -s);
    MatrixXcd t = c * top + mis * bottom;
    bottom = mis * top + c * bottom;
    top.swap(t);
  }
  void apply(const MatrixXcd& Pp, const MatrixXcd& Pm, MatrixXcd& scratch) {
    scratch.noalias() = Pp * top;
    top.swap(scratch);
    scratch.noalias() = Pm * bottom;
    bottom.swap(scratch);
  }
  /// Infidelity of exp(i total sigma_x / 2) U with the identity.
  double infidelity(double total, const Eigen::VectorXd& pop) const {
    const int m = static_cast<int>(top.rows());
    const double c = std::cos(total / 2), s = std::sin(total / 2);
    const std::complex<double> is(0.0, s);
    const MatrixXcd t = c * top + is * bottom;
    const MatrixXcd b = is * top + c * bottom;
    return infidelity_from_blocks(t.leftCols(m), t.rightCols(m), b.leftCols(m), b.rightCols(m), pop);
  }
  double drift() const {
    const int m2 = static_cast<int>(top.cols());
    MatrixXcd g = top.adjoint() * top + bottom.adjoint() * bottom;
    g -= MatrixXcd::Identity(m2, m2);
    return g.cwiseAbs().maxCoeff();
  }
};

inline BlockState strang_propagate(const SmoothPhase<double>& p, double T, const BlockPropagator& prop, int n,
                                   int m) {
  BlockState st(m);
  const double h = T / n;
  const MatrixXcd Pp = prop.plus(h), Pm = prop.minus(h);
  MatrixXcd scratch(m, 2 * m);
  auto phase = [&](double t) { return p.poly.phi_unchecked(2.0 * t / T - 1.0); };
  double prev = phase(0.0);
  for (int j = 0; j < n; ++j) {
    const double mid = phase((j + 0.5) * h);
    st.rotate(mid - prev);
    prev = mid;
    st.apply(Pp, Pm, scratch);
  }
  st.rotate(phase(T) - prev);
  return st;
}

}  // namespace detail

/// Full fidelity of the smooth pulse against the bath. Propagates
/// H = (Omega/2) sigma_x + lambda sigma_z B + H_B in the H_B eigenbasis with
/// a symmetric splitting (exact control rotation, exact bath blocks) at n and
/// 2n steps; the returned value is their Richardson combination.
inline QuantumFidelity quantum_full_fidelity(const SmoothPhase<double>& p, double T, const BathInstance& bath,
                                             int n_steps = 0, bool check = true) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  QuantumFidelity out;
  if (bath.lambda == 0.0) {
    out.n_steps = n_steps;
    return out;
  }
  const int n = n_steps > 0 ? n_steps : default_quantum_steps(T, bath.omega_B);
  if (T / n > std::min(kMaxQuantumStepOmegaB / bath.omega_B, T / kMinQuantumSteps) * (1 + 1e-12))
    throw std::invalid_argument("step must be <= min(0.02/omega_B, T/1000)");
  const detail::BlockPropagator prop(bath);
  const double total = p.poly.phi_unchecked(1.0) - p.poly.phi_unchecked(-1.0);
  const auto coarse = detail::strang_propagate(p, T, prop, n, bath.m);
  const double Ic = coarse.infidelity(total, bath.populations);
  const auto fine = detail::strang_propagate(p, T, prop, 2 * n, bath.m);
  const double If = fine.infidelity(total, bath.populations);
  out.n_steps = n;
  out.infidelity = (4.0 * If - Ic) / 3.0;
  out.fidelity = 1.0 - out.infidelity;
  out.step_disagreement = std::abs(If - Ic);
  out.unitarity_drift = fine.drift();
  if (check && (out.unitarity_drift > kQuantumTolerance || out.step_disagreement > kQuantumTolerance)) {
    std::ostringstream msg;
    msg << "quantum propagation not accurate: drift " << out.unitarity_drift << ", step disagreement "
        << out.step_disagreement;
    throw AccuracyError(msg.str());
  }
  return out;
}

/// Ideal decoupling: free bath evolution between instantaneous pi flips,
/// so the propagation is exact.
inline QuantumFidelity quantum_full_fidelity(const DDSequence& d, double T, const BathInstance& bath) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  QuantumFidelity out;
  if (bath.lambda == 0.0) return out;
  const detail::BlockPropagator prop(bath);
  detail::BlockState st(bath.m);
  MatrixXcd scratch(bath.m, 2 * bath.m);
  std::vector<double> cuts{0.0};
  for (double t : d.switch_times) cuts.push_back(t * T);
  cuts.push_back(T);
  double phase = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    if (j > 0) {
      const double next = d.sign_on_segment(j) < 0 ? pi<double>() : 0.0;
      st.rotate(next - phase);
      phase = next;
    }
    st.apply(prop.plus(cuts[j + 1] - cuts[j]), prop.minus(cuts[j + 1] - cuts[j]), scratch);
  }
  out.infidelity = st.infidelity(phase, bath.populations);
  out.fidelity = 1.0 - out.infidelity;
  out.unitarity_drift = st.drift();
  return out;
}

// -------------------------------------------------------- classical Monte Carlo

struct RtnNoise {
  double nu_a = 0.01;
  double nu_b = 1.0;
  int n_components = kDefaultRtnComponents;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_traj = 0;
  /// Set when std_error exceeded the requested tolerance.
  bool warning = false;
};

inline constexpr double kMcStepNuB = 0.005;

/// Step count for a classical run: dt <= min(0.005/nu_b, T/1000).
inline int default_mc_steps(double T, double nu_b) {
  return std::max(1000, static_cast<int>(std::ceil(T * nu_b / kMcStepNuB)));
}

namespace detail {

/// Unit quaternion q = w - i (x sx + y sy + z sz) acting as an SU(2) element.
struct Quat {
  double w = 1, x = 0, y = 0, z = 0;
  friend Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - (a.x * b.x + a.y * b.y + a.z * b.z),
            a.w * b.x + b.w * a.x + (a.y * b.z - a.z * b.y),
            a.w * b.y + b.w * a.y + (a.z * b.x - a.x * b.z),
            a.w * b.z + b.w * a.z + (a.x * b.y - a.y * b.x)};
  }
  static Quat expi(double vx, double vy, double vz) {
    const double n = std::sqrt(vx * vx + vy * vy + vz * vz);
    if (n == 0.0) return {};
    const double s = std::sin(n) / n;
    return {std::cos(n), s * vx, s * vy, s * vz};
  }
  /// 1 - F with the identity, (2/3)|u|^2 for q = (w, u).
  double infidelity() const { return 2.0 / 3.0 * (x * x + y * y + z * z); }
};

inline McEstimate summarize(const std::vector<double>& v, double tol) {
  McEstimate e;
  e.n_traj = static_cast<int>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  e.mean = s / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - e.mean) * (x - e.mean);
  e.std_error = v.size() > 1 ? std::sqrt(ss / (v.size() - 1) / v.size()) : 0.0;
  e.warning = e.std_error > tol;
  return e;
}

}  // namespace detail

/// Per trajectory, fourth-order Magnus steps of
/// H_I = lambda eta(t) (sigma_z cos phi + sigma_y sin phi), eta held at its
/// left grid value over each step.
inline McEstimate classical_mc_infidelity(const SmoothPhase<double>& p, double T, const RtnNoise& noise, int n_traj,
                                          double lambda, std::uint64_t seed, int jobs = 1, int n_steps = 0,
                                          double tol = std::numeric_limits<double>::infinity()) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  if (n_traj < 1) throw std::invalid_argument("need at least one trajectory");
  if (lambda == 0.0) return {0.0, 0.0, n_traj, false};
  const int n = n_steps > 0 ? n_steps : default_mc_steps(T, noise.nu_b);
  const double h = T / n;
  const double r3 = std::sqrt(3.0) / 6.0;
  // Interaction-frame axes at the two Gauss points of every step.
  std::vector<double> s1(n), c1(n), s2(n), c2(n);
  for (int j = 0; j < n; ++j) {
    const double t1 = (j + 0.5 - r3) * h, t2 = (j + 0.5 + r3) * h;
    const double p1 = p.poly.phi_unchecked(2.0 * t1 / T - 1.0), p2 = p.poly.phi_unchecked(2.0 * t2 / T - 1.0);
    s1[j] = std::sin(p1);
    c1[j] = std::cos(p1);
    s2[j] = std::sin(p2);
    c2[j] = std::cos(p2);
  }
  std::vector<double> values(n_traj);
  parallel_for(n_traj, jobs, [&](std::size_t r) {
    const auto tr = sample_rtn_trajectory(noise.nu_a, noise.nu_b, noise.n_components, T, h, derive_seed(seed, r));
    detail::Quat U;
    for (int j = 0; j < n; ++j) {
      const double g = lambda * tr.samples[j];
      // a_i = g (0, sin phi_i, cos phi_i); v = h/2 (a1 + a2) + sqrt(3) h^2 / 6 (a2 x a1).
      const double vx = r3 * h * h * g * g * (s2[j] * c1[j] - c2[j] * s1[j]);
      const double vy = 0.5 * h * g * (s1[j] + s2[j]);
      const double vz = 0.5 * h * g * (c1[j] + c2[j]);
      U = detail::Quat::expi(vx, vy, vz) * U;
    }
    values[r] = U.infidelity();
  });
  return detail::summarize(values, tol);
}

/// Decoupling sequences dephase only: 1 - F = (2/3) sin^2(Phi) with
/// Phi = lambda int s(t) eta(t) dt and s = +-1 the toggling sign.
inline McEstimate classical_mc_infidelity(const DDSequence& d, double T, const RtnNoise& noise, int n_traj,
                                          double lambda, std::uint64_t seed, int jobs = 1, int n_steps = 0,
                                          double tol = std::numeric_limits<double>::infinity()) {
  if (!(T > 0)) throw std::invalid_argument("duration T must be positive");
  if (n_traj < 1) throw std::invalid_argument("need at least one trajectory");
  if (lambda == 0.0) return {0.0, 0.0, n_traj, false};
  const int n = n_steps > 0 ? n_steps : default_mc_steps(T, noise.nu_b);
  const double h = T / n;
  std::vector<double> cuts{0.0};
  for (double t : d.switch_times) cuts.push_back(t * T);
  cuts.push_back(T);
  // Signed time each step spends in the toggling frame.
  std::vector<double> weight(n, 0.0);
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double a = cuts[seg], b = cuts[seg + 1], sgn = d.sign_on_segment(seg);
    int j0 = std::max(0, static_cast<int>(std::floor(a / h)));
    for (int j = j0; j < n && j * h < b; ++j) {
      const double lo = std::max(a, j * h), hi = std::min(b, (j + 1) * h);
      if (hi > lo) weight[j] += sgn * (hi - lo);
    }
  }
  std::vector<double> values(n_traj);
  parallel_for(n_traj, jobs, [&](std::size_t r) {
    const auto tr = sample_rtn_trajectory(noise.nu_a, noise.nu_b, noise.n_components, T, h, derive_seed(seed, r));
    double phi = 0.0;
    for (int j = 0; j < n; ++j) phi += weight[j] * tr.samples[j];
    const double s = std::sin(lambda * phi);
    values[r] = 2.0 / 3.0 * s * s;
  });
  return detail::summarize(values, tol);
}

}  // namespace flatpulse
