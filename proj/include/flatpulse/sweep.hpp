#pragma once

// Infidelity sweeps over gate time and coupling strength.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "flatpulse/constraints.hpp"
#include "flatpulse/filter.hpp"
#include "flatpulse/infidelity.hpp"
#include "flatpulse/io.hpp"
#include "flatpulse/noise.hpp"
#include "flatpulse/parallel.hpp"

namespace flatpulse {

using PulseReal = Extended50;

struct SimConfig {
  // pulse
  int k = 6;
  double theta_pi_multiple = 7.0;
  double alpha = 0.5;
  double epsilon = 1e-30;
  int precision_digits = 50;
  // noise
  std::string noise = "vrqb";
  double omega_B = 1.0;
  double beta = 0.0;
  int m = 200;
  int n_seeds = 20;
  double nu_a = 0.01;
  double nu_b = 1.0;
  int n_components = kDefaultRtnComponents;
  // grids and methods
  std::vector<double> omegaB_T;
  std::vector<double> lambda_over_omegaB{1e-2};
  std::vector<std::string> methods{"leading"};
  std::vector<std::string> protocols{"smooth"};
  int udd_n = 6;
  int n_steps = 0;
  int n_traj = 1000;
  int leading_digits = 32;
  std::uint64_t seed = 1;

  void validate() const {
    if (k < 0 || k > 12) throw std::invalid_argument("k must lie in [0, 12]");
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
    precision_tier(precision_digits);
    precision_tier(leading_digits);
    if (noise != "vrqb" && noise != "rtn") throw std::invalid_argument("noise must be 'vrqb' or 'rtn'");
    if (!(omega_B > 0)) throw std::invalid_argument("omega_B must be > 0");
    if (!(beta >= 0)) throw std::invalid_argument("beta must be >= 0");
    if (m < 2) throw std::invalid_argument("m must be >= 2");
    if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    if (!(nu_a > 0 && nu_b > nu_a)) throw std::invalid_argument("need 0 < nu_a < nu_b");
    if (n_components < 10) throw std::invalid_argument("n_components must be >= 10");
    if (omegaB_T.empty()) throw std::invalid_argument("omegaB_T grid is empty");
    for (double t : omegaB_T)
      if (!(t > 0)) throw std::invalid_argument("omegaB_T values must be > 0");
    if (lambda_over_omegaB.empty()) throw std::invalid_argument("lambda_over_omegaB is empty");
    for (const auto& s : methods)
      if (s != "leading" && s != "quantum" && s != "classical") throw std::invalid_argument("unknown method '" + s + "'");
    for (const auto& s : protocols)
      if (s != "smooth" && s != "udd" + std::to_string(udd_n)) throw std::invalid_argument("unknown protocol '" + s + "'");
    if (udd_n < 1) throw std::invalid_argument("udd_n must be >= 1");
    if (n_steps != 0 && n_steps < 100) throw std::invalid_argument("n_steps must be 0 (auto) or >= 100");
    if (n_traj < 100) throw std::invalid_argument("n_traj must be >= 100");
  }

  SolverConfig solver() const {
    SolverConfig c;
    c.k = k;
    c.theta_pi_multiple = theta_pi_multiple;
    c.alpha = alpha;
    c.epsilon = epsilon;
    c.precision_digits = precision_digits;
    return c;
  }
};

struct InfidelityPoint {
  std::string method;
  std::string protocol;
  int k = 0;
  double theta = 0.0;
  double lambda_over_omegaB = 0.0;
  double omegaB_T = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
};

/// Synthesizes the smooth pulse of a sweep at the configured precision.
inline PhasePolynomial<PulseReal> synthesize_pulse(const SimConfig& cfg) {
  return with_precision(cfg.precision_digits, [&](auto zero) {
    using Real = decltype(zero);
    const auto rep = solve<Real>(cfg.solver());
    if (!rep.converged())
      throw std::runtime_error(std::string("pulse synthesis failed: ") + to_string(rep.status));
    return rep.coeffs.template cast<PulseReal>();
  });
}

namespace detail {

inline double sweep_leading(const SimConfig& cfg, const PhasePolynomial<PulseReal>& pulse, const DDSequence& dd,
                            bool smooth, double T, double lambda) {
  SpectrumModel S;
  S.lambda = lambda;
  if (cfg.noise == "vrqb") {
    S.kind = SpectrumKind::VRQB;
    S.omega_B = cfg.omega_B;
    S.beta = cfg.beta;
  } else {
    S.kind = SpectrumKind::RTN;
    S.nu_a = cfg.nu_a;
    S.nu_b = cfg.nu_b;
  }
  return with_precision(cfg.leading_digits, [&](auto zero) {
    using Real = decltype(zero);
    if (smooth) return leading_infidelity<Real>(SmoothPhase<Real>{pulse.template cast<Real>()}, T, S);
    return leading_infidelity<Real>(dd, T, S);
  });
}

}  // namespace detail

/// Every (method, protocol, lambda, T) combination; a failing point is kept
/// with ok = false and its message instead of aborting the sweep.
inline std::vector<InfidelityPoint> run_sweep(const SimConfig& cfg, const PhasePolynomial<PulseReal>& pulse,
                                              int jobs = 1) {
  cfg.validate();
  const DDSequence dd = udd_sequence(cfg.udd_n);
  const SmoothPhase<double> smooth_d{pulse.cast<double>()};
  const double theta = cfg.theta_pi_multiple * pi<double>();
  std::vector<InfidelityPoint> points;
  // Noise stream per (lambda, T) cell, shared by all protocols so that
  // comparisons between them see the same realizations.
  std::vector<std::uint64_t> stream;
  for (const auto& method : cfg.methods)
    for (const auto& protocol : cfg.protocols)
      for (std::size_t li = 0; li < cfg.lambda_over_omegaB.size(); ++li)
        for (std::size_t ti = 0; ti < cfg.omegaB_T.size(); ++ti) {
          const double lr = cfg.lambda_over_omegaB[li], wT = cfg.omegaB_T[ti];
          stream.push_back(li * cfg.omegaB_T.size() + ti);
          InfidelityPoint p;
          p.method = method == "leading" ? "leading" : method == "quantum" ? "quantum_full" : "classical_mc";
          p.protocol = protocol == "smooth" ? "smooth_pulse" : protocol;
          p.k = protocol == "smooth" ? cfg.k : cfg.udd_n;
          // UDD realizes the identity.
          p.theta = protocol == "smooth" ? theta : 0.0;
          p.lambda_over_omegaB = lr;
          p.omegaB_T = wT;
          p.seed = cfg.seed;
          points.push_back(p);
        }

  parallel_for(points.size(), jobs, [&](std::size_t i) {
    auto& p = points[i];
    const double T = p.omegaB_T / cfg.omega_B;
    const double lambda = p.lambda_over_omegaB * cfg.omega_B;
    const bool smooth = p.protocol == "smooth_pulse";
    try {
      if (p.method == "leading") {
        p.value = detail::sweep_leading(cfg, pulse, dd, smooth, T, lambda);
      } else if (p.method == "quantum_full") {
        if (cfg.noise != "vrqb") throw std::invalid_argument("quantum method needs the vrqb bath");
        std::vector<double> v;
        for (int s = 0; s < cfg.n_seeds; ++s) {
          const auto bath = build_bath(cfg.m, cfg.omega_B, cfg.beta, lambda, derive_seed(cfg.seed, 1000 + s));
          v.push_back(smooth ? quantum_full_fidelity(smooth_d, T, bath, cfg.n_steps).infidelity
                             : quantum_full_fidelity(dd, T, bath).infidelity);
        }
        const auto e = detail::summarize(v, std::numeric_limits<double>::infinity());
        p.value = e.mean;
        p.std_error = e.std_error;
      } else {
        if (cfg.noise != "rtn") throw std::invalid_argument("classical method needs rtn noise");
        const RtnNoise noise{cfg.nu_a, cfg.nu_b, cfg.n_components};
        const std::uint64_t s = derive_seed(cfg.seed, 2000 + stream[i]);
        const auto e = smooth ? classical_mc_infidelity(smooth_d, T, noise, cfg.n_traj, lambda, s, 1, cfg.n_steps)
                              : classical_mc_infidelity(dd, T, noise, cfg.n_traj, lambda, s, 1, cfg.n_steps);
        p.value = e.mean;
        p.std_error = e.std_error;
      }
    } catch (const std::exception& e) {
      p.ok = false;
      p.error = e.what();
      p.value = std::nan("");
      p.std_error = std::nan("");
    }
  });
  return points;
}

inline std::string sweep_csv(const std::vector<InfidelityPoint>& points) {
  std::ostringstream os;
  os << "method,protocol,k,theta,lambda_over_omegaB,omegaB_T,infidelity,stderr,seed\n";
  for (const auto& p : points)
    os << p.method << ',' << p.protocol << ',' << p.k << ',' << format_double(p.theta) << ','
       << format_double(p.lambda_over_omegaB) << ',' << format_double(p.omegaB_T) << ','
       << (p.ok ? format_double(p.value) : "nan") << ',' << (p.ok ? format_double(p.std_error) : "nan") << ','
       << p.seed << '\n';
  return os.str();
}

// ------------------------------------------------------------ config files

namespace detail {

template <class T>
T field(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config field " + path + "." + key + " has the wrong type");
  }
}

}  // namespace detail

/// Reads a sweep config; unknown keys and wrong types are reported with
/// their JSON path.
inline SimConfig parse_sim_config(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config root $ must be an object");
  SimConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const std::string path = "$";
    if (key == "k") c.k = detail::field<int>(j, key, path);
    else if (key == "theta_pi_multiple") c.theta_pi_multiple = detail::field<double>(j, key, path);
    else if (key == "alpha") c.alpha = detail::field<double>(j, key, path);
    else if (key == "epsilon") c.epsilon = detail::field<double>(j, key, path);
    else if (key == "precision_digits") c.precision_digits = detail::field<int>(j, key, path);
    else if (key == "noise") c.noise = detail::field<std::string>(j, key, path);
    else if (key == "omega_B") c.omega_B = detail::field<double>(j, key, path);
    else if (key == "beta") c.beta = detail::field<double>(j, key, path);
    else if (key == "m") c.m = detail::field<int>(j, key, path);
    else if (key == "n_seeds") c.n_seeds = detail::field<int>(j, key, path);
    else if (key == "nu_a") c.nu_a = detail::field<double>(j, key, path);
    else if (key == "nu_b") c.nu_b = detail::field<double>(j, key, path);
    else if (key == "n_components") c.n_components = detail::field<int>(j, key, path);
    else if (key == "omegaB_T") c.omegaB_T = detail::field<std::vector<double>>(j, key, path);
    else if (key == "lambda_over_omegaB") c.lambda_over_omegaB = detail::field<std::vector<double>>(j, key, path);
    else if (key == "methods") c.methods = detail::field<std::vector<std::string>>(j, key, path);
    else if (key == "protocols") c.protocols = detail::field<std::vector<std::string>>(j, key, path);
    else if (key == "udd_n") c.udd_n = detail::field<int>(j, key, path);
    else if (key == "n_steps") c.n_steps = detail::field<int>(j, key, path);
    else if (key == "n_traj") c.n_traj = detail::field<int>(j, key, path);
    else if (key == "leading_digits") c.leading_digits = detail::field<int>(j, key, path);
    else if (key == "seed") c.seed = detail::field<std::uint64_t>(j, key, path);
    else if (key == "omegaB_T_log") {
      const auto& g = it.value();
      if (!g.is_object()) throw std::invalid_argument("config field $.omegaB_T_log must be an object");
      for (auto gi = g.begin(); gi != g.end(); ++gi)
        if (gi.key() != "lo" && gi.key() != "hi" && gi.key() != "n")
          throw std::invalid_argument("unknown config key $.omegaB_T_log." + gi.key());
      c.omegaB_T = log_grid(detail::field<double>(g, "lo", "$.omegaB_T_log"), detail::field<double>(g, "hi", "$.omegaB_T_log"),
                            detail::field<int>(g, "n", "$.omegaB_T_log"));
    } else {
      throw std::invalid_argument("unknown config key $." + key);
    }
  }
  c.validate();
  return c;
}

inline json sim_config_to_json(const SimConfig& c) {
  json j;
  j["k"] = c.k;
  j["theta_pi_multiple"] = c.theta_pi_multiple;
  j["alpha"] = c.alpha;
  j["epsilon"] = c.epsilon;
  j["precision_digits"] = c.precision_digits;
  j["noise"] = c.noise;
  j["omega_B"] = c.omega_B;
  j["beta"] = c.beta;
  j["m"] = c.m;
  j["n_seeds"] = c.n_seeds;
  j["nu_a"] = c.nu_a;
  j["nu_b"] = c.nu_b;
  j["n_components"] = c.n_components;
  j["omegaB_T"] = c.omegaB_T;
  j["lambda_over_omegaB"] = c.lambda_over_omegaB;
  j["methods"] = c.methods;
  j["protocols"] = c.protocols;
  j["udd_n"] = c.udd_n;
  j["n_steps"] = c.n_steps;
  j["n_traj"] = c.n_traj;
  j["leading_digits"] = c.leading_digits;
  j["seed"] = c.seed;
  return j;
}

}  // namespace flatpulse
