// Command-line front end: synth, filter, curves, spectrum, sweep.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flatpulse/constraints.hpp"
#include "flatpulse/curves.hpp"
#include "flatpulse/filter.hpp"
#include "flatpulse/infidelity.hpp"
#include "flatpulse/io.hpp"
#include "flatpulse/noise.hpp"
#include "flatpulse/phase.hpp"
#include "flatpulse/sweep.hpp"

namespace fp = flatpulse;
using fp::json;

namespace {

enum Exit : int { kOk = 0, kComputeFailure = 1, kInvalidInput = 2, kIoError = 3 };

struct Globals {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir = ".";
};

struct ComputeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string csv_of(const std::function<void(std::ostream&)>& emit) {
  std::ostringstream os;
  emit(os);
  return os.str();
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  int k = 0;
  double theta_pi_multiple = 1.0;
  double alpha = 1.0;
  double epsilon = 1e-12;
  int precision_digits = 0;
  int max_iter = 500;
  std::string start = "area_matched";
  bool backtracking = false;
  double T = 1.0;
  int n_t = fp::kDefaultWaveformSamples;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  if (a.k < 0 || a.k > 12) throw std::invalid_argument("--k must lie in [0, 12]");
  if (!(a.T > 0)) throw std::invalid_argument("--T must be > 0");
  if (a.n_t < 2) throw std::invalid_argument("--n-t must be >= 2");
  fp::SolverConfig cfg;
  cfg.k = a.k;
  cfg.theta_pi_multiple = a.theta_pi_multiple;
  cfg.alpha = a.alpha;
  cfg.epsilon = a.epsilon;
  cfg.precision_digits = a.precision_digits;
  cfg.max_iter = a.max_iter;
  cfg.start = fp::parse_start_guess(a.start);
  cfg.backtracking = a.backtracking;
  cfg.validate();

  fp::OutputSet out(g.out_dir);
  const auto [sol, status, poly] = fp::with_precision(cfg.precision_digits, [&](auto zero) {
    using Real = decltype(zero);
    const auto rep = fp::solve<Real>(cfg);
    return std::make_tuple(fp::solution_to_json(cfg, rep), rep.status, rep.coeffs.template cast<double>());
  });
  out.write("solution.json", sol.dump(2) + "\n");
  const auto w = fp::sample_waveform(poly, a.T, a.n_t);
  out.write("waveform.csv", csv_of([&](std::ostream& os) { fp::write_waveform_csv(os, w); }));

  fp::RunManifest m;
  m.command = "synth";
  m.parameters = {{"k", a.k},           {"theta_pi_multiple", a.theta_pi_multiple},
                  {"alpha", a.alpha},   {"epsilon", a.epsilon},
                  {"precision_digits", a.precision_digits},
                  {"max_iter", a.max_iter}, {"start", a.start},
                  {"backtracking", a.backtracking}, {"T", a.T},
                  {"n_t", a.n_t}};
  out.finish(m);

  std::cout << "status " << fp::to_string(status) << ", iterations " << sol["iterations"] << ", residual "
            << sol["residual_final"] << "\n";
  if (status != fp::SolveStatus::Converged) {
    std::cerr << "synthesis did not converge: " << fp::to_string(status) << "\n";
    return kComputeFailure;
  }
  return kOk;
}

// ----------------------------------------------------------------- filter

struct FilterArgs {
  std::string solution;
  int udd = 0;
  double lo = fp::kFilterGridLo;
  double hi = fp::kFilterGridHi;
  int n = fp::kFilterGridPoints;
  int precision_digits = -1;
  double fit_lo = fp::kSlopeWindowLo;
  double fit_hi = fp::kSlopeWindowHi;
};

int cmd_filter(const Globals& g, const FilterArgs& a) {
  if (a.solution.empty() == (a.udd == 0)) throw std::invalid_argument("give exactly one of --solution or --udd");
  if (a.udd < 0) throw std::invalid_argument("--udd must be >= 1");
  const auto grid = fp::log_grid(a.lo, a.hi, a.n);
  if (!(a.fit_lo > 0 && a.fit_hi > a.fit_lo)) throw std::invalid_argument("fit window needs 0 < lo < hi");
  if (a.precision_digits >= 0) fp::precision_tier(a.precision_digits);

  fp::FilterSamples s;
  json params = {{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}, {"fit_lo", a.fit_lo}, {"fit_hi", a.fit_hi}};
  int digits = a.precision_digits;
  if (a.udd > 0) {
    if (digits < 0) digits = 0;
    const auto d = fp::udd_sequence(a.udd);
    s = fp::with_precision(digits, [&](auto zero) { return fp::filter_samples<decltype(zero)>(d, grid); });
    params["udd"] = a.udd;
  } else {
    const auto stored = fp::load_solution(a.solution);
    if (digits < 0) digits = stored.precision_digits;
    s = fp::with_precision(digits, [&](auto zero) {
      using Real = decltype(zero);
      return fp::filter_samples<Real>(fp::SmoothPhase<Real>{stored.poly<Real>()}, grid);
    });
    params["solution"] = a.solution;
    params["solution_sha256"] = fp::sha256_hex(fp::read_file(a.solution));
  }
  params["precision_digits"] = digits;

  json slope;
  slope["window"] = {a.fit_lo, a.fit_hi};
  try {
    slope["slope"] = fp::slope_fit(s, a.fit_lo, a.fit_hi);
  } catch (const std::exception& e) {
    throw ComputeFailure(std::string("slope fit failed: ") + e.what());
  }

  fp::OutputSet out(g.out_dir);
  out.write("filter.csv", csv_of([&](std::ostream& os) { fp::write_filter_csv(os, s); }));
  out.write("slope.json", slope.dump(2) + "\n");
  fp::RunManifest m;
  m.command = "filter";
  m.parameters = params;
  out.finish(m);
  std::cout << "slope " << slope["slope"] << "\n";
  return kOk;
}

// ----------------------------------------------------------------- curves

struct CurvesArgs {
  std::string solution;
  int n_s = fp::kDefaultCurveSamples;
};

int cmd_curves(const Globals& g, const CurvesArgs& a) {
  if (a.n_s < 65 || a.n_s % 2 == 0) throw std::invalid_argument("--n-s must be odd and >= 65");
  const auto stored = fp::load_solution(a.solution);
  const auto poly = stored.poly<double>();
  const auto h = fp::r_sequence(poly, stored.k, a.n_s);
  json defects;
  defects["k"] = stored.k;
  defects["defects"] = h.closure_defects;
  defects["max_defect"] = h.closure_defects.empty() ? 0.0 : *std::max_element(h.closure_defects.begin(), h.closure_defects.end());
  defects["cusp_tangent_jump"] = fp::cusp_tangent_jump(h, poly);
  defects["area_r0"] = fp::curve_area(h);

  fp::OutputSet out(g.out_dir);
  out.write("curves.csv", csv_of([&](std::ostream& os) { fp::write_curves_csv(os, h); }));
  out.write("defects.json", defects.dump(2) + "\n");
  fp::RunManifest m;
  m.command = "curves";
  m.parameters = {{"solution", a.solution}, {"solution_sha256", fp::sha256_hex(fp::read_file(a.solution))}, {"n_s", a.n_s}};
  out.finish(m);
  std::cout << "max defect " << defects["max_defect"] << "\n";
  return kOk;
}

// --------------------------------------------------------------- spectrum

struct SpectrumArgs {
  std::string noise = "vrqb";
  double lambda = 1e-2;
  double omega_B = 1.0;
  double beta = 0.0;
  double nu_a = 0.01;
  double nu_b = 1.0;
  double lo = 1e-3;
  double hi = 5.0;
  int n = 200;
  bool empirical = false;
  int m = 200;
  int n_seeds = 20;
  int n_traj = 200;
  int n_components = fp::kDefaultRtnComponents;
};

int cmd_spectrum(const Globals& g, const SpectrumArgs& a) {
  if (a.noise != "vrqb" && a.noise != "rtn") throw std::invalid_argument("--noise must be vrqb or rtn");
  if (!(a.omega_B > 0) || !(a.beta >= 0)) throw std::invalid_argument("need omega_B > 0 and beta >= 0");
  if (!(a.nu_a > 0 && a.nu_b > a.nu_a)) throw std::invalid_argument("need 0 < nu_a < nu_b");
  if (a.m < 2 || a.n_seeds < 1 || a.n_traj < 1) throw std::invalid_argument("ensemble sizes must be positive");
  const auto grid = fp::log_grid(a.lo, a.hi, a.n);

  fp::SpectrumModel S;
  S.kind = a.noise == "vrqb" ? fp::SpectrumKind::VRQB : fp::SpectrumKind::RTN;
  S.lambda = a.lambda;
  S.omega_B = a.omega_B;
  S.beta = a.beta;
  S.nu_a = a.nu_a;
  S.nu_b = a.nu_b;

  std::ostringstream os;
  os << std::setprecision(17) << "omega,S\n";
  for (double w : grid) os << w << ',' << S(w) << '\n';

  fp::OutputSet out(g.out_dir);
  out.write("spectrum.csv", os.str());
  std::vector<std::uint64_t> seeds{g.seed};

  if (a.empirical && a.noise == "vrqb") {
    std::vector<double> acc(grid.size(), 0.0);
    std::vector<fp::EmpiricalSpectrum> runs(a.n_seeds);
    fp::parallel_for(a.n_seeds, g.jobs, [&](std::size_t s) {
      const auto bath = fp::build_bath(a.m, a.omega_B, a.beta, a.lambda, fp::derive_seed(g.seed, s));
      runs[s] = fp::empirical_bath_spectrum(bath, 40.0 / a.omega_B, 0.05 / a.omega_B, grid);
    });
    for (const auto& r : runs)
      for (std::size_t i = 0; i < grid.size(); ++i) acc[i] += r.S[i] / a.n_seeds;
    std::ostringstream e;
    e << std::setprecision(17) << "omega,S\n";
    for (std::size_t i = 0; i < grid.size(); ++i) e << grid[i] << ',' << acc[i] << '\n';
    out.write("spectrum_empirical.csv", e.str());
  } else if (a.empirical) {
    const std::size_t n_samples = 1u << 16;
    const auto p = fp::rtn_periodogram(a.nu_a, a.nu_b, a.n_components, n_samples, 0.01 / a.nu_b, a.n_traj, g.seed);
    std::ostringstream e;
    e << std::setprecision(17) << "omega,S\n";
    const double l2 = a.lambda * a.lambda;
    for (std::size_t i = 0; i < p.omega.size(); ++i) e << p.omega[i] << ',' << l2 * p.S[i] << '\n';
    out.write("spectrum_empirical.csv", e.str());
  }

  fp::RunManifest m;
  m.command = "spectrum";
  m.parameters = {{"noise", a.noise}, {"lambda", a.lambda}, {"omega_B", a.omega_B}, {"beta", a.beta},
                  {"nu_a", a.nu_a},   {"nu_b", a.nu_b},     {"lo", a.lo},           {"hi", a.hi},
                  {"n", a.n},         {"empirical", a.empirical}, {"m", a.m},      {"n_seeds", a.n_seeds},
                  {"n_traj", a.n_traj}, {"n_components", a.n_components}};
  m.seeds = seeds;
  out.finish(m);
  return kOk;
}

// ------------------------------------------------------------------ sweep

struct SweepArgs {
  std::string config;
  std::string methods;
  std::string protocols;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_sweep(const Globals& g, const SweepArgs& a, bool seed_given) {
  const std::string text = fp::read_file(a.config);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  auto cfg = fp::parse_sim_config(j);
  if (!a.methods.empty()) cfg.methods = split_commas(a.methods);
  if (!a.protocols.empty()) cfg.protocols = split_commas(a.protocols);
  if (seed_given) cfg.seed = g.seed;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  fp::PhasePolynomial<fp::PulseReal> pulse;
  bool need_pulse = false;
  for (const auto& p : cfg.protocols) need_pulse |= p == "smooth";
  if (need_pulse) {
    try {
      pulse = fp::synthesize_pulse(cfg);
    } catch (const std::runtime_error& e) {
      throw ComputeFailure(e.what());
    }
  }
  const auto points = fp::run_sweep(cfg, pulse, g.jobs);

  fp::OutputSet out(g.out_dir);
  out.write("sweep.csv", fp::sweep_csv(points));
  fp::RunManifest m;
  m.command = "sweep";
  m.parameters = fp::sim_config_to_json(cfg);
  m.seeds = {cfg.seed};
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.finish(m);

  int failed = 0;
  for (const auto& p : points)
    if (!p.ok) {
      ++failed;
      std::cerr << "point " << p.method << '/' << p.protocol << " wT=" << p.omegaB_T << " failed: " << p.error << "\n";
    }
  std::cout << points.size() - failed << " of " << points.size() << " points computed\n";
  return failed ? kComputeFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flat-filter pulse synthesis and noise analysis"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.fallthrough();

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Solve for a flattened pulse");
  synth->add_option("--k", sa.k, "Suppression order")->capture_default_str();
  synth->add_option("--theta-pi-multiple", sa.theta_pi_multiple, "Rotation angle in units of pi")->capture_default_str();
  synth->add_option("--alpha", sa.alpha, "Newton damping in (0, 1]")->capture_default_str();
  synth->add_option("--epsilon", sa.epsilon, "Residual tolerance")->capture_default_str();
  synth->add_option("--precision-digits", sa.precision_digits, "0 for double, else 32/50/100")->capture_default_str();
  synth->add_option("--max-iter", sa.max_iter)->capture_default_str();
  synth->add_option("--start", sa.start, "area_matched or shifted")->capture_default_str();
  synth->add_flag("--backtracking", sa.backtracking, "Halve steps that the quadrature cannot resolve");
  synth->add_option("--T", sa.T, "Waveform duration")->capture_default_str();
  synth->add_option("--n-t", sa.n_t, "Waveform samples")->capture_default_str();

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Filter function samples and slope");
  filter->add_option("--solution", fa.solution, "Solution JSON");
  filter->add_option("--udd", fa.udd, "Use ideal UDD_n instead of a solution");
  filter->add_option("--lo", fa.lo)->capture_default_str();
  filter->add_option("--hi", fa.hi)->capture_default_str();
  filter->add_option("--n", fa.n)->capture_default_str();
  filter->add_option("--precision-digits", fa.precision_digits, "Defaults to the solution's precision");
  filter->add_option("--fit-lo", fa.fit_lo)->capture_default_str();
  filter->add_option("--fit-hi", fa.fit_hi)->capture_default_str();

  CurvesArgs ca;
  auto* curves = app.add_subcommand("curves", "Iterated-integral curves and closure defects");
  curves->add_option("--solution", ca.solution, "Solution JSON")->required();
  curves->add_option("--n-s", ca.n_s, "Odd sample count")->capture_default_str();

  SpectrumArgs pa;
  auto* spectrum = app.add_subcommand("spectrum", "Noise spectra");
  spectrum->add_option("--noise", pa.noise, "vrqb or rtn")->capture_default_str();
  spectrum->add_option("--lambda", pa.lambda)->capture_default_str();
  spectrum->add_option("--omega-B", pa.omega_B)->capture_default_str();
  spectrum->add_option("--beta", pa.beta)->capture_default_str();
  spectrum->add_option("--nu-a", pa.nu_a)->capture_default_str();
  spectrum->add_option("--nu-b", pa.nu_b)->capture_default_str();
  spectrum->add_option("--lo", pa.lo)->capture_default_str();
  spectrum->add_option("--hi", pa.hi)->capture_default_str();
  spectrum->add_option("--n", pa.n)->capture_default_str();
  spectrum->add_flag("--empirical", pa.empirical, "Also estimate the spectrum by sampling");
  spectrum->add_option("--m", pa.m, "Bath dimension")->capture_default_str();
  spectrum->add_option("--n-seeds", pa.n_seeds)->capture_default_str();
  spectrum->add_option("--n-traj", pa.n_traj)->capture_default_str();
  spectrum->add_option("--n-components", pa.n_components)->capture_default_str();

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Infidelity sweep from a JSON config");
  sweep->add_option("config", wa.config, "Config file")->required();
  sweep->add_option("--methods", wa.methods, "Comma list: leading,quantum,classical");
  sweep->add_option("--protocols", wa.protocols, "Comma list: smooth,udd6");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidInput;
  }

  try {
    if (*synth) return cmd_synth(g, sa);
    if (*filter) return cmd_filter(g, fa);
    if (*curves) return cmd_curves(g, ca);
    if (*spectrum) return cmd_spectrum(g, pa);
    if (*sweep) return cmd_sweep(g, wa, app.count("--seed") > 0);
  } catch (const fp::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "computation failed: " << e.what() << "\n";
    return kComputeFailure;
  }
  return kInvalidInput;
}
