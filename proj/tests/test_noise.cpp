#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flatpulse/noise.hpp"

using namespace flatpulse;

namespace {
const double kPi = std::acos(-1.0);
}

TEST(Gue, Hermitian) {
  const auto w = sample_gue(30, 5);
  EXPECT_EQ((w - w.adjoint()).norm(), 0.0);
}

TEST(Gue, SemicircleCdf) {
  const int m = 200;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sample_gue(m, 17) / std::sqrt(double(m)));
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::sort(ev.begin(), ev.end());
  auto cdf = [](double u) {
    u = std::clamp(u, -2.0, 2.0);
    return 0.5 + (u * std::sqrt(4 - u * u) / 4 + std::asin(u / 2)) / kPi;
  };
  double worst = 0;
  for (int i = 0; i < m; ++i) {
    worst = std::max(worst, std::abs(cdf(ev[i]) - double(i) / m));
    worst = std::max(worst, std::abs(cdf(ev[i]) - double(i + 1) / m));
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Gue, ZeroMeanAndUnitVariance) {
  const int m = 100;
  const auto w = sample_gue(m, 99);
  double sum = 0, diag2 = 0, off2 = 0;
  int n = 0;
  for (int i = 0; i < m; ++i) {
    diag2 += std::norm(w(i, i));
    for (int j = 0; j < m; ++j) {
      sum += w(i, j).real();
      ++n;
      if (j != i) off2 += std::norm(w(i, j));
    }
  }
  // Var of the summed real parts is m (diagonal) + m(m-1)/2 (off-diagonal pairs).
  EXPECT_LT(std::abs(sum), 3 * std::sqrt(m + m * (m - 1) / 2.0));
  EXPECT_NEAR(diag2 / m, 1.0, 0.3);
  EXPECT_NEAR(off2 / (m * (m - 1)), 1.0, 0.05);
}

TEST(Gue, RejectsTinyDimension) { EXPECT_THROW(sample_gue(1, 0), std::invalid_argument); }

TEST(Bath, InfiniteTemperature) {
  const auto b = build_bath(40, 1.0, 0.0, 0.01, 3);
  const auto rho = b.rho_B();
  EXPECT_LT((rho - MatrixXcd::Identity(40, 40) / 40.0).norm(), 1e-13);
}

TEST(Bath, Invariants) {
  const int m = 200;
  const auto b = build_bath(m, 2.0, 0.7, 0.01, 8);
  EXPECT_LT((b.B - b.B.adjoint()).norm(), 1e-13);
  EXPECT_LT((b.H_B - b.H_B.adjoint()).norm(), 1e-13);
  const auto rho = b.rho_B();
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> r(rho);
  EXPECT_GE(r.eigenvalues().minCoeff(), -1e-15);
  const double delta = 4 * std::pow(m, -2.0 / 3.0);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eb(b.B);
  EXPECT_LE(eb.eigenvalues().cwiseAbs().maxCoeff(), 2 + delta);
  EXPECT_LE((b.bath_eigvals / 2.0).cwiseAbs().maxCoeff(), 2 + delta);
}

TEST(Bath, IndependentSubSeeds) {
  // Correlation of matched entries of B and H_B over 50 draws.
  std::vector<double> x, y;
  for (int s = 0; s < 50; ++s) {
    const auto b = build_bath(20, 1.0, 0.0, 0.0, s);
    for (int i = 0; i < 20; ++i)
      for (int j = i; j < 20; ++j) {
        x.push_back(b.B(i, j).real());
        y.push_back(b.H_B(i, j).real());
      }
  }
  const double n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 3 / std::sqrt(n));
}

TEST(Bath, Deterministic) {
  const auto a = build_bath(30, 1.0, 0.5, 0.01, 42), b = build_bath(30, 1.0, 0.5, 0.01, 42);
  EXPECT_EQ((a.B - b.B).norm(), 0.0);
  EXPECT_EQ((a.H_B - b.H_B).norm(), 0.0);
  EXPECT_EQ((a.populations - b.populations).norm(), 0.0);
}

TEST(Vrqb, HardCutoff) {
  for (double w : {4.0, -4.0, 4.5, 100.0}) EXPECT_EQ(vrqb_spectrum(w, 0.1, 1.0, 0.0), 0.0);
  EXPECT_EQ(vrqb_spectrum(8.0, 0.1, 2.0, 1.0), 0.0);
  EXPECT_GT(vrqb_spectrum(3.99, 0.1, 1.0, 0.0), 0.0);
}

TEST(Vrqb, ZeroFrequencyValue) {
  const double lambda = 0.3, wB = 2.0;
  EXPECT_NEAR(vrqb_spectrum(0.0, lambda, wB, 0.0) / (16 * lambda * lambda / (3 * kPi * wB)), 1.0, 1e-6);
  EXPECT_NEAR(vrqb_spectrum(0.0, 1.0, 1.0, 0.0), 1.69765, 1e-5);
}

TEST(Vrqb, SymmetricAtInfiniteTemperature) {
  for (double w : {0.1, 1.3, 3.7}) EXPECT_NEAR(vrqb_spectrum(w, 1.0, 1.0, 0.0), vrqb_spectrum(-w, 1.0, 1.0, 0.0), 1e-12);
}

TEST(Vrqb, SumRule) {
  // int S dw / 2 pi = lambda^2.
  const double lambda = 0.2, wB = 1.5;
  for (double beta : {0.0, 1.0}) {
    const double I = detail::edge_smoothed_integral(
        [&](double w) { return vrqb_spectrum(w, lambda, wB, beta); }, -4 * wB, 4 * wB, 1e-12);
    EXPECT_NEAR(I / (2 * kPi) / (lambda * lambda), 1.0, 1e-6) << beta;
  }
}

TEST(Vrqb, DetailedBalance) {
  // Shifting u -> u + w/w_B in the convolution gives S(-w) = exp(beta w) S(w).
  const double beta = 0.8;
  for (double w : {0.5, 1.5, 3.0})
    EXPECT_NEAR(vrqb_spectrum(-w, 1.0, 1.0, beta), std::exp(beta * w) * vrqb_spectrum(w, 1.0, 1.0, beta),
                1e-8 * vrqb_spectrum(-w, 1.0, 1.0, beta));
}

TEST(EmpiricalSpectrum, ZeroTimeCorrelator) {
  const double lambda = 0.05;
  const auto b = build_bath(200, 1.0, 0.0, lambda, 4);
  const auto e = empirical_bath_spectrum(b, 20.0, 0.05, {0.0});
  EXPECT_NEAR(e.C[0].real(), lambda * lambda, 0.1 * lambda * lambda);
  EXPECT_EQ(e.C[0].imag(), 0.0);
}

TEST(EmpiricalSpectrum, SmallEnsembleAtZero) {
  double acc = 0;
  const int seeds = 4;
  for (int s = 0; s < seeds; ++s) {
    const auto b = build_bath(200, 1.0, 0.0, 1.0, derive_seed(9, s));
    acc += empirical_bath_spectrum(b, 40.0, 0.05, {0.0}).S[0] / seeds;
  }
  EXPECT_NEAR(acc / vrqb_spectrum(0.0, 1.0, 1.0, 0.0), 1.0, 0.1);
}

TEST(EmpiricalSpectrum, RejectsCoarseGrid) {
  const auto b = build_bath(10, 1.0, 0.0, 1.0, 1);
  EXPECT_THROW(empirical_bath_spectrum(b, 10.0, 0.05, {0.0}), std::invalid_argument);
  EXPECT_THROW(empirical_bath_spectrum(b, 40.0, 0.1, {0.0}), std::invalid_argument);
}

TEST(Rtn, ZeroFrequencyLimit) {
  const double nu_a = 0.02;
  EXPECT_NEAR(rtn_spectrum(0.0, 1.0, nu_a, 100 * nu_a) * nu_a, 0.99 / std::log(100.0), 1e-12);
  EXPECT_NEAR(rtn_spectrum(0.0, 1.0, nu_a, 100 * nu_a) * nu_a, 0.21498, 1e-5);
  EXPECT_NEAR(rtn_spectrum(1e-9, 1.0, nu_a, 100 * nu_a), rtn_spectrum(0.0, 1.0, nu_a, 100 * nu_a), 1e-9);
}

TEST(Rtn, AsymptoticRegimes) {
  const double nu_a = 1e-3, nu_b = 1e3, c2 = 1 / std::log(nu_b / nu_a);
  EXPECT_NEAR(rtn_spectrum(1.0, 1.0, nu_a, nu_b) / (kPi * c2 / 1.0), 1.0, 0.01);
  const double w = 1e6;
  EXPECT_NEAR(rtn_spectrum(w, 1.0, nu_a, nu_b) / (4 * c2 * (nu_b - nu_a) / (w * w)), 1.0, 0.01);
}

TEST(Rtn, PositiveAndDecreasing) {
  double prev = rtn_spectrum(0.0, 1.0, 0.01, 1.0);
  for (double w = 1e-4; w < 1e4; w *= 1.3) {
    const double s = rtn_spectrum(w, 1.0, 0.01, 1.0);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, prev);
    prev = s;
  }
  EXPECT_THROW(rtn_spectrum(1.0, 1.0, 1.0, 0.5), std::invalid_argument);
}

TEST(RtnTrajectory, ComponentsAreTelegraphs) {
  std::mt19937_64 rng(1);
  int start = 0;
  const auto flips = telegraph_flips(3.0, 1000, 0.01, rng, start);
  for (int v : expand_telegraph(flips, start, 1000)) EXPECT_TRUE(v == 1 || v == -1);
}

TEST(RtnTrajectory, UnitVariance) {
  double s2 = 0;
  int n = 0;
  for (int r = 0; r < 10000; ++r) {
    const auto tr = sample_rtn_trajectory(0.01, 1.0, kDefaultRtnComponents, 1.0, 0.005, derive_seed(5, r));
    s2 += tr.samples[0] * tr.samples[0] + tr.samples.back() * tr.samples.back();
    n += 2;
  }
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(RtnTrajectory, Deterministic) {
  const auto a = sample_rtn_trajectory(0.01, 1.0, 20, 50.0, 0.005, 77);
  const auto b = sample_rtn_trajectory(0.01, 1.0, 20, 50.0, 0.005, 77);
  EXPECT_EQ(a.samples, b.samples);
}

TEST(RtnTrajectory, Preconditions) {
  EXPECT_THROW(sample_rtn_trajectory(0.01, 1.0, 20, 1.0, 0.02, 1), std::invalid_argument);
  EXPECT_THROW(sample_rtn_trajectory(0.01, 1.0, 5, 1.0, 0.005, 1), std::invalid_argument);
}

TEST(RtnPeriodogram, RoughAgreement) {
  // Small ensemble; the full 2000-trajectory comparison lives in the
  // acceptance suite.
  const double nu_a = 0.01, nu_b = 1.0;
  const auto p = rtn_periodogram(nu_a, nu_b, 20, 1u << 16, 0.01, 100, 3);
  double lo = 0, hi = 0;
  int n = 0;
  for (std::size_t i = 0; i < p.omega.size(); ++i) {
    if (p.omega[i] < 0.1 || p.omega[i] > 1.0) continue;
    lo += p.S[i];
    hi += rtn_spectrum(p.omega[i], 1.0, nu_a, nu_b);
    ++n;
  }
  ASSERT_GT(n, 10);
  EXPECT_NEAR(lo / hi, 1.0, 0.15);
}
