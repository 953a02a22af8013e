#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "flatpulse/phase.hpp"

using namespace flatpulse;

namespace {
const double kPi = std::acos(-1.0);

PhasePolynomial<double> k0_solution(double theta) { return PhasePolynomial<double>({3 * theta / 4, -theta / 4}); }
}  // namespace

TEST(EvalPhi, OddAtOrigin) { EXPECT_EQ(eval_phi(PhasePolynomial<double>({1.0}), 0.0), 0.0); }

TEST(EvalPhi, SignFlip) { EXPECT_DOUBLE_EQ(eval_phi(PhasePolynomial<double>({1.0, 1.0}), -1.0), -2.0); }

TEST(EvalPhi, K0SolutionEndpoint) { EXPECT_NEAR(eval_phi(k0_solution(kPi), 1.0), kPi / 2, 1e-15); }

TEST(EvalPhi, RejectsOutsideDomain) {
  EXPECT_THROW(eval_phi(PhasePolynomial<double>({1.0}), 1.0 + 1e-9), std::domain_error);
  EXPECT_NO_THROW(eval_phi(PhasePolynomial<double>({1.0}), 1.0 + 1e-13));
}

TEST(EvalOmega, SquareGuessIsConstant) {
  const int k = 3;
  const double theta = 4 * kPi, T = 2.5;
  const PhasePolynomial<double> p({((k + 1) * kPi + theta) / 2, 0, 0, 0, 0});
  for (double t : {0.0, 0.3, 1.1, 2.5}) EXPECT_NEAR(eval_omega(p, t, T), ((k + 1) * kPi + theta) / T, 1e-13);
}

TEST(EvalOmega, K0Midpoint) {
  const double theta = 1.3, T = 2.0;
  EXPECT_NEAR(eval_omega(k0_solution(theta), T / 2, T), 3 * theta / (2 * T), 1e-15);
}

TEST(EvalOmega, VanishesAtEnd) { EXPECT_NEAR(eval_omega(k0_solution(2.0), 3.0, 3.0), 0.0, 1e-15); }

TEST(EvalOmega, RejectsOutsideDuration) {
  EXPECT_THROW(eval_omega(k0_solution(1.0), -0.1, 1.0), std::domain_error);
  EXPECT_THROW(eval_omega(k0_solution(1.0), 1.1, 1.0), std::domain_error);
}

TEST(BoundaryResiduals, Examples) {
  const double theta = 2.2;
  auto r = boundary_residuals(k0_solution(theta), theta);
  EXPECT_NEAR(r.first, 0.0, 1e-15);
  EXPECT_NEAR(r.second, 0.0, 1e-15);
  r = boundary_residuals(PhasePolynomial<double>({2 * kPi, 0, 0}), 2 * kPi);
  EXPECT_NEAR(r.first, kPi, 1e-15);
  EXPECT_NEAR(r.second, 2 * kPi, 1e-15);
  r = boundary_residuals(PhasePolynomial<double>({0.0, 0.0}), 0.0);
  EXPECT_EQ(r.first, 0.0);
  EXPECT_EQ(r.second, 0.0);
}

TEST(SampleWaveform, ConstantPulse) {
  const auto w = sample_waveform(PhasePolynomial<double>({1.5}), 2.0, 3);
  ASSERT_EQ(w.amplitudes.size(), 3u);
  EXPECT_EQ(w.amplitudes[0], w.amplitudes[1]);
  EXPECT_EQ(w.amplitudes[1], w.amplitudes[2]);
  EXPECT_EQ(w.times.front(), 0.0);
  EXPECT_EQ(w.times.back(), 2.0);
}

TEST(SampleWaveform, ParabolaPeaksAtMidpoint) {
  const auto w = sample_waveform(k0_solution(kPi), 1.0, 101);
  std::size_t best = 0;
  for (std::size_t i = 0; i < w.amplitudes.size(); ++i)
    if (w.amplitudes[i] > w.amplitudes[best]) best = i;
  EXPECT_EQ(best, 50u);
  for (std::size_t i = 1; i < w.times.size(); ++i) EXPECT_GT(w.times[i], w.times[i - 1]);
}

TEST(SampleWaveform, RejectsSingleSample) { EXPECT_THROW(sample_waveform(k0_solution(1.0), 1.0, 1), std::invalid_argument); }

TEST(MaxSlope, ConstantIsZero) { EXPECT_EQ(max_slope(sample_waveform(PhasePolynomial<double>({2.0}), 1.0)), 0.0); }

TEST(MaxSlope, K0Solution) { EXPECT_NEAR(max_slope(sample_waveform(k0_solution(kPi), 1.0)), 6 * kPi, 1e-12); }

TEST(WaveformCsv, HeaderAndPrecision) {
  std::ostringstream os;
  write_waveform_csv(os, sample_waveform(k0_solution(1.0), 1.0, 3));
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("t,omega\n", 0), 0u);
  EXPECT_NE(s.find("0.5,1.5"), std::string::npos);
}

TEST(PhaseProperties, Oddness) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c(-10, 10), xs(-1, 1);
  std::uniform_int_distribution<int> n(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> coeffs(n(rng));
    for (auto& v : coeffs) v = c(rng);
    const PhasePolynomial<double> p(coeffs);
    const double x = xs(rng);
    const double a = eval_phi(p, x), b = eval_phi(p, -x);
    EXPECT_LE(std::abs(a + b), 1e-13 * std::max(1.0, std::abs(a)));
  }
}

TEST(PhaseProperties, ChainRule) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(-3, 3), xs(-0.99, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> coeffs(4);
    for (auto& v : coeffs) v = c(rng);
    const PhasePolynomial<double> p(coeffs);
    const double T = 1.7, x = xs(rng), h = 1e-5;
    const double fd = (eval_phi(p, x + h) - eval_phi(p, x - h)) / (2 * h);
    const double t = T * (x + 1) / 2;
    EXPECT_NEAR(fd, eval_omega(p, t, T) * T / 2, 1e-8);
  }
}

TEST(PhaseProperties, FieldSymmetric) {
  const PhasePolynomial<double> p({3.0, -1.2, 0.4, 0.05});
  const double T = 3.0;
  for (double t : {0.0, 0.4, 1.0, 1.3}) EXPECT_NEAR(eval_omega(p, t, T), eval_omega(p, T - t, T), 1e-12);
}
