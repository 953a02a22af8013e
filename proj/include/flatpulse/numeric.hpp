#pragma once

// Scalar plumbing shared by every flatpulse module: working-precision
// types, a complex pair usable with multiprecision reals, Gauss-Legendre
// rules and a small pivoted LU for the Newton systems.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/mpfr.hpp>

namespace flatpulse {

namespace mp = boost::multiprecision;

/// Extended-precision reals with a fixed number of decimal digits.
template <unsigned Digits>
using Extended = mp::number<mp::mpfr_float_backend<Digits>, mp::et_off>;

using Extended32 = Extended<32>;
using Extended50 = Extended<50>;
using Extended100 = Extended<100>;

/// Precision tiers reachable from a runtime `precision_digits` setting.
/// 0 selects native double; anything else rounds up to 32, 50 or 100 digits.
enum class PrecisionTier { Double, Digits32, Digits50, Digits100 };

inline PrecisionTier precision_tier(int digits) {
  if (digits < 0) throw std::invalid_argument("precision_digits must be >= 0");
  if (digits == 0) return PrecisionTier::Double;
  if (digits <= 32) return PrecisionTier::Digits32;
  if (digits <= 50) return PrecisionTier::Digits50;
  if (digits <= 100) return PrecisionTier::Digits100;
  throw std::invalid_argument("precision_digits above 100 is not supported");
}

inline int tier_digits(PrecisionTier tier) {
  switch (tier) {
    case PrecisionTier::Double: return 0;
    case PrecisionTier::Digits32: return 32;
    case PrecisionTier::Digits50: return 50;
    case PrecisionTier::Digits100: return 100;
  }
  return 0;
}

/// Calls `fn(Real{})` with the scalar type matching `digits`.
template <class Fn>
decltype(auto) with_precision(int digits, Fn&& fn) {
  switch (precision_tier(digits)) {
    case PrecisionTier::Double: return fn(double{});
    case PrecisionTier::Digits32: return fn(Extended32{});
    case PrecisionTier::Digits50: return fn(Extended50{});
    case PrecisionTier::Digits100: return fn(Extended100{});
  }
  return fn(double{});
}

template <class Real>
inline Real pi() {
  return boost::math::constants::pi<Real>();
}

template <class Real>
inline Real unit_roundoff() {
  return std::numeric_limits<Real>::epsilon() / 2;
}

template <class Real>
inline double to_double(const Real& x) {
  return static_cast<double>(x);
}

template <class Real>
inline std::string to_string_full(const Real& x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<Real>::max_digits10);
  os << x;
  return os.str();
}

/// Complex pair over an arbitrary real type. std::complex is only
/// specified for the builtin floating types, so multiprecision code uses this.
template <class Real>
struct Cplx {
  Real re{0};
  Real im{0};

  Cplx() = default;
  Cplx(Real r, Real i = Real(0)) : re(std::move(r)), im(std::move(i)) {}

  static Cplx polar_unit(const Real& angle) {
    using std::cos;
    using std::sin;
    return {cos(angle), sin(angle)};
  }

  Cplx& operator+=(const Cplx& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Cplx& operator-=(const Cplx& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  Cplx& operator*=(const Real& s) {
    re *= s;
    im *= s;
    return *this;
  }
  friend Cplx operator+(Cplx a, const Cplx& b) { return a += b; }
  friend Cplx operator-(Cplx a, const Cplx& b) { return a -= b; }
  friend Cplx operator*(Cplx a, const Real& s) { return a *= s; }
  friend Cplx operator*(const Real& s, Cplx a) { return a *= s; }
  friend Cplx operator*(const Cplx& a, const Cplx& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend Cplx operator/(const Cplx& a, const Cplx& b) {
    Real d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
  }

  Real norm() const { return re * re + im * im; }
  Real abs() const {
    using std::sqrt;
    return sqrt(norm());
  }
  /// Multiplies by i^n.
  Cplx times_i_pow(int n) const {
    switch (((n % 4) + 4) % 4) {
      case 0: return *this;
      case 1: return {-im, re};
      case 2: return {-re, -im};
      default: return {im, -re};
    }
  }
  std::complex<double> to_std() const { return {to_double(re), to_double(im)}; }
};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
/// Nodes are stored in increasing order and are exactly antisymmetric.
template <class Real>
struct GaussLegendreRule {
  std::vector<Real> nodes;
  std::vector<Real> weights;
};

namespace detail {

template <class Real>
GaussLegendreRule<Real> compute_gauss_legendre(int n) {
  using std::abs;
  using std::cos;
  GaussLegendreRule<Real> rule;
  rule.nodes.assign(n, Real(0));
  rule.weights.assign(n, Real(0));
  const int half = (n + 1) / 2;
  const Real tol = std::numeric_limits<Real>::epsilon() * 4;
  for (int i = 0; i < half; ++i) {
    // Seed in double, polish in Real.
    Real z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    Real dp(0);
    for (int iter = 0; iter < 100; ++iter) {
      Real p1(1), p2(0);
      for (int j = 1; j <= n; ++j) {
        Real p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
      }
      dp = n * (z * p1 - p2) / (z * z - 1);
      Real dz = p1 / dp;
      z -= dz;
      if (abs(dz) <= tol * (1 + abs(z))) {
        // One more evaluation at the polished root for the weight.
        Real q1(1), q2(0);
        for (int j = 1; j <= n; ++j) {
          Real q3 = q2;
          q2 = q1;
          q1 = ((2 * j - 1) * z * q2 - (j - 1) * q3) / j;
        }
        dp = n * (z * q1 - q2) / (z * z - 1);
        break;
      }
    }
    Real w = 2 / ((1 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = Real(0);
  return rule;
}

}  // namespace detail

/// Cached per thread, so concurrent callers never share mutable state.
template <class Real>
const GaussLegendreRule<Real>& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs n >= 1");
  thread_local std::map<int, GaussLegendreRule<Real>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre<Real>(n)).first;
  return it->second;
}

/// Dense row-major square matrix over Real, sized for Newton systems.
template <class Real>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), data_(n * n, Real(0)) {}

  std::size_t size() const { return n_; }
  Real& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  const Real& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

  Real norm1() const {
    using std::abs;
    Real best(0);
    for (std::size_t c = 0; c < n_; ++c) {
      Real s(0);
      for (std::size_t r = 0; r < n_; ++r) s += abs((*this)(r, c));
      best = std::max(best, s);
    }
    return best;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Real> data_;
};

/// LU factorization with partial pivoting. `singular()` is set when a
/// pivot is exactly zero; near-singularity is judged by `condition1()`.
template <class Real>
class PivotedLU {
 public:
  explicit PivotedLU(SquareMatrix<Real> a) : lu_(std::move(a)), perm_(lu_.size()) {
    using std::abs;
    const std::size_t n = lu_.size();
    anorm_ = lu_.norm1();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      Real best = abs(lu_(k, k));
      for (std::size_t r = k + 1; r < n; ++r) {
        if (abs(lu_(r, k)) > best) {
          best = abs(lu_(r, k));
          piv = r;
        }
      }
      if (best == 0) {
        singular_ = true;
        return;
      }
      if (piv != k) {
        for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(piv, c));
        std::swap(perm_[k], perm_[piv]);
      }
      for (std::size_t r = k + 1; r < n; ++r) {
        lu_(r, k) /= lu_(k, k);
        const Real f = lu_(r, k);
        for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
      }
    }
  }

  bool singular() const { return singular_; }

  std::vector<Real> solve(const std::vector<Real>& b) const {
    const std::size_t n = lu_.size();
    std::vector<Real> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      Real s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      Real s = x[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
      x[ii] = s / lu_(ii, ii);
    }
    return x;
  }

  /// 1-norm condition number from the explicit inverse (n is small).
  Real condition1() const {
    if (singular_) return std::numeric_limits<Real>::infinity();
    using std::abs;
    const std::size_t n = lu_.size();
    Real inv_norm(0);
    std::vector<Real> e(n, Real(0));
    for (std::size_t c = 0; c < n; ++c) {
      std::fill(e.begin(), e.end(), Real(0));
      e[c] = 1;
      auto col = solve(e);
      Real s(0);
      for (const auto& v : col) s += abs(v);
      inv_norm = std::max(inv_norm, s);
    }
    return anorm_ * inv_norm;
  }

 private:
  SquareMatrix<Real> lu_;
  std::vector<std::size_t> perm_;
  Real anorm_{0};
  bool singular_ = false;
};

template <class Real>
Real max_abs(const std::vector<Real>& v) {
  using std::abs;
  Real m(0);
  for (const auto& x : v) m = std::max(m, Real(abs(x)));
  return m;
}

}  // namespace flatpulse
