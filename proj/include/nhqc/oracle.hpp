#ifndef NHQC_ORACLE_HPP
#define NHQC_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "nhqc/types.hpp"

// Independent verification routes. Nothing here shares code with the
// production paths it checks: eigenvalues come from the characteristic
// polynomial, matrix exponentials from a Taylor series, level statistics
// from direct Monte Carlo.

namespace nhqc::oracle {

using LComplex = std::complex<long double>;

/// Eigenvalues via Faddeev-LeVerrier characteristic-polynomial coefficients
/// and Durand-Kerner root iteration, in extended precision. Intended for
/// dimensions up to ~30.
inline std::vector<Complex> charpoly_eigenvalues(const Matrix& H,
                                                 int max_iter = 4000) {
  const long n = H.rows();
  using LMatrix =
      Eigen::Matrix<LComplex, Eigen::Dynamic, Eigen::Dynamic>;

  // Scale to keep coefficients in range: coefficients of det(xI - A/s).
  double s = 0;
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) s = std::max(s, std::abs(H(i, j)));
  s = std::max(s, 1.0);
  LMatrix A(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i)
      A(i, j) = LComplex(H(i, j).real() / s, H(i, j).imag() / s);

  // p(x) = x^n + c[n-1] x^(n-1) + ... + c[0]
  std::vector<LComplex> c(n);
  LMatrix M = LMatrix::Identity(n, n);
  for (long k = 1; k <= n; ++k) {
    M = (A * M).eval();
    const LComplex ck = -M.trace() / static_cast<long double>(k);
    c[n - k] = ck;
    for (long j = 0; j < n; ++j) M(j, j) += ck;
  }

  auto eval = [&](LComplex x) {
    LComplex p = 1;
    for (long k = n - 1; k >= 0; --k) p = p * x + c[k];
    return p;
  };

  long double radius = 1;
  for (long k = 0; k < n; ++k) radius = std::max(radius, std::abs(c[k]));
  radius = 1 + radius;
  std::vector<LComplex> w(n);
  for (long j = 0; j < n; ++j) {
    const long double a =
        2 * static_cast<long double>(kPi) * j / n + 0.40123L;
    w[j] = radius * LComplex(std::cos(a), std::sin(a));
  }
  for (int it = 0; it < max_iter; ++it) {
    long double step = 0;
    for (long j = 0; j < n; ++j) {
      LComplex denom = 1;
      for (long k = 0; k < n; ++k)
        if (k != j) denom *= (w[j] - w[k]);
      const LComplex d = eval(w[j]) / denom;
      w[j] -= d;
      step = std::max(step, std::abs(d));
    }
    if (step < 1e-15L * radius) break;
  }

  std::vector<Complex> out(n);
  for (long j = 0; j < n; ++j)
    out[j] = Complex(static_cast<double>(w[j].real() * s),
                     static_cast<double>(w[j].imag() * s));
  return out;
}

/// 2x2 matrix exponential by scaling-and-squaring with a Taylor series.
inline Matrix2 expm2(const Matrix2& A) {
  double norm = A.cwiseAbs().maxCoeff();
  int squarings = 0;
  Matrix2 B = A;
  while (norm > 0.5) {
    B /= 2;
    norm /= 2;
    ++squarings;
  }
  Matrix2 result = Matrix2::Identity();
  Matrix2 term = Matrix2::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = (term * B / static_cast<double>(k)).eval();
    result += term;
  }
  for (int k = 0; k < squarings; ++k) result = (result * result).eval();
  return result;
}

/// Mean adjacent-gap ratio of i.i.d. exponential spacings (Poisson
/// statistics); the analytic limit is 2 ln 2 - 1.
inline double poisson_agr_mc(long n_spacings, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ed(1.0);
  double prev = ed(rng);
  double sum = 0;
  long count = 0;
  for (long j = 1; j < n_spacings; ++j) {
    const double cur = ed(rng);
    sum += std::min(prev, cur) / std::max(prev, cur);
    ++count;
    prev = cur;
  }
  return sum / static_cast<double>(count);
}

/// Largest pairing distance between two complex multisets, by greedy
/// nearest matching (robust where lexicographic sorting reorders
/// conjugate pairs under roundoff).
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0;
  std::vector<bool> used(b.size(), false);
  for (const Complex& x : a) {
    double best = 1e300;
    size_t best_j = 0;
    for (size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    used[best_j] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

inline double multiset_distance(const Vector& a, const Vector& b) {
  return multiset_distance(
      std::vector<Complex>(a.data(), a.data() + a.size()),
      std::vector<Complex>(b.data(), b.data() + b.size()));
}

/// Winding of the V=0 two-band ring from the closed-form momentum product:
/// det(H(t) - E) = prod_m (JL e^{i(k_m - t/L)} + JR e^{-i(k_m - t/L)} - E)^2,
/// phase-accumulated on a fine grid.
inline double brute_winding_free_ring(double JL, double JR, long L, Complex base,
                                      long grid = 10000) {
  double total = 0, prev = 0;
  for (long g = 0; g <= grid; ++g) {
    const double t = 2 * kPi * static_cast<double>(g) / grid;
    double phase = 0;
    for (long m = 0; m < L; ++m) {
      const double k = 2 * kPi * static_cast<double>(m) / L - t / L;
      const Complex lam =
          JL * std::polar(1.0, k) + JR * std::polar(1.0, -k) - base;
      phase += 2 * std::arg(lam);
    }
    if (g > 0) total += principal_angle(phase - prev);
    prev = phase;
  }
  return total / (2 * kPi);
}

}  // namespace nhqc::oracle

#endif  // NHQC_ORACLE_HPP
