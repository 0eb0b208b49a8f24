#ifndef NHQC_SPECTRAL_HPP
#define NHQC_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "nhqc/lapack.hpp"
#include "nhqc/model.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

struct DecomposeOptions {
  bool compute_left = true;
  /// Diagonal overlap |<L_j|R_j>| below this is a pairing breakdown
  /// (near-defective matrix).
  double pairing_tol = 1e-12;
  /// Exact-degeneracy cluster width, relative to the spectral radius.
  double cluster_tol = 1e-12;
  /// Retry once on a pairing breakdown with a seeded random perturbation of
  /// scale 1e-10 * |H| instead of failing. Off by default: never silently
  /// alter the model.
  bool perturb_retry = false;
  unsigned long long seed = 0;
};

/// Eigensystem of a non-Hermitian matrix: eigenvalues sorted by
/// (Re E, Im E), unit-normalized right vectors, and (optionally) left
/// vectors scaled to the bi-normalization <L_j|R_j'> = delta_{jj'}.
/// Left/right pairs come from a single Schur decomposition, so pairs share
/// an eigenvalue index by construction.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix right;
  Matrix left;  // empty when compute_left was false
  /// Smallest raw |<L_j|R_j>| encountered during bi-normalization;
  /// 1.0 means perfectly non-defective.
  double min_pair_overlap = 1.0;

  long dim() const { return eigenvalues.size(); }
  bool has_left() const { return left.size() > 0; }

  double spectral_radius() const {
    double r = 0;
    for (long j = 0; j < eigenvalues.size(); ++j)
      r = std::max(r, std::abs(eigenvalues[j]));
    return r;
  }
};

namespace detail {

inline void sort_by_eigenvalue(Vector& w, Matrix& vr, Matrix& vl, bool has_left) {
  const long n = w.size();
  std::vector<long> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](long a, long b) {
    if (w[a].real() != w[b].real()) return w[a].real() < w[b].real();
    return w[a].imag() < w[b].imag();
  });
  Vector w2(n);
  Matrix vr2(n, n), vl2;
  if (has_left) vl2.resize(n, n);
  for (long j = 0; j < n; ++j) {
    w2[j] = w[idx[j]];
    vr2.col(j) = vr.col(idx[j]);
    if (has_left) vl2.col(j) = vl.col(idx[j]);
  }
  w = std::move(w2);
  vr = std::move(vr2);
  if (has_left) vl = std::move(vl2);
}

/// Within clusters of (near-)equal eigenvalues the Schur-derived left and
/// right vectors can come out rotated against each other; re-pair greedily
/// by overlap before bi-normalizing.
inline void repair_cluster_pairing(const Vector& w, const Matrix& vr, Matrix& vl,
                                   double cluster_width) {
  const long n = w.size();
  long a = 0;
  while (a < n) {
    long b = a + 1;
    while (b < n && std::abs(w[b] - w[b - 1]) <= cluster_width) ++b;
    if (b - a > 1) {
      std::vector<long> pool(b - a);
      std::iota(pool.begin(), pool.end(), a);
      Matrix picked(n, b - a);
      for (long j = a; j < b; ++j) {
        double best = -1;
        size_t best_k = 0;
        for (size_t k = 0; k < pool.size(); ++k) {
          const double ov = std::abs(vl.col(pool[k]).dot(vr.col(j)));
          if (ov > best) {
            best = ov;
            best_k = k;
          }
        }
        picked.col(j - a) = vl.col(pool[best_k]);
        pool.erase(pool.begin() + best_k);
      }
      for (long j = a; j < b; ++j) vl.col(j) = picked.col(j - a);
    }
    a = b;
  }
}

inline SpectralDecomposition decompose_once(const Matrix& H,
                                            const DecomposeOptions& opts) {
  pin_blas_single_thread();
  const long n = H.rows();
  Matrix A = H;
  Vector w(n);
  Matrix vr(n, n), vl;
  if (opts.compute_left) vl.resize(n, n);
  const int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, opts.compute_left ? 'V' : 'N', 'V', static_cast<int>(n),
      A.data(), static_cast<int>(n), w.data(),
      opts.compute_left ? vl.data() : nullptr, static_cast<int>(n), vr.data(),
      static_cast<int>(n));
  if (info != 0)
    throw SolverFailure("zgeev failed (info = " + std::to_string(info) + ")");

  sort_by_eigenvalue(w, vr, vl, opts.compute_left);

  SpectralDecomposition dec;
  dec.eigenvalues = std::move(w);
  for (long j = 0; j < n; ++j) vr.col(j).normalize();
  dec.right = std::move(vr);

  if (opts.compute_left) {
    double radius = 0;
    for (long j = 0; j < n; ++j)
      radius = std::max(radius, std::abs(dec.eigenvalues[j]));
    repair_cluster_pairing(dec.eigenvalues, dec.right, vl,
                           opts.cluster_tol * std::max(radius, 1.0));
    for (long j = 0; j < n; ++j) {
      // Eigen's dot conjugates its first argument: d = <L_j|R_j>.
      const Complex d = vl.col(j).dot(dec.right.col(j));
      const double mag = std::abs(d) / vl.col(j).norm();
      dec.min_pair_overlap = std::min(dec.min_pair_overlap, mag);
      if (std::abs(d) < opts.pairing_tol)
        throw PairingFailure(
            "left/right pairing broke down at eigenvalue index " +
            std::to_string(j) + " (overlap " + format_double(std::abs(d)) +
            "); matrix is near-defective");
      vl.col(j) /= std::conj(d);
    }
    dec.left = std::move(vl);
  }
  return dec;
}

}  // namespace detail

inline SpectralDecomposition decompose(const Matrix& H,
                                       const DecomposeOptions& opts = {}) {
  if (H.rows() != H.cols()) throw InvalidSpec("matrix must be square");
  if (!H.allFinite()) throw InvalidSpec("matrix has non-finite entries");
  try {
    return detail::decompose_once(H, opts);
  } catch (const PairingFailure&) {
    if (!opts.perturb_retry) throw;
    std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> g;
    Matrix R(H.rows(), H.cols());
    for (long j = 0; j < H.cols(); ++j)
      for (long i = 0; i < H.rows(); ++i) R(i, j) = Complex(g(rng), g(rng));
    R *= 1e-10 * H.norm() / R.norm();
    return detail::decompose_once(H + R, opts);
  }
}

inline SpectralDecomposition decompose(const HamiltonianMatrix& H,
                                       const DecomposeOptions& opts = {}) {
  return decompose(H.mat, opts);
}

/// Global spectral-realness measures: extrema of |Im E| and the fraction of
/// eigenvalues whose |Im E| exceeds tol_imag (the numerical step function).
struct SpectralRealness {
  double e_imag_max = 0;
  double e_imag_min = 0;
  double rho = 0;
  double tol_imag = 0;
};

inline double default_tol_imag(const SpectralDecomposition& dec) {
  return 1e-8 * dec.spectral_radius();
}

inline SpectralRealness realness(const SpectralDecomposition& dec,
                                 double tol_imag) {
  SpectralRealness r;
  r.tol_imag = tol_imag;
  const long n = dec.dim();
  if (n == 0) return r;
  r.e_imag_min = std::abs(dec.eigenvalues[0].imag());
  long count = 0;
  for (long j = 0; j < n; ++j) {
    const double im = std::abs(dec.eigenvalues[j].imag());
    r.e_imag_max = std::max(r.e_imag_max, im);
    r.e_imag_min = std::min(r.e_imag_min, im);
    if (im > tol_imag) ++count;
  }
  r.rho = static_cast<double>(count) / static_cast<double>(n);
  return r;
}

inline SpectralRealness realness(const SpectralDecomposition& dec) {
  return realness(dec, default_tol_imag(dec));
}

// Verification helpers (used by tests and the validate battery; O(n^3)).

/// max_j |H psi_j - E_j psi_j| over right vectors.
inline double residual_max(const Matrix& H, const SpectralDecomposition& dec) {
  const Matrix R = H * dec.right - dec.right * dec.eigenvalues.asDiagonal();
  double m = 0;
  for (long j = 0; j < R.cols(); ++j) m = std::max(m, R.col(j).norm());
  return m;
}

/// max_{j,j'} |<L_j|R_j'> - delta| after bi-normalization.
inline double binorm_error(const SpectralDecomposition& dec) {
  const Matrix G = dec.left.adjoint() * dec.right;
  return (G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

/// Frobenius norm of sum_j |R_j><L_j| - 1.
inline double completeness_error(const SpectralDecomposition& dec) {
  const Matrix P = dec.right * dec.left.adjoint();
  return (P - Matrix::Identity(P.rows(), P.cols())).norm();
}

}  // namespace nhqc

#endif  // NHQC_SPECTRAL_HPP
