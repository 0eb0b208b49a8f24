#ifndef NHQC_ENTANGLEMENT_HPP
#define NHQC_ENTANGLEMENT_HPP

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "nhqc/lapack.hpp"
#include "nhqc/spectral.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

/// Contiguous site range [first, last], 1-based inclusive.
struct SiteRange {
  long first = 1;
  long last = 1;
  long n_sites() const { return last - first + 1; }
};

/// Half-chain bipartition: A = sites 1..floor(L/2) (ring geometry, two cuts).
inline SiteRange half_chain(long L) { return {1, L / 2}; }

/// Which single-particle levels are filled. Deterministic given the sorted
/// decomposition; Re E ties are already broken by (Im E, index) in the sort.
struct OccupationRule {
  enum class Mode { BelowReE, AllRealEnergy, ExplicitSet };
  Mode mode = Mode::AllRealEnergy;
  double cutoff = 0;       // BelowReE: fill Re E < cutoff
  double tol_imag = 0;     // AllRealEnergy: fill |Im E| < tol_imag
  std::vector<long> indices;  // ExplicitSet

  static OccupationRule below(double cutoff) {
    OccupationRule r;
    r.mode = Mode::BelowReE;
    r.cutoff = cutoff;
    return r;
  }
  static OccupationRule all_real(double tol_imag) {
    OccupationRule r;
    r.mode = Mode::AllRealEnergy;
    r.tol_imag = tol_imag;
    return r;
  }
  static OccupationRule explicit_set(std::vector<long> idx) {
    OccupationRule r;
    r.mode = Mode::ExplicitSet;
    r.indices = std::move(idx);
    return r;
  }
};

inline std::vector<long> occupied_indices(const SpectralDecomposition& dec,
                                          const OccupationRule& rule) {
  std::vector<long> occ;
  switch (rule.mode) {
    case OccupationRule::Mode::BelowReE:
      for (long j = 0; j < dec.dim(); ++j)
        if (dec.eigenvalues[j].real() < rule.cutoff) occ.push_back(j);
      break;
    case OccupationRule::Mode::AllRealEnergy:
      for (long j = 0; j < dec.dim(); ++j)
        if (std::abs(dec.eigenvalues[j].imag()) < rule.tol_imag)
          occ.push_back(j);
      break;
    case OccupationRule::Mode::ExplicitSet:
      occ = rule.indices;
      std::sort(occ.begin(), occ.end());
      for (long j : occ)
        if (j < 0 || j >= dec.dim())
          throw InvalidSpec("occupation index out of range");
      break;
  }
  return occ;
}

/// Biorthogonal single-particle correlation matrix of the occupied set,
/// restricted to subsystem rows/columns over the composite (site, spin)
/// index: P = sum_m |R_m><L_m| on A. Generally non-Hermitian.
inline Matrix correlation_matrix(const SpectralDecomposition& dec,
                                 const std::vector<long>& occupied,
                                 SiteRange subsystem) {
  if (occupied.empty()) throw EmptyOccupation("no occupied states");
  if (!dec.has_left())
    throw InvalidSpec("correlation matrix needs left eigenvectors");
  const long dim = dec.dim();
  const long L = dim / 2;
  if (subsystem.first < 1 || subsystem.last > L ||
      subsystem.first > subsystem.last)
    throw InvalidSpec("subsystem range out of bounds");
  const long row0 = 2 * (subsystem.first - 1);
  const long nrows = 2 * subsystem.n_sites();
  Matrix ra(nrows, static_cast<long>(occupied.size()));
  Matrix la(nrows, static_cast<long>(occupied.size()));
  for (size_t k = 0; k < occupied.size(); ++k) {
    ra.col(k) = dec.right.col(occupied[k]).segment(row0, nrows);
    la.col(k) = dec.left.col(occupied[k]).segment(row0, nrows);
  }
  return ra * la.adjoint();
}

/// Correlation-matrix eigenvalues zeta, entanglement energies
/// xi = ln(1/zeta - 1), and the entropy S = -sum[z ln z + (1-z) ln(1-z)].
struct CorrelationSpectrum {
  Vector zeta_raw;        // eigenvalues of C as computed (complex in general)
  RealVector zeta;        // Re zeta clamped to [0, 1]
  RealVector xi;          // from zeta clamped to [eps, 1-eps], eps = 1e-12
  double entropy = 0;
  double max_imag_zeta = 0;
  long n_clamped = 0;          // Re zeta outside [0,1] beyond 1e-6
  bool complex_warning = false;  // some |Im zeta| >= 1e-6
};

inline CorrelationSpectrum entanglement_spectrum(const Matrix& C) {
  pin_blas_single_thread();
  CorrelationSpectrum r;
  const long m = C.rows();
  if (m == 0) return r;
  Matrix A = C;
  r.zeta_raw.resize(m);
  const int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', static_cast<int>(m), A.data(),
                    static_cast<int>(m), r.zeta_raw.data(), nullptr,
                    static_cast<int>(m), nullptr, static_cast<int>(m));
  if (info != 0)
    throw SolverFailure("zgeev failed on the correlation matrix (info = " +
                        std::to_string(info) + ")");
  std::sort(r.zeta_raw.data(), r.zeta_raw.data() + m,
            [](Complex a, Complex b) {
              if (a.real() != b.real()) return a.real() < b.real();
              return a.imag() < b.imag();
            });
  r.zeta.resize(m);
  r.xi.resize(m);
  constexpr double eps = 1e-12;
  for (long j = 0; j < m; ++j) {
    const double im = std::abs(r.zeta_raw[j].imag());
    r.max_imag_zeta = std::max(r.max_imag_zeta, im);
    const double re = r.zeta_raw[j].real();
    if (re < -1e-6 || re > 1 + 1e-6) ++r.n_clamped;
    const double z = std::clamp(re, 0.0, 1.0);
    r.zeta[j] = z;
    const double zc = std::clamp(z, eps, 1 - eps);
    r.xi[j] = std::log(1.0 / zc - 1.0);
    // 0 ln 0 = 0 convention
    const double a = z > 0 ? z * std::log(z) : 0.0;
    const double b = z < 1 ? (1 - z) * std::log(1 - z) : 0.0;
    r.entropy -= a + b;
  }
  r.complex_warning = r.max_imag_zeta >= 1e-6;
  return r;
}

inline double entanglement_entropy(const SpectralDecomposition& dec,
                                   const OccupationRule& rule,
                                   SiteRange subsystem) {
  const auto occ = occupied_indices(dec, rule);
  if (occ.empty()) return 0.0;  // empty filling carries no entanglement
  return entanglement_spectrum(correlation_matrix(dec, occ, subsystem)).entropy;
}

/// ES versus a filling cutoff scanned across the Re E range: at each cutoff
/// all states with Re E below it are filled. An empty occupation yields
/// S = 0 with an empty spectrum, by convention.
inline std::vector<std::pair<double, CorrelationSpectrum>> es_vs_energy_scan(
    const SpectralDecomposition& dec, SiteRange subsystem, long n_cutoffs) {
  if (n_cutoffs < 2) throw InvalidSpec("need at least 2 cutoffs");
  const long n = dec.dim();
  const double lo = dec.eigenvalues[0].real();
  const double hi = dec.eigenvalues[n - 1].real();
  std::vector<std::pair<double, CorrelationSpectrum>> out;
  out.reserve(n_cutoffs);
  for (long k = 0; k < n_cutoffs; ++k) {
    const double cutoff =
        lo + (hi - lo) * static_cast<double>(k) / (n_cutoffs - 1);
    const auto occ = occupied_indices(dec, OccupationRule::below(cutoff));
    if (occ.empty()) {
      out.emplace_back(cutoff, CorrelationSpectrum{});
      continue;
    }
    out.emplace_back(cutoff, entanglement_spectrum(
                                 correlation_matrix(dec, occ, subsystem)));
  }
  return out;
}

}  // namespace nhqc

#endif  // NHQC_ENTANGLEMENT_HPP
