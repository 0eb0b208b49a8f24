#ifndef NHQC_LOCALIZATION_HPP
#define NHQC_LOCALIZATION_HPP

#include <cmath>
#include <vector>

#include "nhqc/spectral.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

/// Per-state and ensemble participation-ratio diagnostics over the right
/// eigenvectors. NPR_j = 1/(dim * IPR_j) by construction.
struct LocalizationProfile {
  RealVector ipr;
  RealVector npr;
  double ipr_max = 0;
  double ipr_min = 0;
  double ipr_avg = 0;
  double npr_avg = 0;
  double eta = 0;  // log10(<IPR><NPR>): the critical-phase indicator
};

inline LocalizationProfile profile(const SpectralDecomposition& dec) {
  const long dim = dec.right.rows();     // Hilbert dimension (2L)
  const long nstates = dec.right.cols();
  LocalizationProfile p;
  p.ipr.resize(nstates);
  p.npr.resize(nstates);
  for (long j = 0; j < nstates; ++j) {
    double s = 0;
    for (long i = 0; i < dim; ++i) {
      const double a2 = std::norm(dec.right(i, j));
      s += a2 * a2;
    }
    p.ipr[j] = s;
    p.npr[j] = 1.0 / (static_cast<double>(dim) * s);
  }
  p.ipr_max = p.ipr.maxCoeff();
  p.ipr_min = p.ipr.minCoeff();
  p.ipr_avg = p.ipr.mean();
  p.npr_avg = p.npr.mean();
  p.eta = std::log10(p.ipr_avg * p.npr_avg);
  return p;
}

/// Extended states sit at IPR ~ 1/dim, localized ones at O(1); tau sits
/// between them with an order-of-magnitude guard band.
inline double default_ipr_threshold(long dim) {
  return 10.0 / static_cast<double>(dim);
}

/// eta floor in purely extended/localized phases is about -log10(dim);
/// critical phases sit well above. Default separator: halfway (in decades)
/// between the floor and the O(-1) critical reference.
inline double eta_critical_threshold(long dim) {
  return 0.5 * (-std::log10(static_cast<double>(dim)) + (-1.0));
}

struct SpectralInterval {
  double re_lo = 0;
  double re_hi = 0;
  bool localized = false;
  long n_states = 0;
  long n_real = 0;  // states with |Im E| < tol_imag
};

/// Classification of the (Re E)-sorted spectrum into maximal runs of equal
/// IPR class; boundaries between adjacent opposite-class intervals are the
/// mobility edges (reported as midpoints between neighboring states).
struct MobilityEdgeTable {
  std::vector<SpectralInterval> intervals;
  std::vector<double> edges;
};

inline MobilityEdgeTable mobility_edge_table(const SpectralDecomposition& dec,
                                             const LocalizationProfile& prof,
                                             double tol_imag,
                                             double ipr_threshold) {
  MobilityEdgeTable t;
  const long n = dec.dim();
  if (n == 0) return t;
  long start = 0;
  bool cls = prof.ipr[0] > ipr_threshold;
  auto flush = [&](long end) {  // states [start, end)
    SpectralInterval iv;
    iv.re_lo = dec.eigenvalues[start].real();
    iv.re_hi = dec.eigenvalues[end - 1].real();
    iv.localized = cls;
    iv.n_states = end - start;
    for (long j = start; j < end; ++j)
      if (std::abs(dec.eigenvalues[j].imag()) < tol_imag) ++iv.n_real;
    t.intervals.push_back(iv);
  };
  for (long j = 1; j < n; ++j) {
    const bool c = prof.ipr[j] > ipr_threshold;
    if (c != cls) {
      flush(j);
      t.edges.push_back(0.5 * (dec.eigenvalues[j - 1].real() +
                               dec.eigenvalues[j].real()));
      start = j;
      cls = c;
    }
  }
  flush(n);
  return t;
}

}  // namespace nhqc

#endif  // NHQC_LOCALIZATION_HPP
