#ifndef NHQC_TOPOLOGY_HPP
#define NHQC_TOPOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "nhqc/lapack.hpp"
#include "nhqc/model.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

struct WindingOptions {
  /// Refinement cap: total flux-grid evaluations before giving up.
  long max_points = 1 << 14;
  /// Step increments above this trigger halving.
  double halve_threshold = kPi / 2;
  /// Quantization tolerance: |total/2pi - integer| must be below this.
  double quantization_tol = 1e-3;
  /// Flux divisor D in the insertion (phases ~ theta/D); 0 means D = L.
  long flux_divisor = 0;
  /// Use the banded LU fast path (dense LU remains the fallback).
  bool use_banded = true;
};

struct WindingScan {
  int w = 0;
  double raw = 0;              // accumulated phase / 2pi before rounding
  double max_step_phase = 0;   // largest accepted single-step increment
  long n_eval = 0;             // log-det evaluations performed
  std::vector<std::pair<double, double>> trace;  // (theta, cum phase / 2pi)
};

/// Winding pair at the two selected base energies.
struct WindingResult {
  int w1 = 0;
  int w2 = 0;
  double base1 = 0;
  double base2 = 0;
  long n_theta = 0;
  double max_step_phase = 0;
};

namespace detail {

struct LogDetPhase {
  double log_abs = 0;
  double phase = 0;
};

struct CornerEntry {
  long row;
  long col;
  Complex value;
};

/// Band + corner split of H(flux) - base. The cyclic wrap enters as a
/// rank <= 4 correction handled by the determinant lemma.
struct BandSystem {
  long n = 0;
  long kl = 0, ku = 0;
  Matrix ab;  // (2*kl+ku+1) x n LAPACK band storage
  std::vector<CornerEntry> corners;
  double scale = 0;  // max |entry|, for singularity floors
};

inline void band_set(BandSystem& bs, long i, long j, Complex v) {
  bs.ab(bs.kl + bs.ku + i - j, j) += v;
  bs.scale = std::max(bs.scale, std::abs(v));
}

inline BandSystem band_system(const ModelSpec& spec, double base) {
  const auto [JL, JR] = spec.hopping_pair();
  const auto [fL, fR] = detail::hopping_phases(spec);
  const long L = spec.L;
  BandSystem bs;
  bs.n = spec.dim();
  const bool scalar = spec.kind == ModelKind::AbelianScalar;
  bs.kl = bs.ku = scalar ? 1 : 2;
  bs.ab = Matrix::Zero(2 * bs.kl + bs.ku + 1, bs.n);
  bs.scale = std::abs(base);

  if (scalar) {
    for (long n = 1; n <= L; ++n) {
      const long i = n - 1;
      const Complex arg(2.0 * kPi * spec.alpha.value() * n + spec.phi,
                        spec.gamma);
      band_set(bs, i, i, spec.V * std::cos(arg) - base);
      if (n < L) {
        band_set(bs, i, i + 1, JL * fL);
        band_set(bs, i + 1, i, JR * fR);
      } else {
        bs.corners.push_back({L - 1, 0, JL * fL});
        bs.corners.push_back({0, L - 1, JR * fR});
      }
    }
  } else {
    for (long n = 1; n <= L; ++n) {
      const long i = 2 * (n - 1);
      const Matrix2 blk =
          spec.V * onsite_block(theta_n(spec, n), spec.phi).reconstruct();
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          band_set(bs, i + a, i + b, blk(a, b) - (a == b ? base : 0.0));
      if (n < L) {
        for (int a = 0; a < 2; ++a) {
          band_set(bs, i + a, i + 2 + a, JL * fL);
          band_set(bs, i + 2 + a, i + a, JR * fR);
        }
      } else {
        for (int a = 0; a < 2; ++a) {
          bs.corners.push_back({2 * (L - 1) + a, a, JL * fL});
          bs.corners.push_back({a, 2 * (L - 1) + a, JR * fR});
        }
      }
    }
  }
  for (const auto& c : bs.corners) bs.scale = std::max(bs.scale, std::abs(c.value));
  return bs;
}

/// Phase/magnitude of det from dense LU diagonal factors.
inline LogDetPhase logdet_dense(Matrix m, double scale) {
  pin_blas_single_thread();
  const long n = m.rows();
  std::vector<int> ipiv(n);
  const int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, static_cast<int>(n),
                                  static_cast<int>(n), m.data(),
                                  static_cast<int>(n), ipiv.data());
  if (info > 0) throw BaseOnSpectrum("det vanished: singular factor in LU");
  if (info < 0) throw SolverFailure("zgetrf failed");
  LogDetPhase r;
  double min_piv = 1e300, max_piv = 0;
  for (long j = 0; j < n; ++j) {
    const Complex d = m(j, j);
    const double ad = std::abs(d);
    min_piv = std::min(min_piv, ad);
    max_piv = std::max(max_piv, ad);
    r.log_abs += std::log(ad);
    r.phase += std::arg(d);
    if (ipiv[j] != static_cast<int>(j + 1)) r.phase += kPi;
  }
  if (min_piv < 1e-15 * max_piv || min_piv < 1e-300 * std::max(scale, 1.0))
    throw BaseOnSpectrum("base energy is numerically on the spectrum: det "
                         "factor below the scaled floor");
  return r;
}

inline LogDetPhase logdet_dense(const ModelSpec& spec, double base) {
  Matrix m = build_hamiltonian(spec).mat;
  const double scale = m.cwiseAbs().maxCoeff() + std::abs(base);
  m.diagonal().array() -= base;
  return logdet_dense(std::move(m), scale);
}

/// Banded route: Givens-QR of the cyclic band matrix. Each complex rotation
/// has det = 1 exactly, so the det phase is the sum of arg(r_jj) and the
/// magnitude the sum of log |r_jj|; nothing is ever formed as a scalar det.
/// Orthogonal eliminations cannot amplify, which matters here: unidirectional
/// and strongly nonreciprocal chains overflow triangular solves at L ~ 600
/// (the skin-effect gauge factor e^{beta L}), so a determinant-lemma corner
/// correction is not an option.
///
/// Layout: rows except the bottom corner-block rows stay banded (their span
/// plus the top-right corner columns); the bottom rows are dense spikes.
/// Pass 1 runs the band-only QR. Pass 2 walks the spikes left to right
/// against the finalized band rows; each R row is materialized once, only
/// its diagonal survives for the determinant.
inline LogDetPhase logdet_banded(const ModelSpec& spec, double base) {
  const BandSystem bs = band_system(spec, base);
  const long n = bs.n;
  const long kl = bs.kl, ku = bs.ku;
  const long span = 2 * kl + ku + 1;      // band row cols r-kl .. r+kl+ku
  const long nd = std::max<long>(kl, 1);  // dense spike rows at the bottom
  const long nb = n - nd;                 // rows kept in band form

  using RowMajor =
      Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor band = RowMajor::Zero(nb, span + nd);
  RowMajor spikes = RowMajor::Zero(nd, n);
  auto band_at = [&](long r, long c) -> Complex& {
    return c >= nb ? band(r, span + (c - nb)) : band(r, c - (r - kl));
  };
  for (long r = 0; r < nb; ++r)
    for (long c = std::max<long>(0, r - kl); c <= std::min(n - 1, r + ku); ++c)
      band_at(r, c) = bs.ab(kl + ku + r - c, c);
  for (long r = nb; r < n; ++r)
    for (long c = std::max<long>(0, r - kl); c <= std::min(n - 1, r + ku); ++c)
      spikes(r - nb, c) = bs.ab(kl + ku + r - c, c);
  for (const auto& corner : bs.corners) {
    if (corner.row < nb)
      band_at(corner.row, corner.col) += corner.value;
    else
      spikes(corner.row - nb, corner.col) += corner.value;
  }

  auto givens = [](Complex a, Complex b, double& c, Complex& s) {
    const double r = std::hypot(std::abs(a), std::abs(b));
    if (r == 0.0) {
      c = 1;
      s = 0;
    } else if (a == Complex(0, 0)) {
      c = 0;
      s = std::conj(b) / std::abs(b);
    } else {
      c = std::abs(a) / r;
      s = (a / std::abs(a)) * std::conj(b) / r;
    }
  };

  // pass 1: band-only QR; rows keep span [j, j+kl+ku] plus the trailing
  // corner columns throughout
  for (long j = 0; j < nb; ++j) {
    for (long q = j + 1; q <= std::min(j + kl, nb - 1); ++q) {
      const Complex b = band_at(q, j);
      if (b == Complex(0, 0)) continue;
      double c;
      Complex s;
      givens(band_at(j, j), b, c, s);
      const long hi = std::min(nb - 1, j + kl + ku);
      for (long k = j; k <= hi; ++k) {
        const Complex pa = band_at(j, k), qa = band_at(q, k);
        band_at(j, k) = c * pa + s * qa;
        band_at(q, k) = -std::conj(s) * pa + c * qa;
      }
      for (long k = 0; k < nd; ++k) {
        const Complex pa = band(j, span + k), qa = band(q, span + k);
        band(j, span + k) = c * pa + s * qa;
        band(q, span + k) = -std::conj(s) * pa + c * qa;
      }
    }
  }

  LogDetPhase result;
  double min_piv = 1e300, max_piv = 0;
  auto account = [&](Complex d) {
    const double ad = std::abs(d);
    if (ad == 0.0)
      throw BaseOnSpectrum("det vanished: zero diagonal in the QR factor");
    min_piv = std::min(min_piv, ad);
    max_piv = std::max(max_piv, ad);
    result.log_abs += std::log(ad);
    result.phase += std::arg(d);
  };

  // pass 2: fold the spikes in; the materialized work row is discarded
  // after its diagonal entry is banked
  Vector work = Vector::Zero(n);
  for (long j = 0; j < nb; ++j) {
    const long hi = std::min(nb - 1, j + kl + ku);
    for (long k = j; k <= hi; ++k) work[k] = band_at(j, k);
    for (long k = 0; k < nd; ++k) work[nb + k] = band(j, span + k);
    for (long d = 0; d < nd; ++d) {
      const Complex b = spikes(d, j);
      if (b == Complex(0, 0)) continue;
      double c;
      Complex s;
      givens(work[j], b, c, s);
      for (long k = j; k < n; ++k) {
        const Complex pa = work[k], qa = spikes(d, k);
        work[k] = c * pa + s * qa;
        spikes(d, k) = -std::conj(s) * pa + c * qa;
      }
    }
    account(work[j]);
    for (long k = j; k < n; ++k) work[k] = Complex(0, 0);
  }
  // trailing nd x nd block of the spikes
  for (long j = 0; j < nd; ++j) {
    for (long q = j + 1; q < nd; ++q) {
      const Complex b = spikes(q, nb + j);
      if (b == Complex(0, 0)) continue;
      double c;
      Complex s;
      givens(spikes(j, nb + j), b, c, s);
      for (long k = nb + j; k < n; ++k) {
        const Complex pa = spikes(j, k), qa = spikes(q, k);
        spikes(j, k) = c * pa + s * qa;
        spikes(q, k) = -std::conj(s) * pa + c * qa;
      }
    }
    account(spikes(j, nb + j));
  }

  if (min_piv < 1e-15 * max_piv ||
      min_piv < 1e-300 * std::max(bs.scale, 1.0))
    throw BaseOnSpectrum("base energy is numerically on the spectrum: det "
                         "factor below the scaled floor");
  return result;
}

}  // namespace detail

/// det-phase of H(flux) - base at one flux point.
inline double logdet_phase_at_flux(const ModelSpec& spec, double base,
                                   double flux, const WindingOptions& opts = {}) {
  ModelSpec s = spec;
  const double divisor =
      opts.flux_divisor > 0 ? static_cast<double>(opts.flux_divisor)
                            : static_cast<double>(spec.L);
  s.flux = flux * static_cast<double>(spec.L) / divisor;
  return opts.use_banded ? detail::logdet_banded(s, base).phase
                         : detail::logdet_dense(s, base).phase;
}

/// Spectral winding of det[H(theta) - base] as the flux advances by 2pi.
/// Principal-value phase increments are accumulated on an adaptively
/// refined theta grid (steps halve wherever an increment exceeds the
/// threshold), then divided by 2pi and rounded to the quantized integer.
inline WindingScan winding_scan(const ModelSpec& spec, double base,
                                long n_theta = 256,
                                const WindingOptions& opts = {}) {
  spec.validate();
  if (spec.boundary != Boundary::PBC)
    throw InvalidSpec("winding is defined on a flux-threaded ring (PBC)");
  if (n_theta < 2) throw InvalidSpec("n_theta must be at least 2");

  WindingScan scan;
  auto phase_at = [&](double theta) {
    ++scan.n_eval;
    if (scan.n_eval > opts.max_points)
      throw NonConvergent("winding refinement exceeded " +
                          std::to_string(opts.max_points) + " points");
    return logdet_phase_at_flux(spec, base, theta, opts);
  };

  std::map<double, double> phases;  // theta -> det phase, kept in theta order
  for (long k = 0; k <= n_theta; ++k) {
    const double t = 2.0 * kPi * static_cast<double>(k) / n_theta;
    phases[t] = phase_at(t);
  }
  // Refine until every adjacent increment is below the threshold.
  bool changed = true;
  while (changed) {
    changed = false;
    auto it = phases.begin();
    auto next = std::next(it);
    std::vector<double> mids;
    for (; next != phases.end(); ++it, ++next) {
      const double inc = principal_angle(next->second - it->second);
      if (std::abs(inc) > opts.halve_threshold)
        mids.push_back(0.5 * (it->first + next->first));
    }
    for (double t : mids) {
      phases[t] = phase_at(t);
      changed = true;
    }
  }

  double total = 0;
  scan.trace.reserve(phases.size());
  auto it = phases.begin();
  scan.trace.emplace_back(it->first, 0.0);
  auto prev = it++;
  for (; it != phases.end(); prev = it++) {
    const double inc = principal_angle(it->second - prev->second);
    scan.max_step_phase = std::max(scan.max_step_phase, std::abs(inc));
    total += inc;
    scan.trace.emplace_back(it->first, total / (2 * kPi));
  }
  scan.raw = total / (2 * kPi);
  scan.w = static_cast<int>(std::lround(scan.raw));
  if (std::abs(scan.raw - scan.w) > opts.quantization_tol)
    throw NonConvergent("winding failed to quantize: total/2pi = " +
                        format_double(scan.raw));
  return scan;
}

inline int winding_number(const ModelSpec& spec, double base,
                          long n_theta = 256, const WindingOptions& opts = {}) {
  return winding_scan(spec, base, n_theta, opts).w;
}

inline WindingResult winding_pair(const ModelSpec& spec, double base1,
                                  double base2, long n_theta = 256,
                                  const WindingOptions& opts = {}) {
  WindingResult r;
  r.base1 = base1;
  r.base2 = base2;
  r.n_theta = n_theta;
  const WindingScan s1 = winding_scan(spec, base1, n_theta, opts);
  r.w1 = s1.w;
  r.max_step_phase = s1.max_step_phase;
  if (base2 == base1) {
    r.w2 = s1.w;
  } else {
    const WindingScan s2 = winding_scan(spec, base2, n_theta, opts);
    r.w2 = s2.w;
    r.max_step_phase = std::max(r.max_step_phase, s2.max_step_phase);
  }
  return r;
}

/// One sweep point's states for base-energy selection: Re E and IPR arrays
/// sorted by Re E.
struct SweepStateSummary {
  double param = 0;
  RealVector re_e;
  RealVector ipr;
};

struct BaseEnergies {
  double e1 = 0;
  double e2 = 0;
};

/// Base energies from the onset prescription made deterministic: scan the
/// sweep in the direction of increasing localized-state count; an onset is a
/// state slot whose IPR newly exceeds the threshold (all above-threshold
/// slots count at the first point). E1 is the Re E of the first onset in
/// (point, Re E) lexicographic order, E2 of the last. If every onset lands
/// on a single sweep point, both collapse to the median onset energy.
/// The returned bases are displaced by 1e-9 of the spectral span: an onset
/// energy is the exact Re E of an eigenvalue of one sweep point, where the
/// det would be singular to working precision. Winding numbers are stable
/// under far larger base shifts (the 1e-3 continuity contract).
inline BaseEnergies select_base_energies(
    const std::vector<SweepStateSummary>& sweep, double ipr_threshold) {
  if (sweep.empty()) throw NoLocalizedStates("empty sweep");
  std::vector<const SweepStateSummary*> pts;
  pts.reserve(sweep.size());
  for (const auto& p : sweep) pts.push_back(&p);
  const auto count_loc = [&](const SweepStateSummary& p) {
    long c = 0;
    for (long j = 0; j < p.ipr.size(); ++j)
      if (p.ipr[j] > ipr_threshold) ++c;
    return c;
  };
  if (count_loc(*pts.front()) > count_loc(*pts.back()))
    std::reverse(pts.begin(), pts.end());

  bool have_first = false;
  size_t first_t = 0, last_t = 0;
  double e1 = 0, e2 = 0;
  std::vector<double> last_point_onsets;
  std::vector<bool> prev_loc;
  for (size_t t = 0; t < pts.size(); ++t) {
    const auto& p = *pts[t];
    std::vector<double> onsets;
    for (long j = 0; j < p.ipr.size(); ++j) {
      const bool loc = p.ipr[j] > ipr_threshold;
      const bool was =
          t > 0 && j < static_cast<long>(prev_loc.size()) && prev_loc[j];
      if (loc && !was) onsets.push_back(p.re_e[j]);
    }
    if (!onsets.empty()) {
      if (!have_first) {
        have_first = true;
        first_t = t;
        e1 = onsets.front();
      }
      last_t = t;
      e2 = onsets.back();
      last_point_onsets = onsets;
    }
    prev_loc.assign(p.ipr.size(), false);
    for (long j = 0; j < p.ipr.size(); ++j)
      prev_loc[j] = p.ipr[j] > ipr_threshold;
  }
  if (!have_first)
    throw NoLocalizedStates("no state crosses the IPR threshold anywhere in "
                            "the sweep");
  double span = 0;
  for (const auto& p : sweep)
    if (p.re_e.size() > 0)
      span = std::max(span, p.re_e[p.re_e.size() - 1] - p.re_e[0]);
  const double nudge = 1e-9 * std::max(span, 1.0);
  if (first_t == last_t) {
    const double med = last_point_onsets[last_point_onsets.size() / 2] + nudge;
    return {med, med};
  }
  return {e1 + nudge, e2 + nudge};
}

}  // namespace nhqc

#endif  // NHQC_TOPOLOGY_HPP
