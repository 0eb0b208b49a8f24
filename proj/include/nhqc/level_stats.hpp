#ifndef NHQC_LEVEL_STATS_HPP
#define NHQC_LEVEL_STATS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "nhqc/spectral.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

/// Adjacent-gap-ratio statistics of Re E: g_j = min(e_j, e_{j+1}) /
/// max(e_j, e_{j+1}) over consecutive spacings e_j = Re E_j - Re E_{j-1}.
struct AgrResult {
  std::vector<double> g_values;
  double g_mean = 0;
  long n_dropped = 0;  // ratios dropped at degenerate spacings
};

/// Degenerate spacings (exact ties, spin-degeneracy artifacts) would give
/// 0/0; ratios touching a spacing below 1e-12 * spectral width are dropped
/// and counted instead.
inline AgrResult adjacent_gap_ratio(const std::vector<double>& re_sorted) {
  const size_t n = re_sorted.size();
  if (n < 3) throw TooFewLevels("adjacent gap ratio needs at least 3 levels");
  const double width = re_sorted.back() - re_sorted.front();
  const double floor = 1e-12 * std::max(width, 1e-300);
  std::vector<double> gaps(n - 1);
  for (size_t j = 0; j + 1 < n; ++j) gaps[j] = re_sorted[j + 1] - re_sorted[j];
  AgrResult r;
  r.g_values.reserve(n - 2);
  double sum = 0;
  for (size_t j = 0; j + 1 < gaps.size(); ++j) {
    const double a = gaps[j], b = gaps[j + 1];
    if (a < floor || b < floor) {
      ++r.n_dropped;
      continue;
    }
    const double g = std::min(a, b) / std::max(a, b);
    r.g_values.push_back(g);
    sum += g;
  }
  if (!r.g_values.empty()) r.g_mean = sum / static_cast<double>(r.g_values.size());
  return r;
}

inline AgrResult adjacent_gap_ratio(const SpectralDecomposition& dec) {
  std::vector<double> re(dec.dim());
  for (long j = 0; j < dec.dim(); ++j) re[j] = dec.eigenvalues[j].real();
  std::sort(re.begin(), re.end());
  return adjacent_gap_ratio(re);
}

}  // namespace nhqc

#endif  // NHQC_LEVEL_STATS_HPP
