#ifndef NHQC_IO_HPP
#define NHQC_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nhqc/config.hpp"
#include "nhqc/entanglement.hpp"
#include "nhqc/localization.hpp"
#include "nhqc/spectral.hpp"
#include "nhqc/topology.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

/// Write-temp-then-rename; readers never observe a partial file.
inline void atomic_write_file(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to '" + path + "' failed: " + ec.message());
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string spectrum_csv(const SpectralDecomposition& dec) {
  std::ostringstream out;
  out << "# nhqc spectrum schema v1\n";
  out << "index,re_e,im_e\n";
  for (long j = 0; j < dec.dim(); ++j)
    out << j << ',' << format_double(dec.eigenvalues[j].real()) << ','
        << format_double(dec.eigenvalues[j].imag()) << '\n';
  return out.str();
}

/// Per-state export: energy, IPR, and the extended/localized class.
inline std::string states_csv(const SpectralDecomposition& dec,
                              const LocalizationProfile& prof,
                              double ipr_threshold) {
  std::ostringstream out;
  out << "# nhqc states schema v1, ipr_threshold="
      << format_double(ipr_threshold) << "\n";
  out << "index,re_e,im_e,ipr,class\n";
  for (long j = 0; j < dec.dim(); ++j)
    out << j << ',' << format_double(dec.eigenvalues[j].real()) << ','
        << format_double(dec.eigenvalues[j].imag()) << ','
        << format_double(prof.ipr[j]) << ','
        << (prof.ipr[j] > ipr_threshold ? "localized" : "extended") << '\n';
  return out.str();
}

inline std::string es_scan_csv(
    const std::vector<std::pair<double, CorrelationSpectrum>>& scan) {
  std::ostringstream out;
  out << "# nhqc es-scan schema v1\n";
  out << "cutoff_re_e,zeta_index,re_zeta,im_zeta\n";
  for (const auto& [cutoff, es] : scan)
    for (long j = 0; j < es.zeta_raw.size(); ++j)
      out << format_double(cutoff) << ',' << j << ','
          << format_double(es.zeta_raw[j].real()) << ','
          << format_double(es.zeta_raw[j].imag()) << '\n';
  return out.str();
}

inline std::string winding_trace_csv(const WindingScan& scan) {
  std::ostringstream out;
  out << "# nhqc winding-trace schema v1\n";
  out << "theta,winding_phase\n";
  for (const auto& [theta, frac] : scan.trace)
    out << format_double(theta) << ',' << format_double(frac) << '\n';
  return out.str();
}

/// Eigenvector blob: "NHQCVEC1", then uint64 dim, uint64 count, then
/// column-major complex doubles (re, im), all little-endian.
inline void write_vectors_blob(const std::string& path, const Matrix& vecs) {
  std::ofstream out(path + ".tmp", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + ".tmp'");
  out.write("NHQCVEC1", 8);
  const std::uint64_t dim = static_cast<std::uint64_t>(vecs.rows());
  const std::uint64_t count = static_cast<std::uint64_t>(vecs.cols());
  out.write(reinterpret_cast<const char*>(&dim), 8);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(vecs.data()),
            static_cast<std::streamsize>(sizeof(Complex) * vecs.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
  out.close();
  std::error_code ec;
  std::filesystem::rename(path + ".tmp", path, ec);
  if (ec) throw IoError("rename to '" + path + "' failed: " + ec.message());
}

}  // namespace nhqc

#endif  // NHQC_IO_HPP
