#ifndef NHQC_TYPES_HPP
#define NHQC_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace nhqc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Matrix2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Pauli matrices acting on the spin-1/2 onsite degree of freedom.
inline Matrix2 sigma0() { return Matrix2::Identity(); }
inline Matrix2 sigma_x() {
  Matrix2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix2 sigma_y() {
  Matrix2 m;
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
inline Matrix2 sigma_z() {
  Matrix2 m;
  m << 1, 0, 0, -1;
  return m;
}

/// Wrap an angle difference into (-pi, pi].
inline double principal_angle(double a) {
  while (a > kPi) a -= 2 * kPi;
  while (a <= -kPi) a += 2 * kPi;
  return a;
}

// Error taxonomy. Operations throw these; sweep rows record them per point.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidSpec : Error {
  using Error::Error;
};
struct PairingFailure : Error {
  using Error::Error;
};
struct SolverFailure : Error {
  using Error::Error;
};
struct BaseOnSpectrum : Error {
  using Error::Error;
};
struct NonConvergent : Error {
  using Error::Error;
};
struct NoLocalizedStates : Error {
  using Error::Error;
};
struct EmptyOccupation : Error {
  using Error::Error;
};
struct TooFewLevels : Error {
  using Error::Error;
};
struct PlanError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace nhqc

#endif  // NHQC_TYPES_HPP
