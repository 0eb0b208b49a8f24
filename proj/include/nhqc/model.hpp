#ifndef NHQC_MODEL_HPP
#define NHQC_MODEL_HPP

#include <array>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "nhqc/config.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

enum class ModelKind { Model1, Model2, Model3, AbelianScalar };
enum class Boundary { PBC, OBC };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Model1: return "model1";
    case ModelKind::Model2: return "model2";
    case ModelKind::Model3: return "model3";
    case ModelKind::AbelianScalar: return "abelian_scalar";
  }
  return "?";
}

inline std::string to_string(Boundary b) {
  return b == Boundary::PBC ? "pbc" : "obc";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "model1") return ModelKind::Model1;
  if (s == "model2") return ModelKind::Model2;
  if (s == "model3") return ModelKind::Model3;
  if (s == "abelian_scalar") return ModelKind::AbelianScalar;
  throw InvalidSpec("unknown model kind '" + s +
                    "' (expected model1|model2|model3|abelian_scalar)");
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "pbc") return Boundary::PBC;
  if (s == "obc") return Boundary::OBC;
  throw InvalidSpec("unknown boundary '" + s + "' (expected pbc|obc)");
}

/// Rational approximant p/q of the quasiperiodic frequency, gcd(p,q)=1.
struct Rational {
  long p = 0;
  long q = 1;
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

/// Fibonacci approximant F_{k-1}/F_k of the inverse golden ratio with F_k = L.
/// Throws when L is not a Fibonacci number.
inline Rational fibonacci_alpha(long L) {
  long a = 1, b = 1;
  while (b < L) {
    long c = a + b;
    a = b;
    b = c;
  }
  if (b != L)
    throw InvalidSpec("L = " + std::to_string(L) +
                      " is not a Fibonacci number; pass alpha_p/alpha_q explicitly");
  return Rational{a, b};
}

/// Full parameterization of one Hamiltonian instance.
struct ModelSpec {
  ModelKind kind = ModelKind::Model3;
  double J = 1.0;      // uniform hopping amplitude
  double V = 1.0;      // onsite potential amplitude
  double phi = 0.0;    // Abelian phase factor, [-pi, pi)
  double beta = 0.0;   // nonreciprocity (Model 2)
  double gamma = 0.0;  // imaginary onsite phase (Model 3 / AbelianScalar)
  Rational alpha;      // frequency approximant p/q
  long L = 0;          // lattice length
  Boundary boundary = Boundary::PBC;
  double flux = 0.0;   // ring flux parameter, [0, 2pi)

  /// Matrix dimension: two spin components per site, except the scalar model.
  long dim() const { return kind == ModelKind::AbelianScalar ? L : 2 * L; }

  /// Left/right hopping pair per the model table.
  std::pair<double, double> hopping_pair() const {
    switch (kind) {
      case ModelKind::Model1: return {J, 0.0};
      case ModelKind::Model2: return {J * std::exp(-beta), J * std::exp(beta)};
      case ModelKind::Model3: return {J, J};
      case ModelKind::AbelianScalar:
        return {J * std::exp(-beta), J * std::exp(beta)};
    }
    return {J, J};
  }

  void validate() const {
    if (L <= 0) throw InvalidSpec("L must be positive");
    if (alpha.q <= 0) throw InvalidSpec("alpha_q must be positive");
    if (std::gcd(std::abs(alpha.p), alpha.q) != 1)
      throw InvalidSpec("alpha_p/alpha_q must be in lowest terms, got " +
                        std::to_string(alpha.p) + "/" + std::to_string(alpha.q));
    if (boundary == Boundary::PBC && L != alpha.q)
      throw InvalidSpec("PBC requires L = alpha_q so the potential closes on the "
                        "ring; got L = " + std::to_string(L) + ", alpha_q = " +
                        std::to_string(alpha.q));
    if (boundary == Boundary::OBC && flux != 0.0)
      throw InvalidSpec("flux threading requires PBC (a ring)");
  }

  ModelSpec with(const std::string& field, double value) const {
    ModelSpec s = *this;
    if (field == "J") s.J = value;
    else if (field == "V") s.V = value;
    else if (field == "phi") s.phi = value;
    else if (field == "beta") s.beta = value;
    else if (field == "gamma") s.gamma = value;
    else if (field == "flux") s.flux = value;
    else throw InvalidSpec("unknown sweepable field '" + field + "'");
    return s;
  }

  static bool is_sweepable(const std::string& field) {
    return field == "J" || field == "V" || field == "phi" || field == "beta" ||
           field == "gamma" || field == "flux";
  }

  KeyValueConfig to_config() const {
    KeyValueConfig cfg;
    cfg.set("kind", to_string(kind));
    cfg.set("J", format_double_exact(J));
    cfg.set("V", format_double_exact(V));
    cfg.set("phi", format_double_exact(phi));
    cfg.set("beta", format_double_exact(beta));
    cfg.set("gamma", format_double_exact(gamma));
    cfg.set("alpha_p", std::to_string(alpha.p));
    cfg.set("alpha_q", std::to_string(alpha.q));
    cfg.set("L", std::to_string(L));
    cfg.set("boundary", to_string(boundary));
    cfg.set("flux", format_double_exact(flux));
    return cfg;
  }

  /// Reads the spec fields out of a config. Unknown keys are left for the
  /// caller (plans carry additional keys); use strict=true to reject them.
  static ModelSpec from_config(const KeyValueConfig& cfg, bool strict = true) {
    ModelSpec s;
    s.kind = model_kind_from_string(cfg.get("kind"));
    s.J = cfg.get_double_or("J", 1.0);
    s.V = cfg.get_double_or("V", 1.0);
    s.phi = cfg.get_double_or("phi", 0.0);
    s.beta = cfg.get_double_or("beta", 0.0);
    s.gamma = cfg.get_double_or("gamma", 0.0);
    s.L = cfg.get_long("L");
    if (cfg.has("alpha_p") || cfg.has("alpha_q")) {
      s.alpha.p = cfg.get_long("alpha_p");
      s.alpha.q = cfg.get_long("alpha_q");
    } else {
      s.alpha = fibonacci_alpha(s.L);
    }
    s.boundary = boundary_from_string(cfg.get_or("boundary", "pbc"));
    s.flux = cfg.get_double_or("flux", 0.0);
    if (strict) cfg.reject_unused("model spec");
    s.validate();
    return s;
  }
};

/// Dense Hamiltonian with its originating spec.
struct HamiltonianMatrix {
  Matrix mat;
  ModelSpec spec;
  long dim() const { return mat.rows(); }
};

/// Theta(theta) = exp(i theta sigma_y) exp(i theta sigma_z), evaluated in
/// closed form; valid for complex theta via complex trig.
inline Matrix2 theta_matrix(Complex theta) {
  const Complex c = std::cos(theta), s = std::sin(theta);
  const Matrix2 ey = c * sigma0() + Complex(0, 1) * s * sigma_y();
  const Matrix2 ez = c * sigma0() + Complex(0, 1) * s * sigma_z();
  return ey * ez;
}

/// Inverse of Theta: exp(-i theta sigma_z) exp(-i theta sigma_y).
inline Matrix2 theta_matrix_inverse(Complex theta) {
  const Complex c = std::cos(theta), s = std::sin(theta);
  const Matrix2 ez = c * sigma0() - Complex(0, 1) * s * sigma_z();
  const Matrix2 ey = c * sigma0() - Complex(0, 1) * s * sigma_y();
  return ez * ey;
}

/// Pauli decomposition of e^{-i phi} Theta + e^{i phi} Theta^{-1}.
struct OnsiteBlock {
  Complex d0, dx, dy, dz;

  Matrix2 reconstruct() const {
    return d0 * sigma0() + dx * sigma_x() + dy * sigma_y() + dz * sigma_z();
  }
};

inline OnsiteBlock onsite_block(Complex theta, double phi) {
  const Complex c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
  OnsiteBlock b;
  b.d0 = std::cos(phi) * (c2 + 1.0);
  b.dx = std::sin(phi) * (c2 - 1.0);
  b.dy = std::sin(phi) * s2;
  b.dz = b.dy;
  return b;
}

/// Phase modulation theta_n for site n (1-based). Model 3 carries the
/// imaginary shift and, when flux-threaded, the flux/L offset.
inline Complex theta_n(const ModelSpec& spec, long n) {
  Complex th = 2.0 * kPi * spec.alpha.value() * static_cast<double>(n);
  if (spec.kind == ModelKind::Model3)
    th += Complex(spec.flux / static_cast<double>(spec.L), spec.gamma);
  return th;
}

namespace detail {

/// Hopping phases; flux enters Models 1-2 and the scalar model through the
/// hopping amplitudes, Model 3 through theta_n.
inline std::pair<Complex, Complex> hopping_phases(const ModelSpec& spec) {
  if (spec.flux != 0.0 && spec.kind != ModelKind::Model3) {
    const double t = spec.flux / static_cast<double>(spec.L);
    return {std::polar(1.0, -t), std::polar(1.0, t)};
  }
  return {1.0, 1.0};
}

}  // namespace detail

/// Real-space Hamiltonian. Sites n = 1..L; for the spinful models index
/// (n, sigma) maps to row 2(n-1)+sigma. Hopping J_L sigma_0 sits on the
/// superdiagonal blocks and J_R sigma_0 on the subdiagonal, wrapped under PBC.
inline HamiltonianMatrix build_hamiltonian(const ModelSpec& spec) {
  spec.validate();
  const auto [JL, JR] = spec.hopping_pair();
  const auto [fL, fR] = detail::hopping_phases(spec);
  const long L = spec.L;
  HamiltonianMatrix h{Matrix::Zero(spec.dim(), spec.dim()), spec};

  if (spec.kind == ModelKind::AbelianScalar) {
    for (long n = 1; n <= L; ++n) {
      const long i = n - 1;
      const Complex arg(2.0 * kPi * spec.alpha.value() * n + spec.phi, spec.gamma);
      h.mat(i, i) = spec.V * std::cos(arg);
      if (n < L || spec.boundary == Boundary::PBC) {
        const long j = n % L;
        h.mat(i, j) += JL * fL;
        h.mat(j, i) += JR * fR;
      }
    }
    return h;
  }

  for (long n = 1; n <= L; ++n) {
    const long i = 2 * (n - 1);
    const OnsiteBlock b = onsite_block(theta_n(spec, n), spec.phi);
    h.mat.block<2, 2>(i, i) = spec.V * b.reconstruct();
    if (n < L || spec.boundary == Boundary::PBC) {
      const long j = 2 * (n % L);
      h.mat.block<2, 2>(i, j) += JL * fL * sigma0();
      h.mat.block<2, 2>(j, i) += JR * fR * sigma0();
    }
  }
  return h;
}

/// Diagonal block of the momentum-space dual for mode l (1-based).
inline Matrix2 momentum_lambda_block(const ModelSpec& spec, long l) {
  const auto [JL, JR] = spec.hopping_pair();
  const auto [fL, fR] = detail::hopping_phases(spec);
  const double k = 2.0 * kPi * spec.alpha.value() * static_cast<double>(l);
  const Complex hop = JL * fL * std::polar(1.0, -k) + JR * fR * std::polar(1.0, k);
  return (hop + spec.V * std::cos(spec.phi)) * sigma0() -
         spec.V * std::sin(spec.phi) * sigma_x();
}

/// Mode-coupling block Xi (l -> l+2).
inline Matrix2 momentum_xi_block(const ModelSpec& spec) {
  const double c = spec.V / 2.0 * std::cos(spec.phi);
  const double s = spec.V / 2.0 * std::sin(spec.phi);
  return c * sigma0() + s * sigma_x() + Complex(0, -1) * s * sigma_y() +
         Complex(0, -1) * s * sigma_z();
}

/// Momentum-space Hamiltonian for Models 1-2 under PBC: diagonal blocks
/// Lambda_l with Xi couplings between modes l and l+2 (indices mod L).
/// Unitarily equivalent to the real-space build, so the spectra agree.
inline HamiltonianMatrix build_momentum_hamiltonian(const ModelSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Model1 && spec.kind != ModelKind::Model2)
    throw InvalidSpec("momentum-space build is defined for Models 1-2 only");
  if (spec.boundary != Boundary::PBC)
    throw InvalidSpec("momentum-space build requires PBC");
  const long L = spec.L;
  const Matrix2 xi = momentum_xi_block(spec);
  const Matrix2 xid = xi.adjoint();
  HamiltonianMatrix h{Matrix::Zero(2 * L, 2 * L), spec};
  for (long l = 1; l <= L; ++l) {
    const long i = 2 * (l - 1);
    h.mat.block<2, 2>(i, i) = momentum_lambda_block(spec, l);
    const long jp = 2 * ((l + 1) % L);       // mode l+2, 0-based block
    const long jm = 2 * ((l - 3 + L) % L);   // mode l-2
    h.mat.block<2, 2>(i, jp) += xi;
    h.mat.block<2, 2>(i, jm) += xid;
  }
  return h;
}

/// Decoupled spin chains at phi in {0, +-pi}: scalar AAH chains with onsite
/// potentials V (d0 + dz) and V (d0 - dz).
inline std::pair<Matrix, Matrix> build_abelian_chains(const ModelSpec& spec) {
  spec.validate();
  if (spec.kind == ModelKind::AbelianScalar)
    throw InvalidSpec("abelian chains are defined for the spinful models");
  for (long n = 1; n <= spec.L; ++n) {
    const OnsiteBlock b = onsite_block(theta_n(spec, n), spec.phi);
    if (std::abs(b.dx) > 1e-14 || std::abs(b.dy) > 1e-14)
      throw InvalidSpec("spin chains decouple only at phi in {0, +-pi}; "
                        "offdiagonal couplings are nonzero at phi = " +
                        format_double(spec.phi));
  }
  const auto [JL, JR] = spec.hopping_pair();
  const auto [fL, fR] = detail::hopping_phases(spec);
  const long L = spec.L;
  Matrix up = Matrix::Zero(L, L), dn = Matrix::Zero(L, L);
  for (long n = 1; n <= L; ++n) {
    const long i = n - 1;
    const OnsiteBlock b = onsite_block(theta_n(spec, n), spec.phi);
    up(i, i) = spec.V * (b.d0 + b.dz);
    dn(i, i) = spec.V * (b.d0 - b.dz);
    if (n < L || spec.boundary == Boundary::PBC) {
      const long j = n % L;
      up(i, j) += JL * fL;
      dn(i, j) += JL * fL;
      up(j, i) += JR * fR;
      dn(j, i) += JR * fR;
    }
  }
  return {up, dn};
}

/// Algebraic checks of the PT structure: U = exp(-i pi/4 sigma_x) rotates
/// sigma_y -> sigma_z -> -sigma_y, and the antiunitary T = U K commutes with
/// the momentum-space blocks (with parity l -> -l for Lambda).
struct PtCheckReport {
  double sigma_y_residual = 0;   // |U sy U^+ - sz|
  double sigma_z_residual = 0;   // |U sz U^+ + sy|
  double sigma_x_residual = 0;   // |U sx U^+ - sx|
  double lambda_residual = 0;    // max_l |U conj(Lambda_{-l}) U^+ - Lambda_l|
  double xi_residual = 0;        // |U conj(Xi) U^+ - Xi|
  double tolerance = 1e-12;
  bool pass() const {
    return sigma_y_residual < tolerance && sigma_z_residual < tolerance &&
           sigma_x_residual < tolerance && lambda_residual < tolerance &&
           xi_residual < tolerance;
  }
};

inline Matrix2 pt_rotation() {
  // exp(-i pi/4 sigma_x) = cos(pi/4) - i sin(pi/4) sigma_x
  return std::cos(kPi / 4) * sigma0() -
         Complex(0, 1) * std::sin(kPi / 4) * sigma_x();
}

inline PtCheckReport pt_operator_check(const ModelSpec& sample_spec,
                                       const std::vector<long>& modes = {1, 2, 3,
                                                                         5, 8}) {
  const Matrix2 U = pt_rotation();
  const Matrix2 Ud = U.adjoint();
  PtCheckReport r;
  r.sigma_y_residual = (U * sigma_y() * Ud - sigma_z()).cwiseAbs().maxCoeff();
  r.sigma_z_residual = (U * sigma_z() * Ud + sigma_y()).cwiseAbs().maxCoeff();
  r.sigma_x_residual = (U * sigma_x() * Ud - sigma_x()).cwiseAbs().maxCoeff();
  for (long l : modes) {
    const Matrix2 lam = momentum_lambda_block(sample_spec, l);
    const Matrix2 lam_m = momentum_lambda_block(sample_spec, -l);
    const double res = (U * lam_m.conjugate() * Ud - lam).cwiseAbs().maxCoeff();
    r.lambda_residual = std::max(r.lambda_residual, res);
  }
  const Matrix2 xi = momentum_xi_block(sample_spec);
  r.xi_residual = (U * xi.conjugate() * Ud - xi).cwiseAbs().maxCoeff();
  return r;
}

inline PtCheckReport pt_operator_check() {
  ModelSpec s;
  s.kind = ModelKind::Model2;
  s.J = 1.0;
  s.V = 1.0;
  s.phi = kPi / 3;
  s.beta = 0.4;
  s.L = 13;
  s.alpha = fibonacci_alpha(13);
  return pt_operator_check(s);
}

}  // namespace nhqc

#endif  // NHQC_MODEL_HPP
