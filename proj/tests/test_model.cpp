#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nhqc/model.hpp"
#include "nhqc/oracle.hpp"
#include "nhqc/spectral.hpp"

using namespace nhqc;
using Catch::Approx;

namespace {

ModelSpec make_spec(ModelKind kind, double J, double V, double phi, double beta,
                    double gamma, long L, Boundary bc = Boundary::PBC) {
  ModelSpec s;
  s.kind = kind;
  s.J = J;
  s.V = V;
  s.phi = phi;
  s.beta = beta;
  s.gamma = gamma;
  s.L = L;
  s.alpha = fibonacci_alpha(L);
  s.boundary = bc;
  return s;
}

Matrix2 oracle_theta(Complex th) {
  const Matrix2 ey = oracle::expm2(Complex(0, 1) * th * sigma_y());
  const Matrix2 ez = oracle::expm2(Complex(0, 1) * th * sigma_z());
  return ey * ez;
}

double max_abs(const Matrix2& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("theta_matrix closed form") {
  SECTION("theta = 0 gives the identity") {
    CHECK(max_abs(theta_matrix(0.0) - Matrix2::Identity()) < 1e-15);
  }
  SECTION("theta = pi/2 gives -i sigma_x") {
    const Matrix2 expect = Complex(0, -1) * sigma_x();
    CHECK(max_abs(theta_matrix(kPi / 2) - expect) < 1e-14);
  }
  SECTION("matches the brute-force exponential for random complex theta") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 200; ++k) {
      const Complex th(u(rng), 0.5 * u(rng));
      CHECK(max_abs(theta_matrix(th) - oracle_theta(th)) < 1e-12);
      CHECK(max_abs(theta_matrix(th) * theta_matrix_inverse(th) -
                    Matrix2::Identity()) < 1e-12);
    }
  }
  SECTION("non-Abelian condition at theta = pi/4") {
    const Complex th = kPi / 4;
    const Matrix2 a = theta_matrix(th);
    // reversed factor order
    const Matrix2 ey = oracle::expm2(Complex(0, 1) * th * sigma_y());
    const Matrix2 ez = oracle::expm2(Complex(0, 1) * th * sigma_z());
    const Matrix2 b = ez * ey;
    CHECK(max_abs(a * b - b * a) > 0.5);
  }
  SECTION("product commutator vanishes at theta in {0, pi/2, pi, 3pi/2}") {
    for (double th : {0.0, kPi / 2, kPi, 3 * kPi / 2}) {
      const Matrix2 ey = oracle::expm2(Complex(0, 1) * th * sigma_y());
      const Matrix2 ez = oracle::expm2(Complex(0, 1) * th * sigma_z());
      const Matrix2 a = ey * ez, b = ez * ey;
      CHECK(max_abs(a * b - b * a) < 1e-12);
    }
  }
}

TEST_CASE("onsite_block coefficients") {
  SECTION("theta = 0, phi = 0") {
    const OnsiteBlock b = onsite_block(0.0, 0.0);
    CHECK(std::abs(b.d0 - 2.0) < 1e-15);
    CHECK(std::abs(b.dx) < 1e-15);
    CHECK(std::abs(b.dy) < 1e-15);
    CHECK(std::abs(b.dz) < 1e-15);
  }
  SECTION("theta = pi/4, phi = pi/2") {
    const OnsiteBlock b = onsite_block(kPi / 4, kPi / 2);
    CHECK(std::abs(b.d0 - 0.0) < 1e-15);
    CHECK(std::abs(b.dx - (-1.0)) < 1e-14);
    CHECK(std::abs(b.dy - 1.0) < 1e-14);
    CHECK(std::abs(b.dz - 1.0) < 1e-14);
  }
  SECTION("imaginary theta = i/2, phi = pi/2") {
    const OnsiteBlock b = onsite_block(Complex(0, 0.5), kPi / 2);
    CHECK(std::abs(b.d0) < 1e-15);
    CHECK(std::abs(b.dx - (std::cosh(1.0) - 1.0)) < 1e-14);
    CHECK(std::abs(b.dy - Complex(0, std::sinh(1.0))) < 1e-14);
  }
  SECTION("dy equals dz exactly and reconstruction matches the direct product") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int k = 0; k < 1000; ++k) {
      const Complex th(u(rng), 0.4 * u(rng) / kPi);
      const double phi = u(rng);
      const OnsiteBlock b = onsite_block(th, phi);
      CHECK(b.dy == b.dz);
      const Matrix2 direct = std::polar(1.0, -phi) * oracle_theta(th) +
                             std::polar(1.0, phi) * oracle_theta(th).inverse();
      CHECK(max_abs(b.reconstruct() - direct) < 1e-12);
    }
  }
}

TEST_CASE("build_hamiltonian structure") {
  SECTION("Model 3 at gamma = 0 is Hermitian") {
    const auto h = build_hamiltonian(
        make_spec(ModelKind::Model3, 0.7, 1.3, 0.4, 0, 0, 13));
    CHECK((h.mat - h.mat.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("Model 2 at beta = 0 is Hermitian") {
    const auto h = build_hamiltonian(
        make_spec(ModelKind::Model2, 1.1, 0.9, -0.8, 0, 0, 8));
    CHECK((h.mat - h.mat.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("spin components decouple at phi in {0, pi, -pi}") {
    // phi = 0 decouples bitwise; +-pi only up to sin(pi) ~ 1.2e-16 since pi
    // itself is not representable.
    for (double phi : {0.0, kPi, -kPi}) {
      const auto h = build_hamiltonian(
          make_spec(ModelKind::Model2, 1.0, 6.0, phi, 0.7, 0, 8));
      double off = 0;
      for (long i = 0; i < h.dim(); ++i)
        for (long j = 0; j < h.dim(); ++j)
          if ((i + j) % 2 == 1) off = std::max(off, std::abs(h.mat(i, j)));
      if (phi == 0.0)
        CHECK(off == 0.0);
      else
        CHECK(off < 1e-14);
    }
  }
  SECTION("hopping blocks and PBC wrap") {
    auto spec = make_spec(ModelKind::Model2, 1.0, 0.0, 0.0, 0.5, 0, 5);
    spec.flux = 0.9;
    const auto h = build_hamiltonian(spec);
    const auto [JL, JR] = spec.hopping_pair();
    const Complex fL = std::polar(1.0, -spec.flux / 5);
    const Complex fR = std::polar(1.0, spec.flux / 5);
    CHECK(std::abs(h.mat(0, 2) - JL * fL) < 1e-15);
    CHECK(std::abs(h.mat(2, 0) - JR * fR) < 1e-15);
    CHECK(std::abs(h.mat(8, 0) - JL * fL) < 1e-15);  // wrap L -> 1
    CHECK(std::abs(h.mat(0, 8) - JR * fR) < 1e-15);
  }
  SECTION("deep-localized Model 1 at L = 5: OBC spectrum is real") {
    // Under OBC the unidirectional chain is block triangular, so the
    // eigenvalues are exactly the onsite-block ones.
    const auto h = build_hamiltonian(
        make_spec(ModelKind::Model1, 0.1, 1.0, kPi / 10, 0, 0, 5, Boundary::OBC));
    const auto dec = decompose(h.mat, {.compute_left = false});
    for (long j = 0; j < dec.dim(); ++j)
      CHECK(std::abs(dec.eigenvalues[j].imag()) < 1e-8);
    // char-poly route agrees at its own accuracy
    std::vector<Complex> eigs(dec.eigenvalues.data(),
                              dec.eigenvalues.data() + dec.dim());
    CHECK(oracle::multiset_distance(eigs, oracle::charpoly_eigenvalues(h.mat)) <
          1e-6);
  }
  SECTION("deep-localized Model 1 at L = 5: PBC wrap loop breaks realness") {
    // The PBC spectrum at this size is conjugation-closed but measurably
    // nonreal; see the notes on the corrected example value.
    const auto h = build_hamiltonian(
        make_spec(ModelKind::Model1, 0.1, 1.0, kPi / 10, 0, 0, 5));
    const auto dec = decompose(h.mat, {.compute_left = false});
    double im_max = 0;
    std::vector<Complex> eigs, conj;
    for (long j = 0; j < dec.dim(); ++j) {
      const Complex e = dec.eigenvalues[j];
      im_max = std::max(im_max, std::abs(e.imag()));
      eigs.push_back(e);
      conj.push_back(std::conj(e));
    }
    CHECK(im_max > 1e-3);
    CHECK(im_max < 1e-1);
    CHECK(oracle::multiset_distance(eigs, conj) < 1e-8);
    CHECK(oracle::multiset_distance(eigs, oracle::charpoly_eigenvalues(h.mat)) <
          1e-6);
  }
  SECTION("rejects flux under OBC and L != q under PBC") {
    auto s = make_spec(ModelKind::Model1, 1, 1, 0, 0, 0, 8, Boundary::OBC);
    s.flux = 0.3;
    CHECK_THROWS_AS(build_hamiltonian(s), InvalidSpec);
    auto s2 = make_spec(ModelKind::Model1, 1, 1, 0, 0, 0, 8);
    s2.L = 9;
    CHECK_THROWS_AS(build_hamiltonian(s2), InvalidSpec);
  }
  SECTION("abelian scalar model is the cosine chain") {
    auto s = make_spec(ModelKind::AbelianScalar, 1.0, 2.0, 0.3, 0.5, 0.2, 5);
    const auto h = build_hamiltonian(s);
    REQUIRE(h.dim() == 5);
    const Complex expect = 2.0 * std::cos(Complex(2 * kPi * 0.6 + 0.3, 0.2));
    CHECK(std::abs(h.mat(0, 0) - expect) < 1e-14);
    CHECK(std::abs(h.mat(0, 1) - std::exp(-0.5)) < 1e-14);
    CHECK(std::abs(h.mat(1, 0) - std::exp(0.5)) < 1e-14);
  }
}

TEST_CASE("momentum-space dual") {
  SECTION("free case: diagonal blocks 2J cos(2 pi alpha l)") {
    const auto h = build_momentum_hamiltonian(
        make_spec(ModelKind::Model2, 0.8, 0.0, 0.0, 0, 0, 5));
    for (long l = 1; l <= 5; ++l) {
      const double expect = 2 * 0.8 * std::cos(2 * kPi * 0.6 * l);
      CHECK(std::abs(h.mat(2 * l - 2, 2 * l - 2) - expect) < 1e-12);
      CHECK(std::abs(h.mat(2 * l - 1, 2 * l - 1) - expect) < 1e-12);
    }
    // off-diagonal couplings vanish at V = 0
    Matrix off = h.mat;
    for (long l = 0; l < 5; ++l) off.block<2, 2>(2 * l, 2 * l).setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("Xi block at V = 2, phi = pi/2") {
    auto s = make_spec(ModelKind::Model1, 1, 2.0, kPi / 2, 0, 0, 5);
    const Matrix2 expect = sigma_x() - Complex(0, 1) * sigma_y() -
                           Complex(0, 1) * sigma_z();
    CHECK(max_abs(momentum_xi_block(s) - expect) < 1e-14);
  }
  SECTION("eigenvalue multisets match the real-space build") {
    struct Case {
      ModelKind kind;
      double J, V, phi, beta;
    };
    const Case cases[] = {
        {ModelKind::Model1, 0.5, 1.0, kPi / 10, 0},
        {ModelKind::Model2, 1.0, 6.0, kPi / 2, 0.8},
        {ModelKind::Model2, 1.0, 6.0, 0.7, 1.5},
    };
    for (long L : {5L, 8L, 13L}) {
      for (const auto& c : cases) {
        const auto spec = make_spec(c.kind, c.J, c.V, c.phi, c.beta, 0, L);
        const auto ep = decompose(build_hamiltonian(spec).mat,
                                  {.compute_left = false}).eigenvalues;
        const auto em = decompose(build_momentum_hamiltonian(spec).mat,
                                  {.compute_left = false}).eigenvalues;
        CHECK(oracle::multiset_distance(ep, em) < 1e-8);
      }
    }
  }
  SECTION("rejects Model 3 and OBC") {
    CHECK_THROWS_AS(build_momentum_hamiltonian(
                        make_spec(ModelKind::Model3, 1, 1, 0, 0, 0.3, 8)),
                    InvalidSpec);
    CHECK_THROWS_AS(build_momentum_hamiltonian(make_spec(
                        ModelKind::Model1, 1, 1, 0, 0, 0, 8, Boundary::OBC)),
                    InvalidSpec);
  }
}

TEST_CASE("abelian chain decomposition") {
  SECTION("phi = 0: both chains carry V (cos 2 theta + 1)") {
    const auto spec = make_spec(ModelKind::Model2, 1.0, 6.0, 0.0, 0.9, 0, 8);
    const auto [up, dn] = build_abelian_chains(spec);
    for (long n = 1; n <= 8; ++n) {
      const double pot =
          6.0 * (std::cos(2 * (2 * kPi * fibonacci_alpha(8).value() * n)) + 1);
      CHECK(std::abs(up(n - 1, n - 1) - pot) < 1e-12);
      CHECK(up(n - 1, n - 1) == dn(n - 1, n - 1));
      CHECK(std::abs(up(n - 1, n % 8) - std::exp(-0.9)) < 1e-14);
    }
  }
  SECTION("phi = pi, Model 1, L = 5: chain spectra union equals the full model") {
    const auto spec = make_spec(ModelKind::Model1, 0.4, 1.0, kPi, 0, 0, 5);
    const auto [up, dn] = build_abelian_chains(spec);
    const auto full = decompose(build_hamiltonian(spec).mat,
                                {.compute_left = false}).eigenvalues;
    std::vector<Complex> uni;
    for (const Complex& e : oracle::charpoly_eigenvalues(up)) uni.push_back(e);
    for (const Complex& e : oracle::charpoly_eigenvalues(dn)) uni.push_back(e);
    CHECK(oracle::multiset_distance(
              std::vector<Complex>(full.data(), full.data() + full.size()),
              uni) < 1e-8);
  }
  SECTION("rejects spin-coupled phi") {
    CHECK_THROWS_AS(build_abelian_chains(
                        make_spec(ModelKind::Model1, 1, 1, kPi / 3, 0, 0, 5)),
                    InvalidSpec);
  }
}

TEST_CASE("PT operator algebra") {
  const PtCheckReport r = pt_operator_check();
  CHECK(r.sigma_y_residual < 1e-12);
  CHECK(r.sigma_z_residual < 1e-12);
  CHECK(r.sigma_x_residual < 1e-12);
  CHECK(r.lambda_residual < 1e-12);
  CHECK(r.xi_residual < 1e-12);
  CHECK(r.pass());

  // Xi block at V = 1, phi = pi/3 commutes with T = U K directly.
  auto s = make_spec(ModelKind::Model2, 1.0, 1.0, kPi / 3, 0.3, 0, 13);
  const Matrix2 xi = momentum_xi_block(s);
  const Matrix2 U = pt_rotation();
  CHECK(max_abs(U * xi.conjugate() * U.adjoint() - xi) < 1e-12);
}

TEST_CASE("model spec serialization and validation") {
  SECTION("config round trip") {
    auto s = make_spec(ModelKind::Model3, 1.25, 0.5, kPi / 2, 0, 0.8, 13);
    s.flux = 1.5;
    const auto cfg = KeyValueConfig::parse(s.to_config().to_text());
    const ModelSpec t = ModelSpec::from_config(cfg);
    CHECK(t.kind == s.kind);
    CHECK(t.J == s.J);
    CHECK(t.phi == s.phi);
    CHECK(t.gamma == s.gamma);
    CHECK(t.alpha.p == 8);
    CHECK(t.alpha.q == 13);
    CHECK(t.flux == s.flux);
  }
  SECTION("unknown keys are rejected by name") {
    auto cfg = KeyValueConfig::parse("kind = model1\nL = 5\nbogus = 7\n");
    try {
      ModelSpec::from_config(cfg);
      FAIL("expected PlanError");
    } catch (const PlanError& e) {
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }
  SECTION("alpha defaults to the Fibonacci approximant of L") {
    const auto cfg = KeyValueConfig::parse("kind = model1\nL = 610\n");
    const ModelSpec s = ModelSpec::from_config(cfg);
    CHECK(s.alpha.p == 377);
    CHECK(s.alpha.q == 610);
  }
  SECTION("gcd and ring-closure validation") {
    auto s = make_spec(ModelKind::Model1, 1, 1, 0, 0, 0, 8);
    s.alpha = {4, 8};
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    CHECK_THROWS_AS(fibonacci_alpha(9), InvalidSpec);
  }
}
