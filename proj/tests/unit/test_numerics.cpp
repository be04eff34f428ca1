#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace fermiflux;
using fftest::Rng;

namespace {

// independent closed-form eigenvalues of a 2x2 Hermitian matrix
std::pair<double, double> eig2_closed_form(const Matrix& h) {
  double tr = h.trace().real();
  double det = (h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0)).real();
  double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
  return {(tr - disc) / 2.0, (tr + disc) / 2.0};
}

// independent closed-form eigenvalues of a 3x3 Hermitian matrix (trig cubic)
std::array<double, 3> eig3_closed_form(const Matrix& h) {
  double q = h.trace().real() / 3.0;
  Matrix b = h - q * Matrix::Identity(3, 3);
  double p2 = (b * b).trace().real() / 6.0;
  double p = std::sqrt(std::max(p2, 0.0));
  std::array<double, 3> out{q, q, q};
  if (p < 1e-300) return out;
  double detb = b.determinant().real();
  double r = detb / (2.0 * p * p * p);
  r = std::min(1.0, std::max(-1.0, r));
  double phi = std::acos(r) / 3.0;
  out[2] = q + 2.0 * p * std::cos(phi);
  out[0] = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  out[1] = 3.0 * q - out[0] - out[2];
  return out;
}

// small independent matrix exponential (scaling and squaring + Taylor)
Matrix expm_taylor(const Matrix& h) {
  int squarings = 0;
  Matrix x = h;
  while (x.norm() > 0.25) {
    x /= 2.0;
    ++squarings;
  }
  Matrix acc = Matrix::Identity(h.rows(), h.cols());
  Matrix term = acc;
  for (int k = 1; k <= 24; ++k) {
    term = term * x / static_cast<double>(k);
    acc += term;
  }
  for (int s = 0; s < squarings; ++s) acc = acc * acc;
  return acc;
}

Matrix random_hermitian(Eigen::Index d, Rng& rng) {
  Matrix g = fftest::ginibre(d, d, rng);
  return (g + g.adjoint()) / 2.0;
}

}  // namespace

TEST_CASE("herm_eig identity and diagonal cases") {
  HermitianEig e = herm_eig(Matrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(e.eigenvalues[i] == Catch::Approx(1.0).margin(1e-14));
  Matrix v = e.eigenvectors;
  CHECK((v.adjoint() * v - Matrix::Identity(3, 3)).norm() < 1e-12);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.2;
  d(1, 1) = 0.8;
  HermitianEig e2 = herm_eig(d);
  CHECK(e2.eigenvalues[0] == Catch::Approx(0.2).margin(1e-14));
  CHECK(e2.eigenvalues[1] == Catch::Approx(0.8).margin(1e-14));
}

TEST_CASE("herm_eig reconstructs random Hermitian matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix h = random_hermitian(6, rng);
    HermitianEig e = herm_eig(h);
    Matrix rec = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.adjoint();
    CHECK((rec - h).norm() <= 1e-12 * std::max(h.norm(), 1.0));
    for (Eigen::Index i = 0; i + 1 < e.eigenvalues.size(); ++i)
      CHECK(e.eigenvalues[i] <= e.eigenvalues[i + 1]);
  }
}

TEST_CASE("herm_eig eigenvalues match closed forms for d <= 3") {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix h2 = random_hermitian(2, rng);
    HermitianEig e2 = herm_eig(h2);
    auto [lo, hi] = eig2_closed_form(h2);
    CHECK(e2.eigenvalues[0] == Catch::Approx(lo).margin(1e-10));
    CHECK(e2.eigenvalues[1] == Catch::Approx(hi).margin(1e-10));

    Matrix h3 = random_hermitian(3, rng);
    HermitianEig e3 = herm_eig(h3);
    auto roots = eig3_closed_form(h3);
    std::sort(roots.begin(), roots.end());
    for (int i = 0; i < 3; ++i)
      CHECK(e3.eigenvalues[i] == Catch::Approx(roots[static_cast<std::size_t>(i)]).margin(1e-10));
  }
}

TEST_CASE("herm_eig rejects non-Hermitian input") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(herm_eig(m), NotHermitian);
}

TEST_CASE("matrix_log_clamped diagonal and scalar cases") {
  Matrix half = 0.5 * Matrix::Identity(3, 3);
  CHECK((matrix_log_clamped(half, 0.01) - std::log(0.5) * Matrix::Identity(3, 3)).norm() < 1e-13);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.2;
  d(1, 1) = 0.8;
  Matrix ld = matrix_log_clamped(d, 0.01);
  CHECK(ld(0, 0).real() == Catch::Approx(std::log(0.2)).margin(1e-13));
  CHECK(ld(1, 1).real() == Catch::Approx(std::log(0.8)).margin(1e-13));
}

TEST_CASE("exp of matrix_log_clamped recovers the matrix") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    // Hermitian with spectrum in (0.1, 0.9)
    Matrix h = random_hermitian(5, rng);
    h = herm_fn(h, [](double s) { return 0.5 + 0.4 * std::tanh(s); });
    Matrix back = expm_taylor(matrix_log_clamped(h, 0.01));
    CHECK((back - h).norm() < 1e-10);
  }
}

TEST_CASE("matrix_log_clamped flags spectrum violations") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = -0.05;  // below eps_clip beyond tol_clip
  d(1, 1) = 0.5;
  CHECK_THROWS_AS(matrix_log_clamped(d, 0.01), SpectrumOutOfRange);
}

TEST_CASE("solve_stein trivial and scalar cases") {
  Rng rng(14);
  Matrix rhs = random_hermitian(4, rng);
  Matrix v = solve_stein(Matrix::Zero(4, 4), rhs);
  CHECK((v - rhs).norm() < 1e-13);

  double r = 0.6;
  Matrix m = r * Matrix::Identity(3, 3);
  Matrix x = random_hermitian(3, rng);
  Matrix v2 = solve_stein(m, x);
  CHECK((v2 - x / (1.0 - r * r)).norm() < 1e-11);
}

TEST_CASE("solve_stein matches the truncated series oracle") {
  Rng rng(15);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix m = fftest::ginibre(5, 5, rng);
    m *= 0.7 / spectral_radius(m);
    Matrix rhs = random_hermitian(5, rng);
    Matrix v = solve_stein(m, rhs);
    // independent oracle: partial sums of Psi(X), rho^{2K} < 1e-12
    int big_k = static_cast<int>(std::ceil(12.0 * std::log(10.0) / (-2.0 * std::log(0.7)))) + 4;
    Matrix acc = rhs;
    Matrix mp = m;
    for (int k = 1; k <= big_k; ++k) {
      acc += mp * rhs * mp.adjoint();
      mp = m * mp;
    }
    CHECK((v - acc).norm() < 1e-9 * std::max(rhs.norm(), 1.0));
  }
}

TEST_CASE("solve_stein residual bound holds across random contractions") {
  Rng rng(16);
  for (int seed = 0; seed < 100; ++seed) {
    Matrix m = fftest::ginibre(4, 4, rng);
    std::uniform_real_distribution<double> u(0.2, 0.95);
    m *= u(rng) / spectral_radius(m);
    Matrix rhs = random_hermitian(4, rng);
    Matrix v = solve_stein(m, rhs);
    CHECK((v - m * v * m.adjoint() - rhs).norm() <= 1e-11 * std::max(rhs.norm(), 1.0));
    CHECK(herm_defect(v) < 1e-12 * std::max(v.norm(), 1.0));
  }
}

TEST_CASE("solve_stein doubling path agrees with the direct solve") {
  Rng rng(17);
  Matrix m = fftest::ginibre(6, 6, rng);
  m *= 0.8 / spectral_radius(m);
  Matrix rhs = random_hermitian(6, rng);
  Matrix direct = solve_stein(m, rhs);
  Matrix doubled = solve_stein(m, rhs, 1e-9, 1e-13, /*direct_threshold=*/0);
  CHECK((direct - doubled).norm() < 1e-10 * std::max(rhs.norm(), 1.0));
}

TEST_CASE("solve_stein rejects non-contractive M") {
  CHECK_THROWS_AS(solve_stein(Matrix::Identity(3, 3), Matrix::Identity(3, 3)),
                  SpectralRadiusTooLarge);
}

TEST_CASE("periodic quadrature: orthogonality, constants, Fourier extraction") {
  PeriodicGrid grid{16};
  std::vector<Matrix> osc, cst;
  for (int j = 0; j < grid.N; ++j) {
    double th = grid.node(j);
    osc.push_back(std::exp(Complex(0, th)) * Matrix::Identity(2, 2));
    cst.push_back(Matrix::Identity(2, 2));
  }
  CHECK(periodic_quadrature(std::span<const Matrix>(osc)).norm() < 1e-14);
  CHECK((periodic_quadrature(std::span<const Matrix>(cst)) - Matrix::Identity(2, 2)).norm() <
        1e-15);

  // band-3 symbol: integrating e^{-i l theta} Xi-hat extracts Xi_l exactly
  Rng rng(18);
  ReservoirSymbol res = fftest::random_rank_one_reservoir(2, 3, rng);
  std::vector<Matrix> samples;
  for (int j = 0; j < grid.N; ++j) samples.push_back(res.xi_hat(grid.node(j)));
  CHECK((periodic_quadrature(std::span<const Matrix>(samples)) - res.block(0)).norm() < 1e-14);
}

TEST_CASE("periodic quadrature is exact on trig polynomials below the grid order") {
  Rng rng(19);
  PeriodicGrid grid{32};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // random trig polynomial of degree < N with known mean coefficient
    std::vector<Complex> coeffs(20);
    for (auto& c : coeffs) c = Complex(u(rng), u(rng));
    coeffs[0] = Complex(coeffs[0].real(), 0.0);
    std::vector<double> samples;
    for (int j = 0; j < grid.N; ++j) {
      double th = grid.node(j);
      Complex v = coeffs[0];
      for (std::size_t l = 1; l < coeffs.size(); ++l) {
        v += coeffs[l] * std::exp(Complex(0, static_cast<double>(l) * th));
        v += std::conj(coeffs[l]) * std::exp(Complex(0, -static_cast<double>(l) * th));
      }
      samples.push_back(v.real());
    }
    CHECK(periodic_quadrature(std::span<const double>(samples)) ==
          Catch::Approx(coeffs[0].real()).margin(1e-14));
  }
}

TEST_CASE("general_eig biorthogonality and simplicity flags") {
  Rng rng(20);
  Matrix m = fftest::ginibre(6, 6, rng);
  GeneralEig e = general_eig(m);
  CHECK((e.left.adjoint() * e.right - Matrix::Identity(6, 6)).norm() < 1e-10);
  // reconstruction through the spectral decomposition
  Matrix rec = e.right * e.eigenvalues.asDiagonal() * e.left.adjoint();
  CHECK((rec - m).norm() < 1e-9 * m.norm());
  for (bool s : e.simple) CHECK(s);

  Matrix deg = Matrix::Identity(4, 4);
  deg(3, 3) = 2.0;
  GeneralEig e2 = general_eig(deg);
  int n_simple = 0;
  for (bool s : e2.simple) n_simple += s ? 1 : 0;
  CHECK(n_simple == 1);
}

TEST_CASE("spectral radius basics") {
  CHECK(spectral_radius(Matrix::Zero(3, 3)) == 0.0);
  Rng rng(21);
  Matrix w = fftest::random_unitary(5, rng);
  CHECK(spectral_radius(w) == Catch::Approx(1.0).margin(1e-12));
}
