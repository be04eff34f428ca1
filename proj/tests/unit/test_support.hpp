#pragma once

#include <random>

#include "fermiflux/fermiflux.hpp"

namespace fftest {

using namespace fermiflux;

using Rng = std::mt19937_64;

inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fixing.
inline Matrix random_unitary(Eigen::Index d, Rng& rng) {
  Matrix g = ginibre(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    Complex di = r(i, i);
    q.col(i) *= di / std::abs(di);
  }
  return q;
}

inline CouplingSpec random_coupling(Eigen::Index dS, Eigen::Index dB, double alpha, Rng& rng) {
  Matrix w = random_unitary(dS, rng);
  Matrix a = ginibre(dS, dB, rng);
  a /= a.norm();
  a *= std::sqrt(static_cast<double>(dB));
  return make_coupling_spec(std::move(w), std::move(a), alpha);
}

/// Random valid block unitary with rho(M) < 1, from a Haar unitary on
/// H_B (+) H_S.
inline BlockUnitary random_block_unitary(Eigen::Index dB, Eigen::Index dS, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Matrix z = random_unitary(dB + dS, rng);
    BlockUnitary b = make_block_unitary(z.topLeftCorner(dB, dB), z.topRightCorner(dB, dS),
                                        z.bottomLeftCorner(dS, dB), z.bottomRightCorner(dS, dS));
    if (spectral_radius(b.M) < 1.0 - 1e-6) return b;
  }
  throw std::runtime_error("random_block_unitary: no contractive sample block found");
}

/// Unitary dilation of a strict contraction M placed in the sample corner:
/// Z = [ -M*, (1 - M*M)^{1/2} ; (1 - M M*)^{1/2}, M ].
inline BlockUnitary unitary_dilation(const Matrix& m) {
  auto sqrt_clip = [](double s) { return std::sqrt(std::max(s, 0.0)); };
  Matrix i = Matrix::Identity(m.rows(), m.cols());
  Matrix c = -m.adjoint();
  Matrix zbs = herm_fn(Matrix(i - m.adjoint() * m), sqrt_clip);
  Matrix zsb = herm_fn(Matrix(i - m * m.adjoint()), sqrt_clip);
  return make_block_unitary(std::move(c), std::move(zbs), std::move(zsb), m, 1e-9);
}

/// Random density with spectrum margin >= 0.05 and Fourier band `band`.
inline Density random_density(int band, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double c0 = 0.3 + 0.4 * u(rng);
  if (band == 0) return Density::constant(c0);
  double budget = std::min(c0, 1.0 - c0) - 0.05;
  std::vector<Complex> coeffs{Complex(c0, 0.0)};
  double used = 0.0;
  for (int l = 1; l <= band; ++l) {
    double mag = budget * u(rng) / (2.0 * band);
    double ph = 2.0 * M_PI * u(rng);
    coeffs.push_back(std::polar(mag, ph));
    used += 2.0 * mag;
  }
  (void)used;
  return Density::fourier(std::move(coeffs));
}

/// Rank-one reservoir on the canonical basis of C^{n_B} with random densities.
inline ReservoirSymbol random_rank_one_reservoir(int nb, int band, Rng& rng) {
  std::vector<Matrix> projectors;
  for (int k = 0; k < nb; ++k) {
    Matrix p = Matrix::Zero(nb, nb);
    p(k, k) = 1.0;
    projectors.push_back(std::move(p));
  }
  std::vector<Density> densities;
  for (int k = 0; k < nb; ++k) densities.push_back(random_density(band, rng));
  return ReservoirSymbol(std::move(projectors), std::move(densities));
}

inline CycleModelParams acceptance_preset() {
  CycleModelParams p;
  p.n = 8;
  p.phi = M_PI / 3;
  p.beta = 0.1;
  p.alpha = 0.3;
  p.f_L = Density::constant(0.9);
  p.f_R = Density::constant(0.1);
  return p;
}

}  // namespace fftest
