#pragma once

#include <vector>

#include "fermiflux/model.hpp"

namespace fermiflux {

/// Time-domain scattering amplitudes Y_0 = C, Y_m = Z_BS M^{m-1} Z_SB,
/// listed up to the index where a computed norm bound drops below tail_tol.
struct ScatteringSequence {
  std::vector<Matrix> Y;
  double decay_rate = 0.0;  // spectral radius of M, governs the tail
};

inline ScatteringSequence scattering_sequence(const BlockUnitary& z, double tail_tol,
                                              double tol_sp = 1e-9,
                                              std::size_t max_len = 2000000) {
  double rho = spectral_radius(z.M);
  if (rho >= 1.0 - tol_sp)
    throw SpectralRadiusTooLarge("scattering_sequence: rho(M) = " + std::to_string(rho));
  ScatteringSequence seq;
  seq.decay_rate = rho;
  seq.Y.push_back(z.C);
  double nbs = z.Z_BS.norm(), nsb = z.Z_SB.norm();
  if (nbs == 0.0 || nsb == 0.0) return seq;  // uncoupled: all Y_m = 0 for m >= 1
  Matrix mp = Matrix::Identity(z.dim_S(), z.dim_S());  // M^{m-1}
  for (std::size_t m = 1; m <= max_len; ++m) {
    seq.Y.push_back(z.Z_BS * mp * z.Z_SB);
    if (nbs * mp.norm() * nsb <= tail_tol) return seq;
    mp = z.M * mp;
  }
  throw NumericalError("scattering_sequence: tail did not reach tail_tol within max_len");
}

/// Frequency-domain scattering matrix via the resolvent form
///   Y-hat(theta) = C - Z_BS (M - e^{i theta})^{-1} Z_SB,
/// exact and uniformly stable when rho(M) < 1.
inline Matrix scattering_matrix(const BlockUnitary& z, double theta, double tol_sp = 1e-9) {
  if (z.Z_BS.norm() == 0.0 || z.Z_SB.norm() == 0.0) return z.C;  // uncoupled limit
  Matrix shifted = z.M - std::exp(Complex(0, theta)) * Matrix::Identity(z.dim_S(), z.dim_S());
  Eigen::PartialPivLU<Matrix> lu(shifted);
  if (lu.rcond() < tol_sp)
    throw SingularResolvent("scattering_matrix: (M - e^{i theta}) ill-conditioned at theta = " +
                            std::to_string(theta));
  return z.C - z.Z_BS * lu.solve(z.Z_SB);
}

/// Transmission coefficients C_{k,k'}(theta) = tr[Y-hat^* Pi_k Y-hat Pi_{k'}].
/// Rows and columns sum to rank(Pi_k); doubly stochastic in the rank-one case.
inline RealMatrix transmission(const BlockUnitary& z, const std::vector<Matrix>& projectors,
                               double theta, double tol_sp = 1e-9) {
  Matrix y = scattering_matrix(z, theta, tol_sp);
  const int n = static_cast<int>(projectors.size());
  RealMatrix c(n, n);
  for (int k = 0; k < n; ++k) {
    Matrix left = y.adjoint() * projectors[static_cast<std::size_t>(k)] * y;
    for (int kp = 0; kp < n; ++kp)
      c(k, kp) = (left * projectors[static_cast<std::size_t>(kp)]).trace().real();
  }
  return c;
}

}  // namespace fermiflux
