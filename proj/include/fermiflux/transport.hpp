#pragma once

#include <vector>

#include "fermiflux/oracle.hpp"
#include "fermiflux/parallel.hpp"
#include "fermiflux/steady.hpp"

namespace fermiflux {

/// Steady-state particle currents with their frequency-resolved integrands.
/// Sign convention: J_k > 0 means particles flow into reservoir k.
struct CurrentReport {
  Eigen::VectorXd J;        // length n_B
  RealMatrix integrand;     // n_B x N samples of j-hat_k(theta_j)
  double conservation_defect = 0.0;
  int grid_N = 0;
};

/// General flux J_X = tr[X integral (Y-hat Xi-hat Y-hat^* - Xi-hat) dtheta/2pi]
/// for a Hermitian observable X commuting with every reservoir projection.
inline double flux_general(const BlockUnitary& z, const ReservoirSymbol& res, const Matrix& x,
                           const PeriodicGrid& grid, const Tolerances& tol = {}) {
  if (herm_defect(x) > tol.herm * std::max(x.norm(), 1.0))
    throw NotHermitian("flux_general: X must be Hermitian");
  for (const Matrix& p : res.projectors())
    if ((x * p - p * x).norm() > tol.herm * std::max(x.norm(), 1.0))
      throw ObservableNotBlockDiagonal("flux_general: [X, Pi_k] != 0");
  std::vector<double> samples(static_cast<std::size_t>(grid.N));
  parallel_for(samples.size(), [&](std::size_t j) {
    double th = grid.node(static_cast<int>(j));
    Matrix y = scattering_matrix(z, th, tol.sp);
    Matrix xh = res.xi_hat(th);
    samples[j] = (x * (y * xh * y.adjoint() - xh)).trace().real();
  });
  return periodic_quadrature(std::span<const double>(samples));
}

/// Per-reservoir currents J_k by periodic quadrature. Rank-one projectors use
/// the transmission/density factorization
///   j-hat_k = sum_{k' != k} C_{k,k'} (f_{k'} - f_k);
/// general rank uses the antisymmetrized trace form
///   j-hat_k = sum_{k' != k} tr[Y^* Pi_k Y Pi_{k'} Xi] - tr[Y^* Pi_{k'} Y Pi_k Xi].
inline CurrentReport currents(const BlockUnitary& z, const ReservoirSymbol& res,
                              const PeriodicGrid& grid, const Tolerances& tol = {}) {
  double rho = spectral_radius(z.M);
  if (rho >= 1.0 - tol.sp)
    throw SpectralRadiusTooLarge("currents: rho(M) = " + std::to_string(rho));
  const int nb = res.n_reservoirs();
  CurrentReport rep;
  rep.grid_N = grid.N;
  rep.integrand.resize(nb, grid.N);
  const bool rank_one = res.rank_one();
  parallel_for(static_cast<std::size_t>(grid.N), [&](std::size_t j) {
    double th = grid.node(static_cast<int>(j));
    Matrix y = scattering_matrix(z, th, tol.sp);
    Matrix xh = res.xi_hat(th);
    if (rank_one) {
      RealMatrix c(nb, nb);
      std::vector<double> f(static_cast<std::size_t>(nb));
      for (int k = 0; k < nb; ++k) {
        f[static_cast<std::size_t>(k)] =
            (res.projectors()[static_cast<std::size_t>(k)] * xh).trace().real();
        Matrix left = y.adjoint() * res.projectors()[static_cast<std::size_t>(k)] * y;
        for (int kp = 0; kp < nb; ++kp)
          c(k, kp) = (left * res.projectors()[static_cast<std::size_t>(kp)]).trace().real();
      }
      for (int k = 0; k < nb; ++k) {
        double v = 0.0;
        for (int kp = 0; kp < nb; ++kp)
          if (kp != k)
            v += c(k, kp) * (f[static_cast<std::size_t>(kp)] - f[static_cast<std::size_t>(k)]);
        rep.integrand(k, static_cast<int>(j)) = v;
      }
    } else {
      std::vector<Matrix> a(static_cast<std::size_t>(nb));
      for (int k = 0; k < nb; ++k)
        a[static_cast<std::size_t>(k)] =
            y.adjoint() * res.projectors()[static_cast<std::size_t>(k)] * y;
      for (int k = 0; k < nb; ++k) {
        double v = 0.0;
        for (int kp = 0; kp < nb; ++kp) {
          if (kp == k) continue;
          v += (a[static_cast<std::size_t>(k)] * res.projectors()[static_cast<std::size_t>(kp)] *
                xh).trace().real();
          v -= (a[static_cast<std::size_t>(kp)] * res.projectors()[static_cast<std::size_t>(k)] *
                xh).trace().real();
        }
        rep.integrand(k, static_cast<int>(j)) = v;
      }
    }
  });
  rep.J.resize(nb);
  for (int k = 0; k < nb; ++k) rep.J[k] = rep.integrand.row(k).mean();
  rep.conservation_defect = std::abs(rep.J.sum());
  return rep;
}

/// Quadrature-free currents via Stein solves of the time-domain series
///   sum_{n,m >= 0} Y_n Xi_{n-m} Y_m^* - Xi_0.
/// Exact for the finite reservoir band; unaffected by near-unit-circle
/// resonances of M, so it stays accurate at very small coupling.
inline Eigen::VectorXd currents_exact(const BlockUnitary& z, const ReservoirSymbol& res,
                                      const Tolerances& tol = {}) {
  double rho = spectral_radius(z.M);
  if (rho >= 1.0 - tol.sp)
    throw SpectralRadiusTooLarge("currents_exact: rho(M) = " + std::to_string(rho));
  const Matrix xi0 = res.block(0);
  Matrix s = z.C * xi0 * z.C.adjoint() +
             z.Z_BS * solve_stein(z.M, z.Z_SB * xi0 * z.Z_SB.adjoint(), tol.sp, tol.stein) *
                 z.Z_BS.adjoint();
  Matrix mp = Matrix::Identity(z.dim_S(), z.dim_S());  // M^{d-1}
  for (int d = 1; d <= res.band(); ++d) {
    Matrix xd = res.block(d);
    Matrix term = z.Z_BS * mp * z.Z_SB * xd * z.C.adjoint();
    term += z.Z_BS * z.M * mp *
            solve_stein(z.M, z.Z_SB * xd * z.Z_SB.adjoint(), tol.sp, tol.stein) *
            z.Z_BS.adjoint();
    s += term + term.adjoint();
    mp = z.M * mp;
  }
  const int nb = res.n_reservoirs();
  Eigen::VectorXd j(nb);
  for (int k = 0; k < nb; ++k)
    j[k] = (res.projectors()[static_cast<std::size_t>(k)] * (s - xi0)).trace().real();
  return j;
}

/// Expectation at the state's current time of the one-step particle gain of
/// a reservoir observable X, from the exact one-step difference
///   U^* (1 (x) X (+) 0) U - 1 (x) X (+) 0
/// which is supported on site 0 and the sample:
///   [ -P_0 (x) X + P_0 (x) C^* X C    delta_0 (x) C^* X Z_BS ]
///   [ delta_0^* (x) Z_BS^* X C        Z_BS^* X Z_BS          ].
inline double finite_time_flux(const LatticeState& st, const BlockUnitary& z,
                               const Matrix& x) {
  if (st.t > st.horizon())
    throw TruncationExceeded("finite_time_flux: state beyond its causal horizon");
  if (x.rows() != st.dB || x.cols() != st.dB)
    throw NumericalError("finite_time_flux: observable dimension mismatch");
  const Eigen::Index i0 = st.site_row(0), iS = st.sample_row();
  const Matrix t00 = st.T.block(i0, i0, st.dB, st.dB);
  const Matrix tS0 = st.T.block(iS, i0, st.dS, st.dB);
  const Matrix t0S = st.T.block(i0, iS, st.dB, st.dS);
  const Matrix tSS = st.T.block(iS, iS, st.dS, st.dS);
  Complex v = (t00 * (z.C.adjoint() * x * z.C - x)).trace();
  v += (tS0 * (z.C.adjoint() * x * z.Z_BS)).trace();
  v += (t0S * (z.Z_BS.adjoint() * x * z.C)).trace();
  v += (tSS * (z.Z_BS.adjoint() * x * z.Z_BS)).trace();
  return v.real();
}

/// Particle flux into reservoir k (X = Pi_k). Converges to J_k as t grows.
inline double finite_time_flux(const LatticeState& st, const BlockUnitary& z,
                               const ReservoirSymbol& res, int k) {
  return finite_time_flux(st, z, res.projectors()[static_cast<std::size_t>(k)]);
}

}  // namespace fermiflux
