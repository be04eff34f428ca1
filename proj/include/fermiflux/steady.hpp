#pragma once

#include <vector>

#include "fermiflux/parallel.hpp"
#include "fermiflux/scattering.hpp"

namespace fermiflux {

/// Asymptotic sample symbol with its generator and the Stein residual.
struct SteadySampleState {
  Matrix Delta_inf;
  Matrix G;
  double residual = 0.0;
};

/// Delta_inf = Psi(G + G^*) with
///   G = 1/2 Z_SB Xi_0 Z_SB^* + sum_{l=1..band} M^l Z_SB Xi_l Z_SB^*,
/// solved as the Stein fixed point V - M V M^* = G + G^*.
inline SteadySampleState steady_sample(const BlockUnitary& z, const ReservoirSymbol& res,
                                       const Tolerances& tol = {}) {
  double rho = spectral_radius(z.M);
  if (rho >= 1.0 - tol.sp)
    throw SpectralRadiusTooLarge("steady_sample: rho(M) = " + std::to_string(rho));
  SteadySampleState out;
  out.G = 0.5 * z.Z_SB * res.block(0) * z.Z_SB.adjoint();
  Matrix ml = Matrix::Identity(z.dim_S(), z.dim_S());
  for (int l = 1; l <= res.band(); ++l) {
    ml = z.M * ml;
    out.G += ml * z.Z_SB * res.block(l) * z.Z_SB.adjoint();
  }
  Matrix rhs = out.G + out.G.adjoint();
  out.Delta_inf = solve_stein(z.M, rhs, tol.sp, tol.stein);
  out.residual = (out.Delta_inf - z.M * out.Delta_inf * z.M.adjoint() - rhs).norm();
  HermitianEig e = herm_eig(out.Delta_inf, 1e-9);
  if (e.eigenvalues.minCoeff() < -1e-10 || e.eigenvalues.maxCoeff() > 1.0 + 1e-10)
    throw NumericalError("steady_sample: Delta_inf spectrum escapes [0, 1]");
  return out;
}

/// Closed-form sample symbol at time t:
///   Delta^t = M^t Delta (M^*)^t + sum_{m,n < t} M^m Z_SB Xi_{m-n} Z_SB^* (M^*)^n,
/// with the double sum restricted to the finite reservoir band.
inline Matrix sample_at_time(const BlockUnitary& z, const ReservoirSymbol& res,
                             const SampleInitial& d0, int t) {
  if (t < 0) throw NumericalError("sample_at_time: negative time");
  std::vector<Matrix> p;  // p[m] = M^m Z_SB
  p.reserve(static_cast<std::size_t>(t));
  Matrix cur = z.Z_SB;
  Matrix mt = Matrix::Identity(z.dim_S(), z.dim_S());
  for (int m = 0; m < t; ++m) {
    p.push_back(cur);
    cur = z.M * cur;
    mt = z.M * mt;
  }
  Matrix acc = mt * d0.Delta * mt.adjoint();
  const int band = res.band();
  for (int m = 0; m < t; ++m)
    for (int d = -band; d <= band; ++d) {
      int n = m - d;
      if (n < 0 || n >= t) continue;
      acc += p[static_cast<std::size_t>(m)] * res.block(d) *
             p[static_cast<std::size_t>(n)].adjoint();
    }
  return acc;
}

/// Repeated-interaction comparison symbol, the diagonal-only sum
///   Delta^t_RIS = M^t Delta (M^*)^t + sum_{m < t} M^m Z_SB Xi_0 Z_SB^* (M^*)^m.
/// Coincides with sample_at_time iff Xi_l = 0 for all l != 0.
inline Matrix sample_at_time_ris(const BlockUnitary& z, const ReservoirSymbol& res,
                                 const SampleInitial& d0, int t) {
  if (t < 0) throw NumericalError("sample_at_time_ris: negative time");
  Matrix acc = Matrix::Zero(z.dim_S(), z.dim_S());
  Matrix kernel = z.Z_SB * res.block(0) * z.Z_SB.adjoint();
  Matrix mm = Matrix::Identity(z.dim_S(), z.dim_S());
  for (int m = 0; m < t; ++m) {
    acc += mm * kernel * mm.adjoint();
    mm = z.M * mm;
  }
  return mm * d0.Delta * mm.adjoint() + acc;
}

/// Asymptotic environment symbol in the frequency domain:
///   Xi-hat-inf(theta) = Y-hat(theta) Xi-hat(theta) Y-hat(theta)^*.
inline Matrix xi_infty(const BlockUnitary& z, const ReservoirSymbol& res, double theta,
                       double tol_sp = 1e-9) {
  Matrix y = scattering_matrix(z, theta, tol_sp);
  return y * res.xi_hat(theta) * y.adjoint();
}

/// Fourier block Xi-inf_m extracted by periodic quadrature of Xi-hat-inf.
inline Matrix xi_infty_block(const BlockUnitary& z, const ReservoirSymbol& res, int m,
                             const PeriodicGrid& grid, double tol_sp = 1e-9) {
  std::vector<Matrix> samples(static_cast<std::size_t>(grid.N));
  parallel_for(samples.size(), [&](std::size_t j) {
    double th = grid.node(static_cast<int>(j));
    samples[j] = std::exp(Complex(0, -m * th)) * xi_infty(z, res, th, tol_sp);
  });
  return periodic_quadrature(std::span<const Matrix>(samples));
}

/// Block (n, m) of the asymptotic environment symbol, in the gauge where the
/// reservoir internal dynamics is absorbed into Xi:
///   n, m >= 0      : Xi_{m-n}           (not yet scattered)
///   n < 0 <= m     : sum_l Y_l Xi_{l+m-n}
///   n, m < 0       : Xi-inf_{m-n}
inline Matrix env_block(const BlockUnitary& z, const ReservoirSymbol& res, int n, int m,
                        const PeriodicGrid& grid, double tol_sp = 1e-9) {
  if (n >= 0 && m >= 0) return res.block(m - n);
  if (n < 0 && m < 0) return xi_infty_block(z, res, m - n, grid, tol_sp);
  if (n >= 0 && m < 0) return env_block(z, res, m, n, grid, tol_sp).adjoint();
  // n < 0 <= m: the band makes the l-sum finite, l + m - n <= band
  Matrix acc = Matrix::Zero(res.dim(), res.dim());
  const int band = res.band();
  Matrix mp;  // M^{l-1}
  for (int l = 0; l + m - n <= band; ++l) {
    Matrix yl;
    if (l == 0) {
      yl = z.C;
    } else {
      mp = (l == 1) ? Matrix::Identity(z.dim_S(), z.dim_S()) : Matrix(z.M * mp);
      yl = z.Z_BS * mp * z.Z_SB;
    }
    acc += yl * res.block(l + m - n);
  }
  return acc;
}

}  // namespace fermiflux
