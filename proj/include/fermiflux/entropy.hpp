#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "fermiflux/oracle.hpp"
#include "fermiflux/parallel.hpp"
#include "fermiflux/steady.hpp"

namespace fermiflux {

/// Entropy production rate data: the asymptotic rate from the relative-entropy
/// integral, the flux-form value when all projectors have rank one (NaN
/// otherwise), and the frequency-resolved pieces.
struct EntropyReport {
  double sigma_plus = 0.0;
  double sigma_plus_flux_form = std::numeric_limits<double>::quiet_NaN();
  RealVector integrand;  // N nodal relative-entropy sums
  RealMatrix mu;         // n_B x N samples of mu_k(theta_j) (rank-one case)
  double eps_clip = 0.0;
};

/// sigma_plus = int S[Y Xi Y^* | Xi] + S[1 - Y Xi Y^* | 1 - Xi] dtheta/2pi,
/// with S[X|Y] = tr[X (log X - log Y)], logs clamped at eps_clip. Requires the
/// reservoir symbol bounded away from 0 and 1 on the grid. If eps_clip < 0 it
/// defaults to a tenth of the measured spectrum margin.
inline EntropyReport entropy_rate(const BlockUnitary& z, const ReservoirSymbol& res,
                                  const PeriodicGrid& grid, double eps_clip = -1.0,
                                  const Tolerances& tol = {}) {
  double margin = res.spectrum_margin(grid);
  if (margin <= 0.0)
    throw SpectrumOutOfRange("entropy_rate: reservoir symbol not bounded away from 0 and 1");
  if (eps_clip < 0.0) eps_clip = margin / 10.0;
  const int nb = res.n_reservoirs();
  const bool rank_one = res.rank_one();
  EntropyReport rep;
  rep.eps_clip = eps_clip;
  rep.integrand.resize(grid.N);
  if (rank_one) rep.mu.resize(nb, grid.N);
  RealMatrix flux_int(rank_one ? nb : 0, grid.N);
  Matrix idB = Matrix::Identity(res.dim(), res.dim());
  parallel_for(static_cast<std::size_t>(grid.N), [&](std::size_t jn) {
    const int j = static_cast<int>(jn);
    double th = grid.node(j);
    Matrix y = scattering_matrix(z, th, tol.sp);
    Matrix xh = res.xi_hat(th);
    Matrix p = y * xh * y.adjoint();
    Matrix log_p = matrix_log_clamped(p, eps_clip, tol.clip);
    Matrix log_q = matrix_log_clamped(xh, eps_clip, tol.clip);
    Matrix log_1p = matrix_log_clamped(idB - p, eps_clip, tol.clip);
    Matrix log_1q = matrix_log_clamped(idB - xh, eps_clip, tol.clip);
    double s = (p * (log_p - log_q)).trace().real() +
               ((idB - p) * (log_1p - log_1q)).trace().real();
    rep.integrand[j] = s;
    if (rank_one) {
      for (int k = 0; k < nb; ++k) {
        const Matrix& pk = res.projectors()[static_cast<std::size_t>(k)];
        double f = (pk * xh).trace().real();
        double fc = std::min(std::max(f, eps_clip), 1.0 - eps_clip);
        rep.mu(k, j) = std::log((1.0 - fc) / fc);
        flux_int(k, j) = rep.mu(k, j) * (pk * (p - xh)).trace().real();
      }
    }
  });
  rep.sigma_plus = rep.integrand.mean();
  if (rank_one) {
    rep.sigma_plus_flux_form = 0.0;
    for (int k = 0; k < nb; ++k) rep.sigma_plus_flux_form += flux_int.row(k).mean();
  }
  return rep;
}

/// Least distance of the initial lattice data (environment symbol on the
/// cyclic frequencies and the sample corner) from the spectrum bounds {0, 1}.
inline double lattice_spectrum_margin(const LatticeState& st) {
  double margin = 0.5;
  const Eigen::Index ns = st.sites();
  for (Eigen::Index j = 0; j < ns; ++j) {
    double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(ns);
    Matrix xh = Matrix::Zero(st.dB, st.dB);
    for (const auto& [l, b] : st.xi_blocks) xh += std::exp(Complex(0, l * th)) * b;
    HermitianEig e = herm_eig(xh, 1e-9);
    margin = std::min({margin, e.eigenvalues.minCoeff(), 1.0 - e.eigenvalues.maxCoeff()});
  }
  HermitianEig e0 = herm_eig(st.Delta0, 1e-9);
  margin = std::min({margin, e0.eigenvalues.minCoeff(), 1.0 - e0.eigenvalues.maxCoeff()});
  return margin;
}

/// Rebuilds T_tot(0) from the initial data stored in the state.
inline Matrix lattice_initial_symbol(const LatticeState& st) {
  const Eigen::Index ns = st.sites();
  Matrix t0 = Matrix::Zero(st.dim(), st.dim());
  for (Eigen::Index a = 0; a < ns; ++a)
    for (const auto& [l, b] : st.xi_blocks) {
      Eigen::Index col = ((a + l) % ns + ns) % ns;
      t0.block(a * st.dB, col * st.dB, st.dB, st.dB) = b;
    }
  t0.block(st.sample_row(), st.sample_row(), st.dS, st.dS) = st.Delta0;
  return t0;
}

/// log T_tot(0) - log(1 - T_tot(0)) on the truncation. The environment part of
/// T_tot(0) is block-circulant, so its logs are computed exactly per cyclic
/// frequency and transformed back; the sample corner is a dense Hermitian log.
inline Matrix lattice_log_ratio(const LatticeState& st, double eps_clip,
                                double tol_clip = 1e-9) {
  const Eigen::Index ns = st.sites(), dB = st.dB, dS = st.dS;
  Matrix out = Matrix::Zero(st.dim(), st.dim());
  std::vector<Matrix> freq_logs(static_cast<std::size_t>(ns));
  parallel_for(freq_logs.size(), [&](std::size_t j) {
    double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(ns);
    Matrix xh = Matrix::Zero(dB, dB);
    for (const auto& [l, b] : st.xi_blocks) xh += std::exp(Complex(0, l * th)) * b;
    freq_logs[j] = matrix_log_clamped(xh, eps_clip, tol_clip) -
                   matrix_log_clamped(Matrix::Identity(dB, dB) - xh, eps_clip, tol_clip);
  });
  // block (a, b) depends on the cyclic displacement b - a only
  std::vector<Matrix> disp(static_cast<std::size_t>(ns));
  parallel_for(disp.size(), [&](std::size_t d) {
    Matrix acc = Matrix::Zero(dB, dB);
    for (Eigen::Index j = 0; j < ns; ++j) {
      double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(ns);
      acc += std::exp(Complex(0, -static_cast<double>(d) * th)) *
             freq_logs[static_cast<std::size_t>(j)];
    }
    disp[d] = acc / static_cast<double>(ns);
  });
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < ns; ++b) {
      Eigen::Index d = ((b - a) % ns + ns) % ns;
      out.block(a * dB, b * dB, dB, dB) = disp[static_cast<std::size_t>(d)];
    }
  out.block(st.sample_row(), st.sample_row(), dS, dS) =
      matrix_log_clamped(st.Delta0, eps_clip, tol_clip) -
      matrix_log_clamped(Matrix::Identity(dS, dS) - st.Delta0, eps_clip, tol_clip);
  return out;
}

/// tr[A B] without forming the product.
inline double trace_product_real(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

/// sigma(t) given precomputed T_tot(0) and the initial log ratio; 0 at t = 0.
inline double finite_time_entropy_given(const LatticeState& st, const Matrix& t0,
                                        const Matrix& log_ratio) {
  if (st.t == 0) return 0.0;
  return trace_product_real(t0 - st.T, log_ratio) / static_cast<double>(st.t);
}

/// Finite-time entropy production rate on the truncated lattice:
///   sigma(t) = t^{-1} tr[(T_tot(0) - T_tot(t)) (log T_tot(0) - log(1 - T_tot(0)))],
/// the trace-class reduction of the relative-entropy definition (only the log
/// of the initial symbol is ever needed).
inline double finite_time_entropy(const LatticeState& st, double eps_clip = -1.0,
                                  const Tolerances& tol = {}) {
  if (st.t > st.horizon())
    throw TruncationExceeded("finite_time_entropy: state beyond its causal horizon");
  if (st.t == 0) return 0.0;
  double margin = lattice_spectrum_margin(st);
  if (margin <= 0.0)
    throw SpectrumOutOfRange("finite_time_entropy: initial symbol not bounded away from 0, 1");
  if (eps_clip < 0.0) eps_clip = margin / 10.0;
  Matrix log_ratio = lattice_log_ratio(st, eps_clip, tol.clip);
  return finite_time_entropy_given(st, lattice_initial_symbol(st), log_ratio);
}

}  // namespace fermiflux
