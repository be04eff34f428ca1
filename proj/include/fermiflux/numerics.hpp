#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "fermiflux/errors.hpp"

namespace fermiflux {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Numerical tolerances used across the library. All defaults are meant for
/// double precision with headroom.
struct Tolerances {
  double eig = 1e-10;      // eigendecomposition reconstruction
  double herm = 1e-10;     // Hermiticity preconditions
  double sp = 1e-9;        // spectral-radius margin for mixing
  double stein = 1e-11;    // Stein equation residual
  double clip = 1e-9;      // slack on spectrum-interval preconditions
  double cluster = 1e-8;   // eigenvalue clustering threshold
  double unit = 1e-10;     // unitarity residuals
  double rank = 1e-10;     // numerical rank threshold (relative to sigma_max)
};

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
}

inline double herm_defect(const Matrix& h) { return (h - h.adjoint()).norm(); }

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
struct HermitianEig {
  RealVector eigenvalues;
  Matrix eigenvectors;  // unitary, columns
};

inline HermitianEig herm_eig(const Matrix& h, double tol_herm = 1e-10) {
  require_finite(h, "herm_eig");
  double scale = std::max(h.norm(), 1.0);
  if (herm_defect(h) > tol_herm * scale)
    throw NotHermitian("herm_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es((h + h.adjoint()) / 2.0);
  if (es.info() != Eigen::Success) throw NumericalError("herm_eig: solver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// f(H) for Hermitian H by eigenvalue functional calculus.
inline Matrix herm_fn(const Matrix& h, const std::function<double(double)>& f,
                      double tol_herm = 1e-10) {
  HermitianEig e = herm_eig(h, tol_herm);
  RealVector fe(e.eigenvalues.size());
  for (Eigen::Index i = 0; i < fe.size(); ++i) fe[i] = f(e.eigenvalues[i]);
  return e.eigenvectors * fe.asDiagonal() * e.eigenvectors.adjoint();
}

/// log(H) for a Hermitian state symbol with spectrum expected inside
/// [eps_clip, 1 - eps_clip]. Eigenvalues are clamped into that interval
/// before taking logs; violations beyond tol_clip raise SpectrumOutOfRange.
inline Matrix matrix_log_clamped(const Matrix& h, double eps_clip, double tol_clip = 1e-9,
                                 double tol_herm = 1e-10) {
  HermitianEig e = herm_eig(h, tol_herm);
  RealVector le(e.eigenvalues.size());
  for (Eigen::Index i = 0; i < le.size(); ++i) {
    double v = e.eigenvalues[i];
    if (v < eps_clip - tol_clip || v > 1.0 - eps_clip + tol_clip)
      throw SpectrumOutOfRange("matrix_log_clamped: eigenvalue " + std::to_string(v) +
                               " outside [" + std::to_string(eps_clip) + ", " +
                               std::to_string(1.0 - eps_clip) + "]");
    le[i] = std::log(std::min(std::max(v, eps_clip), 1.0 - eps_clip));
  }
  return e.eigenvectors * le.asDiagonal() * e.eigenvectors.adjoint();
}

inline double spectral_radius(const Matrix& m) {
  require_finite(m, "spectral_radius");
  if (m.rows() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: solver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Eigendecomposition of a general (non-Hermitian) matrix with biorthogonal
/// left/right eigenvector matrices: left.adjoint() * right == 1.
struct GeneralEig {
  Vector eigenvalues;
  Matrix right;              // right eigenvectors, columns
  Matrix left;               // left eigenvectors, columns; L^* R = 1
  std::vector<bool> simple;  // per eigenvalue: isolated at tol_cluster
};

inline GeneralEig general_eig(const Matrix& m, double tol_cluster = 1e-8) {
  require_finite(m, "general_eig");
  Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) throw NumericalError("general_eig: solver failed");
  GeneralEig out;
  out.eigenvalues = es.eigenvalues();
  out.right = es.eigenvectors();
  out.left = out.right.inverse().adjoint();
  Eigen::Index n = out.eigenvalues.size();
  out.simple.assign(static_cast<std::size_t>(n), true);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(out.eigenvalues[i] - out.eigenvalues[j]) <= tol_cluster) {
        out.simple[static_cast<std::size_t>(i)] = false;
        out.simple[static_cast<std::size_t>(j)] = false;
      }
  return out;
}

namespace detail {

// V <- V + M^{2^k} V (M^{2^k})^*, squaring M each round. Converges in
// O(log) rounds since rho(M) < 1.
inline Matrix stein_doubling(const Matrix& m, const Matrix& rhs, double tol_stein) {
  Matrix v = rhs;
  Matrix k = m;
  for (int round = 0; round < 128; ++round) {
    Matrix incr = k * v * k.adjoint();
    v += incr;
    if (incr.norm() <= tol_stein * std::max(v.norm(), 1.0)) return v;
    k = k * k;
  }
  throw NumericalError("solve_stein: doubling iteration did not converge");
}

}  // namespace detail

/// Solves the Stein equation V - M V M^* = RHS. Requires rho(M) < 1 - tol_sp.
/// Direct vectorized solve of (1 - conj(M) (x) M) up to d^2 <= direct_threshold,
/// doubling iteration beyond that. The result is Hermitian when RHS is.
inline Matrix solve_stein(const Matrix& m, const Matrix& rhs, double tol_sp = 1e-9,
                          double tol_stein = 1e-11,
                          Eigen::Index direct_threshold = 4096) {
  require_finite(m, "solve_stein");
  require_finite(rhs, "solve_stein rhs");
  const Eigen::Index d = m.rows();
  if (m.cols() != d || rhs.rows() != d || rhs.cols() != d)
    throw NumericalError("solve_stein: dimension mismatch");
  double rho = spectral_radius(m);
  if (rho >= 1.0 - tol_sp)
    throw SpectralRadiusTooLarge("solve_stein: spectral radius " + std::to_string(rho) +
                                 " >= 1 - tol_sp");
  Matrix v;
  if (d * d <= direct_threshold) {
    // vec(M V M^*) = (conj(M) (x) M) vec(V), column-major vec
    Matrix kron(d * d, d * d);
    for (Eigen::Index bc = 0; bc < d; ++bc)
      for (Eigen::Index br = 0; br < d; ++br)
        kron.block(br * d, bc * d, d, d) = std::conj(m(br, bc)) * m;
    Matrix sys = Matrix::Identity(d * d, d * d) - kron;
    Vector vec_rhs = Eigen::Map<const Vector>(rhs.data(), d * d);
    Vector vec_v = sys.partialPivLu().solve(vec_rhs);
    v = Eigen::Map<const Matrix>(vec_v.data(), d, d);
  } else {
    v = detail::stein_doubling(m, rhs, tol_stein);
  }
  if (herm_defect(rhs) <= 1e-12 * std::max(rhs.norm(), 1.0)) v = (v + v.adjoint()) / 2.0;
  double resid = (v - m * v * m.adjoint() - rhs).norm();
  if (resid > 1e3 * tol_stein * std::max(rhs.norm(), 1.0))
    throw NumericalError("solve_stein: residual " + std::to_string(resid) +
                         " exceeds tolerance");
  return v;
}

/// Uniform grid on [0, 2pi): nodes theta_j = 2 pi j / N, each of weight
/// 2 pi / N. Integrates trigonometric polynomials of degree < N exactly
/// against d theta / (2 pi).
struct PeriodicGrid {
  int N = 512;
  double node(int j) const { return 2.0 * M_PI * static_cast<double>(j) / N; }
};

/// (1 / N) sum_j g(theta_j), an approximation of the 2pi-periodic integral
/// of g against d theta / (2 pi); spectrally accurate for smooth g.
inline Matrix periodic_quadrature(std::span<const Matrix> samples) {
  if (samples.empty()) throw NumericalError("periodic_quadrature: no samples");
  Matrix acc = Matrix::Zero(samples[0].rows(), samples[0].cols());
  for (const Matrix& s : samples) acc += s;
  return acc / static_cast<double>(samples.size());
}

inline double periodic_quadrature(std::span<const double> samples) {
  if (samples.empty()) throw NumericalError("periodic_quadrature: no samples");
  double acc = 0.0;
  for (double s : samples) acc += s;
  return acc / static_cast<double>(samples.size());
}

}  // namespace fermiflux
