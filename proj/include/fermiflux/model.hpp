#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "fermiflux/numerics.hpp"

namespace fermiflux {

/// Blocks of the one-step interaction unitary Z on H_B (+) H_S:
///   Z = [ C     Z_BS ]
///       [ Z_SB  M    ]
/// C: d_B x d_B, Z_BS: d_B x d_S, Z_SB: d_S x d_B, M: d_S x d_S.
struct BlockUnitary {
  Matrix C, Z_BS, Z_SB, M;

  Eigen::Index dim_B() const { return C.rows(); }
  Eigen::Index dim_S() const { return M.rows(); }
};

/// Largest residual among the six block relations implied by Z^*Z = 1 and
/// ZZ^* = 1.
inline double block_unitary_residual(const BlockUnitary& z) {
  const Eigen::Index dB = z.dim_B(), dS = z.dim_S();
  Matrix iB = Matrix::Identity(dB, dB), iS = Matrix::Identity(dS, dS);
  double r = 0.0;
  r = std::max(r, (z.C.adjoint() * z.C + z.Z_SB.adjoint() * z.Z_SB - iB).norm());
  r = std::max(r, (z.C.adjoint() * z.Z_BS + z.Z_SB.adjoint() * z.M).norm());
  r = std::max(r, (z.Z_BS.adjoint() * z.Z_BS + z.M.adjoint() * z.M - iS).norm());
  r = std::max(r, (z.C * z.C.adjoint() + z.Z_BS * z.Z_BS.adjoint() - iB).norm());
  r = std::max(r, (z.C * z.Z_SB.adjoint() + z.Z_BS * z.M.adjoint()).norm());
  r = std::max(r, (z.M * z.M.adjoint() + z.Z_SB * z.Z_SB.adjoint() - iS).norm());
  return r;
}

/// Validates shapes and the unitarity relations; returns the blocks unchanged.
inline BlockUnitary make_block_unitary(Matrix C, Matrix Z_BS, Matrix Z_SB, Matrix M,
                                       double tol_unit = 1e-10) {
  BlockUnitary z{std::move(C), std::move(Z_BS), std::move(Z_SB), std::move(M)};
  require_finite(z.C, "BlockUnitary C");
  require_finite(z.Z_BS, "BlockUnitary Z_BS");
  require_finite(z.Z_SB, "BlockUnitary Z_SB");
  require_finite(z.M, "BlockUnitary M");
  const Eigen::Index dB = z.C.rows(), dS = z.M.rows();
  if (z.C.cols() != dB || z.M.cols() != dS || z.Z_BS.rows() != dB || z.Z_BS.cols() != dS ||
      z.Z_SB.rows() != dS || z.Z_SB.cols() != dB)
    throw NumericalError("BlockUnitary: inconsistent block shapes");
  double r = block_unitary_residual(z);
  if (r > tol_unit)
    throw NumericalError("BlockUnitary: unitarity residual " + std::to_string(r));
  return z;
}

/// Coupled-walk specification: unitary W on the sample, coupling operator
/// A : H_B -> H_S and coupling strength alpha.
struct CouplingSpec {
  Matrix W;     // d_S x d_S unitary
  Matrix A;     // d_S x d_B
  double alpha = 0.0;

  Eigen::Index dim_S() const { return W.rows(); }
  Eigen::Index dim_B() const { return A.cols(); }
};

inline CouplingSpec make_coupling_spec(Matrix W, Matrix A, double alpha,
                                       double tol_unit = 1e-10) {
  CouplingSpec s{std::move(W), std::move(A), alpha};
  require_finite(s.W, "CouplingSpec W");
  require_finite(s.A, "CouplingSpec A");
  if (s.W.cols() != s.W.rows() || s.A.rows() != s.W.rows())
    throw NumericalError("CouplingSpec: inconsistent shapes");
  double r = (s.W.adjoint() * s.W - Matrix::Identity(s.W.rows(), s.W.rows())).norm();
  if (r > tol_unit) throw NumericalError("CouplingSpec: W not unitary, residual " + std::to_string(r));
  return s;
}

namespace detail {

inline double sinc_stable(double x) {
  // sin(x)/x with the analytic limit at 0
  if (std::abs(x) < 1e-4) {
    double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(x) / x;
}

}  // namespace detail

/// Blocks of Z = diag(1, W) exp(-i alpha [0 A^*; A 0]) via Hermitian
/// functional calculus on A^*A and AA^*:
///   C    = cos(alpha sqrt(A^*A))
///   Z_BS = -i A^* sin(alpha sqrt(AA^*)) / sqrt(AA^*)
///   Z_SB = -i W  sin(alpha sqrt(AA^*)) / sqrt(AA^*) A
///   M    = W cos(alpha sqrt(AA^*))
inline BlockUnitary build_block_unitary(const CouplingSpec& spec, double tol_unit = 1e-10) {
  const double alpha = spec.alpha;
  Matrix AsA = spec.A.adjoint() * spec.A;
  Matrix AAs = spec.A * spec.A.adjoint();
  auto cos_f = [alpha](double s) { return std::cos(alpha * std::sqrt(std::max(s, 0.0))); };
  auto sinc_f = [alpha](double s) {
    double x = std::sqrt(std::max(s, 0.0));
    return alpha * detail::sinc_stable(alpha * x);
  };
  Matrix C = herm_fn(AsA, cos_f);
  Matrix g = herm_fn(AAs, sinc_f);
  Matrix Z_BS = Complex(0, -1) * spec.A.adjoint() * g;
  Matrix Z_SB = Complex(0, -1) * spec.W * g * spec.A;
  Matrix M = spec.W * herm_fn(AAs, cos_f);
  return make_block_unitary(std::move(C), std::move(Z_BS), std::move(Z_SB), std::move(M),
                            tol_unit);
}

/// Spectral radius of the effective sample matrix; values >= 1 - tol_sp mean
/// the mixing assumption fails.
inline double check_sp(const Matrix& m) { return spectral_radius(m); }

/// Controllability rank condition: span_{i<dim} W^i ran(A) = H_S, decided by
/// the numerical rank of [A | WA | ... | W^{d_S-1}A].
inline bool check_kalman(const Matrix& W, const Matrix& A, double tol_rank = 1e-10) {
  const Eigen::Index dS = W.rows(), dB = A.cols();
  Matrix ctrl(dS, dS * dB);
  Matrix cur = A;
  for (Eigen::Index i = 0; i < dS; ++i) {
    ctrl.block(0, i * dB, dS, dB) = cur;
    cur = W * cur;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrl);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return dS == 0;
  double thresh = tol_rank * sv[0];
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > thresh) ++rank;
  return rank == dS;
}

/// Scalar 2pi-periodic density in one of three input forms: a constant, a
/// finite list of Fourier coefficients, or grid samples (interpolated
/// trigonometrically). Stored as Fourier coefficients c_l, l >= 0, with
/// f(theta) = c_0 + 2 Re sum_{l>=1} c_l e^{i l theta}.
class Density {
 public:
  static Density constant(double value) {
    Density d;
    d.coeffs_ = {Complex(value, 0.0)};
    d.constant_ = true;
    return d;
  }

  /// coeffs[l] is c_l for l = 0, 1, ...; c_0 must be real.
  static Density fourier(std::vector<Complex> coeffs) {
    if (coeffs.empty()) throw ConfigError("Density::fourier: empty coefficient list");
    if (std::abs(coeffs[0].imag()) > 1e-14)
      throw ConfigError("Density::fourier: c_0 must be real");
    Density d;
    d.coeffs_ = std::move(coeffs);
    d.constant_ = d.coeffs_.size() == 1;
    return d;
  }

  /// Exact trigonometric interpolation through samples at theta_j = 2 pi j / N.
  static Density grid_samples(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n == 0) throw ConfigError("Density::grid_samples: empty sample list");
    std::vector<Complex> coeffs(n / 2 + 1, Complex(0, 0));
    for (std::size_t l = 0; l < coeffs.size(); ++l) {
      Complex acc(0, 0);
      for (std::size_t j = 0; j < n; ++j) {
        double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n);
        acc += samples[j] * std::exp(Complex(0, -static_cast<double>(l) * th));
      }
      acc /= static_cast<double>(n);
      // the Nyquist coefficient of an even-length real signal is split
      if (n % 2 == 0 && l == n / 2) acc /= 2.0;
      coeffs[l] = acc;
    }
    coeffs[0] = Complex(coeffs[0].real(), 0.0);
    return fourier(std::move(coeffs));
  }

  double operator()(double theta) const {
    double v = coeffs_[0].real();
    for (std::size_t l = 1; l < coeffs_.size(); ++l)
      v += 2.0 * (coeffs_[l] * std::exp(Complex(0, static_cast<double>(l) * theta))).real();
    return v;
  }

  /// Fourier coefficient c_l for any l (c_{-l} = conj(c_l)).
  Complex coeff(int l) const {
    std::size_t a = static_cast<std::size_t>(std::abs(l));
    if (a >= coeffs_.size()) return Complex(0, 0);
    return l >= 0 ? coeffs_[a] : std::conj(coeffs_[a]);
  }

  int band() const {
    for (std::size_t l = coeffs_.size(); l-- > 1;)
      if (std::abs(coeffs_[l]) > 0.0) return static_cast<int>(l);
    return 0;
  }

  bool is_constant() const { return constant_ || band() == 0; }

 private:
  std::vector<Complex> coeffs_;
  bool constant_ = false;
};

/// Twisted reservoir symbol: finite Fourier blocks {Xi_l} on H_B together
/// with the orthogonal reservoir projections {Pi_k}. In the rank-one case a
/// scalar density f_k per reservoir is carried along.
class ReservoirSymbol {
 public:
  /// Xi_l = sum_k c_{k,l} Pi_k built from per-reservoir densities.
  ReservoirSymbol(std::vector<Matrix> projectors, std::vector<Density> densities,
                  double tol = 1e-12)
      : projectors_(std::move(projectors)), densities_(std::move(densities)) {
    if (projectors_.size() != densities_.size())
      throw ConfigError("ReservoirSymbol: one density per projector required");
    validate_projectors(tol);
    int band = 0;
    for (const Density& f : densities_) band = std::max(band, f.band());
    for (int l = 0; l <= band; ++l) {
      Matrix xl = Matrix::Zero(dim(), dim());
      for (std::size_t k = 0; k < projectors_.size(); ++k)
        xl += densities_[k].coeff(l) * projectors_[k];
      if (l == 0 || xl.norm() > 0.0) blocks_[l] = xl;
    }
    complete_negative_blocks();
    validate_blocks(tol);
  }

  /// General blocks, keyed by l; keys l >= 0 suffice (Xi_{-l} = Xi_l^*). When
  /// both signs are given they must be mutually adjoint.
  ReservoirSymbol(std::vector<Matrix> projectors, std::map<int, Matrix> blocks,
                  double tol = 1e-12)
      : projectors_(std::move(projectors)), blocks_(std::move(blocks)) {
    validate_projectors(tol);
    if (!blocks_.count(0)) blocks_[0] = Matrix::Zero(dim(), dim());
    for (const auto& [l, b] : blocks_) {
      if (b.rows() != dim() || b.cols() != dim())
        throw ConfigError("ReservoirSymbol: block dimension mismatch");
      if (blocks_.count(-l) &&
          (blocks_.at(-l) - b.adjoint()).norm() > tol * std::max(b.norm(), 1.0))
        throw ConfigError("ReservoirSymbol: blocks violate Xi_{-l} = Xi_l^*");
    }
    complete_negative_blocks();
    validate_blocks(tol);
  }

  Eigen::Index dim() const { return projectors_.empty() ? 0 : projectors_[0].rows(); }
  int n_reservoirs() const { return static_cast<int>(projectors_.size()); }
  const std::vector<Matrix>& projectors() const { return projectors_; }
  const std::map<int, Matrix>& blocks() const { return blocks_; }

  int band() const {
    int b = 0;
    for (const auto& [l, m] : blocks_)
      if (m.norm() > 0.0) b = std::max(b, std::abs(l));
    return b;
  }

  Matrix block(int l) const {
    auto it = blocks_.find(l);
    if (it != blocks_.end()) return it->second;
    return Matrix::Zero(dim(), dim());
  }

  /// Xi-hat(theta) = sum_l e^{i l theta} Xi_l.
  Matrix xi_hat(double theta) const {
    Matrix acc = Matrix::Zero(dim(), dim());
    for (const auto& [l, b] : blocks_)
      acc += std::exp(Complex(0, l * theta)) * b;
    return acc;
  }

  bool rank_one() const {
    for (const Matrix& p : projectors_)
      if (std::lround(p.trace().real()) != 1) return false;
    return true;
  }

  bool has_densities() const { return !densities_.empty(); }

  double density(int k, double theta) const {
    if (has_densities()) return densities_[static_cast<std::size_t>(k)](theta);
    // f_k(theta) = tr[Pi_k Xi-hat(theta)] / rank, scalar on the block by (Bl)
    const Matrix& p = projectors_[static_cast<std::size_t>(k)];
    double rank = p.trace().real();
    return ((p * xi_hat(theta)).trace() / rank).real();
  }

  const std::vector<Density>& densities() const { return densities_; }

  /// Least margin of the spectrum of Xi-hat(theta_j) from {0, 1} over the
  /// grid; positive iff the symbol is bounded away from 0 and 1 there.
  double spectrum_margin(const PeriodicGrid& grid) const {
    double margin = 0.5;
    for (int j = 0; j < grid.N; ++j) {
      HermitianEig e = herm_eig(xi_hat(grid.node(j)), 1e-9);
      margin = std::min(margin, e.eigenvalues.minCoeff());
      margin = std::min(margin, 1.0 - e.eigenvalues.maxCoeff());
    }
    return margin;
  }

  void require_bounded_spectrum(const PeriodicGrid& grid, double eps_sym) const {
    double m = spectrum_margin(grid);
    if (m < eps_sym)
      throw SpectrumOutOfRange("reservoir symbol spectrum margin " + std::to_string(m) +
                               " below " + std::to_string(eps_sym));
  }

 private:
  void validate_projectors(double tol) {
    if (projectors_.empty()) throw ConfigError("ReservoirSymbol: no projectors");
    const Eigen::Index d = projectors_[0].rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const Matrix& p : projectors_) {
      if (p.rows() != d || p.cols() != d)
        throw ConfigError("ReservoirSymbol: projector dimension mismatch");
      if ((p - p.adjoint()).norm() > tol || (p * p - p).norm() > tol)
        throw ConfigError("ReservoirSymbol: Pi_k is not an orthogonal projection");
      sum += p;
    }
    if ((sum - Matrix::Identity(d, d)).norm() > tol)
      throw ConfigError("ReservoirSymbol: projectors do not sum to the identity");
    for (std::size_t a = 0; a < projectors_.size(); ++a)
      for (std::size_t b = a + 1; b < projectors_.size(); ++b)
        if ((projectors_[a] * projectors_[b]).norm() > tol)
          throw ConfigError("ReservoirSymbol: projectors are not mutually orthogonal");
  }

  void complete_negative_blocks() {
    std::map<int, Matrix> full;
    for (const auto& [l, b] : blocks_) {
      full[l] = b;
      if (!blocks_.count(-l)) full[-l] = b.adjoint();
    }
    blocks_ = std::move(full);
  }

  void validate_blocks(double tol) {
    for (const auto& [l, b] : blocks_) {
      require_finite(b, "ReservoirSymbol block");
      for (const Matrix& p : projectors_)
        if ((b * p - p * b).norm() > tol * std::max(b.norm(), 1.0))
          throw ConfigError("ReservoirSymbol: [Xi_l, Pi_k] != 0 (block assumption fails)");
    }
  }

  std::vector<Matrix> projectors_;
  std::map<int, Matrix> blocks_;
  std::vector<Density> densities_;
};

inline Matrix eval_xi_hat(const ReservoirSymbol& res, double theta) {
  return res.xi_hat(theta);
}

/// Initial sample symbol: Hermitian with spectrum in [0, 1].
struct SampleInitial {
  Matrix Delta;
};

inline SampleInitial make_sample_initial(Matrix Delta, double tol_herm = 1e-10) {
  require_finite(Delta, "SampleInitial");
  HermitianEig e = herm_eig(Delta, tol_herm);
  if (e.eigenvalues.minCoeff() < -tol_herm || e.eigenvalues.maxCoeff() > 1.0 + tol_herm)
    throw SpectrumOutOfRange("SampleInitial: spectrum outside [0, 1]");
  return SampleInitial{std::move(Delta)};
}

}  // namespace fermiflux
