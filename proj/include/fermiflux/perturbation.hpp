#pragma once

#include <numeric>
#include <vector>

#include "fermiflux/model.hpp"

namespace fermiflux {

/// Small-coupling spectral data of M(alpha) = W cos(alpha sqrt(AA^*)):
/// eigenvalue groups of W, the limiting sub-projectors Q_j(0) obtained by
/// diagonalizing the compressed coupling within each degenerate group, and the
/// first-order weights c_j = tr[Q_j(0) AA^*].
struct SplittingData {
  std::vector<Complex> group_eigenvalue;  // lambda_i, unit modulus
  std::vector<Matrix> Q;                  // Q_j(0), orthogonal projections
  std::vector<double> c;                  // c_j > 0 under the Kalman condition
  std::vector<int> group_of;              // j -> group index i
  bool simple = false;                    // every group is a single rank-one j
  std::vector<Vector> chi;                // unit eigenvectors per j (simple case)

  int n_groups() const { return static_cast<int>(group_eigenvalue.size()); }
  int n_channels() const { return static_cast<int>(Q.size()); }

  /// Group projector Q_i = sum_{j in I_i} Q_j(0).
  Matrix group_projector(int i) const {
    Matrix acc = Matrix::Zero(Q[0].rows(), Q[0].cols());
    for (std::size_t j = 0; j < Q.size(); ++j)
      if (group_of[j] == i) acc += Q[j];
    return acc;
  }
};

/// True when AA^* is a nonzero multiple of an orthogonal projection, the
/// sufficient condition for the semisimple-splitting assumption.
inline bool half_sim_projector_check(const Matrix& a, double tol = 1e-10) {
  Matrix aas = a * a.adjoint();
  HermitianEig e = herm_eig(aas, 1e-9);
  double kappa = e.eigenvalues.maxCoeff();
  if (kappa <= tol) return false;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) {
    double v = e.eigenvalues[i];
    if (std::abs(v) > tol * kappa && std::abs(v - kappa) > tol * kappa) return false;
  }
  return true;
}

inline SplittingData splitting(const CouplingSpec& spec, double tol_cluster = 1e-8,
                               double tol_rank = 1e-10) {
  if (!check_kalman(spec.W, spec.A, tol_rank))
    throw KalmanFailed("splitting: Kalman condition fails for (W, A)");
  const Eigen::Index d = spec.dim_S();
  Matrix aas = spec.A * spec.A.adjoint();
  // Schur of the unitary W: T is diagonal up to rounding, columns of U span
  // the clustered eigenspaces.
  Eigen::ComplexSchur<Matrix> schur(spec.W, /*computeU=*/true);
  if (schur.info() != Eigen::Success) throw NumericalError("splitting: Schur failed");
  Vector evals = schur.matrixT().diagonal();
  Matrix u = schur.matrixU();
  // greedy transitive clustering of the eigenvalues
  std::vector<int> cluster(static_cast<std::size_t>(d), -1);
  int n_groups = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (cluster[static_cast<std::size_t>(i)] >= 0) continue;
    cluster[static_cast<std::size_t>(i)] = n_groups;
    // grow the cluster transitively
    bool grew = true;
    while (grew) {
      grew = false;
      for (Eigen::Index a2 = 0; a2 < d; ++a2) {
        if (cluster[static_cast<std::size_t>(a2)] != n_groups) continue;
        for (Eigen::Index b = 0; b < d; ++b)
          if (cluster[static_cast<std::size_t>(b)] < 0 &&
              std::abs(evals[a2] - evals[b]) <= tol_cluster) {
            cluster[static_cast<std::size_t>(b)] = n_groups;
            grew = true;
          }
      }
    }
    ++n_groups;
  }
  SplittingData out;
  out.simple = true;
  for (int g = 0; g < n_groups; ++g) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < d; ++i)
      if (cluster[static_cast<std::size_t>(i)] == g) members.push_back(i);
    Matrix vg(d, static_cast<Eigen::Index>(members.size()));
    Complex lam(0, 0);
    for (std::size_t c = 0; c < members.size(); ++c) {
      vg.col(static_cast<Eigen::Index>(c)) = u.col(members[c]);
      lam += evals[members[c]];
    }
    lam /= static_cast<double>(members.size());
    lam /= std::abs(lam);  // group eigenvalue on the unit circle
    out.group_eigenvalue.push_back(lam);
    const int gi = static_cast<int>(out.group_eigenvalue.size()) - 1;
    const Eigen::Index r = vg.cols();
    if (r == 1) {
      out.Q.push_back(vg * vg.adjoint());
      out.c.push_back((vg.adjoint() * aas * vg)(0, 0).real());
      out.group_of.push_back(gi);
      out.chi.push_back(vg.col(0));
      continue;
    }
    out.simple = false;
    Matrix compressed = vg.adjoint() * aas * vg;
    HermitianEig ce = herm_eig(compressed, 1e-9);
    for (Eigen::Index a2 = 0; a2 + 1 < r; ++a2)
      if (ce.eigenvalues[a2 + 1] - ce.eigenvalues[a2] <= tol_cluster)
        throw UnresolvedSplitting(
            "splitting: degenerate compressed coupling within a lambda-group; "
            "sub-projectors are not determined at first order");
    for (Eigen::Index a2 = 0; a2 < r; ++a2) {
      Vector w = vg * ce.eigenvectors.col(a2);
      out.Q.push_back(w * w.adjoint());
      out.c.push_back(ce.eigenvalues[a2]);
      out.group_of.push_back(gi);
      out.chi.push_back(w);
    }
  }
  return out;
}

/// Leading small-coupling steady sample symbol
///   sum_i sum_{j,j' in I_i} 2/(c_j + c_j') Q_j(0) A Xi-hat(-i log lambda_i) A^* Q_j'(0),
/// the alpha-independent term of Delta_inf(alpha).
inline Matrix steady_sample_leading(const CouplingSpec& spec, const ReservoirSymbol& res,
                                    const SplittingData& split) {
  const Eigen::Index d = spec.dim_S();
  Matrix acc = Matrix::Zero(d, d);
  for (int i = 0; i < split.n_groups(); ++i) {
    double theta = std::arg(split.group_eigenvalue[static_cast<std::size_t>(i)]);
    if (theta < 0) theta += 2.0 * M_PI;
    Matrix mid = spec.A * res.xi_hat(theta) * spec.A.adjoint();
    for (std::size_t j = 0; j < split.Q.size(); ++j) {
      if (split.group_of[j] != i) continue;
      for (std::size_t jp = 0; jp < split.Q.size(); ++jp) {
        if (split.group_of[jp] != i) continue;
        double w = 2.0 / (split.c[j] + split.c[jp]);
        acc += w * split.Q[j] * mid * split.Q[jp];
      }
    }
  }
  return (acc + acc.adjoint()) / 2.0;
}

/// Leading-order currents J_k^(2) with J_k = alpha^2 J_k^(2) + O(alpha^4),
/// from the resolvent-free matrix
///   D = sum_h [ -A^* Q_h A Xi-hat(u_h)
///               + sum_{j,j' in I_h} 2/(c_j+c_j') A^* Q_j A Xi-hat(u_h) A^* Q_j' A ].
inline Eigen::VectorXd currents_leading(const CouplingSpec& spec, const ReservoirSymbol& res,
                                        const SplittingData& split) {
  const Eigen::Index dB = spec.dim_B();
  Matrix dmat = Matrix::Zero(dB, dB);
  for (int h = 0; h < split.n_groups(); ++h) {
    double theta = std::arg(split.group_eigenvalue[static_cast<std::size_t>(h)]);
    if (theta < 0) theta += 2.0 * M_PI;
    Matrix xh = res.xi_hat(theta);
    dmat -= spec.A.adjoint() * split.group_projector(h) * spec.A * xh;
    for (std::size_t j = 0; j < split.Q.size(); ++j) {
      if (split.group_of[j] != h) continue;
      for (std::size_t jp = 0; jp < split.Q.size(); ++jp) {
        if (split.group_of[jp] != h) continue;
        double w = 2.0 / (split.c[j] + split.c[jp]);
        dmat += w * (spec.A.adjoint() * split.Q[j] * spec.A) * xh *
                (spec.A.adjoint() * split.Q[jp] * spec.A);
      }
    }
  }
  const int nb = res.n_reservoirs();
  Eigen::VectorXd j2(nb);
  for (int k = 0; k < nb; ++k)
    j2[k] = (res.projectors()[static_cast<std::size_t>(k)] * dmat).trace().real();
  return j2;
}

/// One star circuit per eigenvalue channel: voltage sources f_k(-i log lambda_i),
/// conductances |<phi_k, chi_i>|^2, and the branch currents both from the
/// closed form and from solving the Kirchhoff linear system.
struct StarCircuit {
  Complex lambda;
  double theta = 0.0;                  // -i log lambda, principal branch in [0, 2pi)
  Eigen::VectorXd sources;             // f_k(theta)
  Eigen::VectorXd conductances;        // g_k = |<phi_k, chi>|^2
  Eigen::VectorXd branch_closed_form;  // J^(2)_{k,i}
  Eigen::VectorXd branch_kirchhoff;    // same, from the linear solve
};

/// Branch currents of a star of voltage sources f_k behind conductances g_k
/// joined at one node: the closed form g_k (sum g f - g_k f_k ... ) reduces to
///   J_k = sum_{k'} g_k g_{k'} (f_{k'} - f_k) / sum_{k''} g_{k''}.
inline Eigen::VectorXd star_closed_form(const Eigen::VectorXd& sources,
                                        const Eigen::VectorXd& conductances) {
  const Eigen::Index n = sources.size();
  Eigen::VectorXd j = Eigen::VectorXd::Zero(n);
  double total = conductances.sum();
  if (total <= 0.0) return j;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index kp = 0; kp < n; ++kp)
      j[k] += conductances[k] * conductances[kp] * (sources[kp] - sources[k]) / total;
  return j;
}

/// Same currents by solving the Kirchhoff system in the unknowns
/// (J_1..J_n, v): J_k - g_k v = -g_k f_k and sum_k J_k = 0.
inline Eigen::VectorXd star_kirchhoff_solve(const Eigen::VectorXd& sources,
                                            const Eigen::VectorXd& conductances) {
  const Eigen::Index n = sources.size();
  if (conductances.sum() <= 0.0) return Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    sys(k, k) = 1.0;
    sys(k, n) = -conductances[k];
    rhs[k] = -conductances[k] * sources[k];
    sys(n, k) = 1.0;
  }
  Eigen::VectorXd sol = sys.partialPivLu().solve(rhs);
  return sol.head(n);
}

/// Builds the per-channel star circuits. Requires all eigenvalues of W simple
/// and all reservoir projectors of rank one, with A of the isometric coupling
/// form (A^*A = 1 so the columns phi_k = A psi_k are orthonormal).
inline std::vector<StarCircuit> star_circuit(const CouplingSpec& spec,
                                             const ReservoirSymbol& res,
                                             const SplittingData& split,
                                             double tol_unit = 1e-10) {
  if (!split.simple) throw NotSimple("star_circuit: W has non-simple eigenvalues");
  if (!res.rank_one()) throw NotRankOne("star_circuit: reservoir projectors must be rank one");
  Matrix asa = spec.A.adjoint() * spec.A;
  if ((asa - Matrix::Identity(asa.rows(), asa.cols())).norm() > tol_unit)
    throw NumericalError("star_circuit: coupling is not an isometry (A^*A != 1)");
  const int nb = res.n_reservoirs();
  // unit vector spanning each rank-one projector
  std::vector<Vector> psi(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) {
    HermitianEig e = herm_eig(res.projectors()[static_cast<std::size_t>(k)], 1e-9);
    psi[static_cast<std::size_t>(k)] = e.eigenvectors.col(e.eigenvectors.cols() - 1);
  }
  std::vector<StarCircuit> circuits;
  for (std::size_t j = 0; j < split.chi.size(); ++j) {
    StarCircuit c;
    c.lambda = split.group_eigenvalue[static_cast<std::size_t>(split.group_of[j])];
    c.theta = std::arg(c.lambda);
    if (c.theta < 0) c.theta += 2.0 * M_PI;
    c.sources.resize(nb);
    c.conductances.resize(nb);
    for (int k = 0; k < nb; ++k) {
      c.sources[k] = res.density(k, c.theta);
      Complex overlap = Vector(spec.A * psi[static_cast<std::size_t>(k)]).dot(split.chi[j]);
      c.conductances[k] = std::norm(overlap);
    }
    c.branch_closed_form = star_closed_form(c.sources, c.conductances);
    c.branch_kirchhoff = star_kirchhoff_solve(c.sources, c.conductances);
    circuits.push_back(std::move(c));
  }
  return circuits;
}

/// Leading coefficient of sigma_plus / alpha^2 for constant rank-one densities:
///   1/2 sum_{k != k'} (mu_k - mu_k') (f_{k'} - f_k) C^(2)_{k,k'},
/// with C^(2)_{k,k'} = sum_i g_{k,i} g_{k',i} / sum_{k''} g_{k'',i}.
inline double entropy_leading(const CouplingSpec& spec, const ReservoirSymbol& res,
                              const SplittingData& split) {
  if (!split.simple) throw NotSimple("entropy_leading: W has non-simple eigenvalues");
  if (!res.rank_one()) throw NotRankOne("entropy_leading: projectors must be rank one");
  const int nb = res.n_reservoirs();
  std::vector<double> f(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) {
    if (res.has_densities() && !res.densities()[static_cast<std::size_t>(k)].is_constant())
      throw NumericalError("entropy_leading: densities must be constant in theta");
    f[static_cast<std::size_t>(k)] = res.density(k, 0.0);
    if (f[static_cast<std::size_t>(k)] <= 0.0 || f[static_cast<std::size_t>(k)] >= 1.0)
      throw SpectrumOutOfRange("entropy_leading: densities must lie in (0, 1)");
  }
  std::vector<StarCircuit> circuits = star_circuit(spec, res, split);
  Eigen::MatrixXd c2 = Eigen::MatrixXd::Zero(nb, nb);
  for (const StarCircuit& c : circuits) {
    double total = c.conductances.sum();
    if (total <= 0.0) continue;
    for (int k = 0; k < nb; ++k)
      for (int kp = 0; kp < nb; ++kp)
        c2(k, kp) += c.conductances[k] * c.conductances[kp] / total;
  }
  double sigma2 = 0.0;
  for (int k = 0; k < nb; ++k) {
    double mk = std::log((1.0 - f[static_cast<std::size_t>(k)]) / f[static_cast<std::size_t>(k)]);
    for (int kp = 0; kp < nb; ++kp) {
      if (kp == k) continue;
      double mkp =
          std::log((1.0 - f[static_cast<std::size_t>(kp)]) / f[static_cast<std::size_t>(kp)]);
      sigma2 += 0.5 * (mk - mkp) * (f[static_cast<std::size_t>(kp)] - f[static_cast<std::size_t>(k)]) *
                c2(k, kp);
    }
  }
  return sigma2;
}

}  // namespace fermiflux
