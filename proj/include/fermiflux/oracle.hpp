#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>

#include "fermiflux/model.hpp"

namespace fermiflux {

/// Truncated-lattice one-particle symbol T_tot(t) on
/// l^2({-L..L}) (x) H_B (+) H_S, evolved by exact conjugation with the
/// one-step walk unitary. The shift wraps periodically at the truncation
/// boundary, so the step stays exactly unitary; observations are valid while
/// t is below the causal horizon.
struct LatticeState {
  int L = 0;
  int t = 0;
  Eigen::Index dB = 0, dS = 0;
  Matrix T;                         // dimension (2L+1) dB + dS
  std::map<int, Matrix> xi_blocks;  // initial environment band
  Matrix Delta0;

  Eigen::Index sites() const { return 2 * static_cast<Eigen::Index>(L) + 1; }
  Eigen::Index dim() const { return sites() * dB + dS; }
  Eigen::Index site_row(int n) const { return (static_cast<Eigen::Index>(n) + L) * dB; }
  Eigen::Index sample_row() const { return sites() * dB; }

  int band() const {
    int b = 0;
    for (const auto& [l, m] : xi_blocks)
      if (m.norm() > 0.0) b = std::max(b, std::abs(l));
    return b;
  }

  /// Largest time with uncontaminated observations near the origin. With a
  /// band-free initial state only the wrapped outgoing wave matters (returns
  /// at t ~ 2L); with a band, seam correlations arrive already at L - band.
  int horizon() const { return band() == 0 ? 2 * L : L - band(); }

  Matrix env_block(int n, int m) const {
    return T.block(site_row(n), site_row(m), dB, dB);
  }

  Matrix sample_corner() const { return T.block(sample_row(), sample_row(), dS, dS); }
};

/// Dense one-step unitary on the truncation: shift (wrapping periodically)
/// after the Z interaction at site 0. Intended for validation at small L;
/// evolve() uses the equivalent structured update.
inline Matrix build_lattice_unitary(const BlockUnitary& z, int L) {
  if (L < 1) throw NumericalError("build_lattice_unitary: L must be >= 1");
  const Eigen::Index dB = z.dim_B(), dS = z.dim_S();
  const Eigen::Index ns = 2 * static_cast<Eigen::Index>(L) + 1;
  const Eigen::Index dim = ns * dB + dS;
  Matrix u = Matrix::Zero(dim, dim);
  auto row_of = [&](Eigen::Index a) { return ((a - 1) % ns + ns) % ns; };  // shift site a -> a-1
  for (Eigen::Index a = 0; a < ns; ++a) {
    if (a == L) continue;  // site 0 handled below
    u.block(row_of(a) * dB, a * dB, dB, dB) = Matrix::Identity(dB, dB);
  }
  u.block(row_of(L) * dB, L * dB, dB, dB) = z.C;
  u.block(row_of(L) * dB, ns * dB, dB, dS) = z.Z_BS;
  u.block(ns * dB, L * dB, dS, dB) = z.Z_SB;
  u.block(ns * dB, ns * dB, dS, dS) = z.M;
  return u;
}

/// Initial symbol: environment blocks Xi_{m-n} placed at cyclic displacement
/// m - n (making the band exactly invariant under the wrapped free shift),
/// sample corner Delta0.
inline LatticeState init_lattice_state(const ReservoirSymbol& res, const SampleInitial& d0,
                                       int L) {
  LatticeState st;
  st.L = L;
  st.dB = res.dim();
  st.dS = d0.Delta.rows();
  st.xi_blocks = res.blocks();
  st.Delta0 = d0.Delta;
  if (res.band() >= L) throw TruncationExceeded("init_lattice_state: band >= L");
  const Eigen::Index ns = st.sites();
  st.T = Matrix::Zero(st.dim(), st.dim());
  for (Eigen::Index a = 0; a < ns; ++a)
    for (const auto& [l, xl] : st.xi_blocks) {
      Eigen::Index b = ((a + l) % ns + ns) % ns;
      st.T.block(a * st.dB, b * st.dB, st.dB, st.dB) = xl;
    }
  st.T.block(st.sample_row(), st.sample_row(), st.dS, st.dS) = d0.Delta;
  return st;
}

/// T <- U^steps T U^{-steps} via the structured step: mix the (site 0, sample)
/// rows/columns with the Z blocks, then shift block rows and columns
/// cyclically. O(dim^2) per step.
inline void evolve(LatticeState& st, const BlockUnitary& z, int steps) {
  if (steps < 0) throw NumericalError("evolve: negative step count");
  if (z.dim_B() != st.dB || z.dim_S() != st.dS)
    throw NumericalError("evolve: block dimensions do not match the state");
  if (st.t + steps > st.horizon())
    throw TruncationExceeded("evolve: t = " + std::to_string(st.t + steps) +
                             " exceeds causal horizon " + std::to_string(st.horizon()));
  const Eigen::Index ns = st.sites(), dB = st.dB, dS = st.dS, dim = st.dim();
  const Eigen::Index i0 = st.site_row(0), iS = st.sample_row();
  Matrix rowbuf(dB + dS, dim), colbuf(dim, dB + dS);
  Matrix shifted(dim, dim);
  for (int s = 0; s < steps; ++s) {
    rowbuf.topRows(dB) = st.T.middleRows(i0, dB);
    rowbuf.bottomRows(dS) = st.T.middleRows(iS, dS);
    st.T.middleRows(i0, dB) = z.C * rowbuf.topRows(dB) + z.Z_BS * rowbuf.bottomRows(dS);
    st.T.middleRows(iS, dS) = z.Z_SB * rowbuf.topRows(dB) + z.M * rowbuf.bottomRows(dS);
    colbuf.leftCols(dB) = st.T.middleCols(i0, dB);
    colbuf.rightCols(dS) = st.T.middleCols(iS, dS);
    st.T.middleCols(i0, dB) =
        colbuf.leftCols(dB) * z.C.adjoint() + colbuf.rightCols(dS) * z.Z_BS.adjoint();
    st.T.middleCols(iS, dS) =
        colbuf.leftCols(dB) * z.Z_SB.adjoint() + colbuf.rightCols(dS) * z.M.adjoint();
    // block row a takes the content of block row a+1 (cyclic), same for columns
    shifted.topRows((ns - 1) * dB) = st.T.middleRows(dB, (ns - 1) * dB);
    shifted.middleRows((ns - 1) * dB, dB) = st.T.topRows(dB);
    shifted.bottomRows(dS) = st.T.bottomRows(dS);
    st.T.leftCols((ns - 1) * dB) = shifted.middleCols(dB, (ns - 1) * dB);
    st.T.middleCols((ns - 1) * dB, dB) = shifted.leftCols(dB);
    st.T.rightCols(dS) = shifted.rightCols(dS);
    ++st.t;
  }
}

/// Binary dump of T_tot: 8-byte magic "FFLXTTOT", five little-endian int64
/// fields (L, dB, dS, t, dim), then dim*dim complex doubles (re, im pairs)
/// in row-major order.
inline void dump_ttot(const LatticeState& st, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw NumericalError("dump_ttot: cannot open " + path);
  const char magic[8] = {'F', 'F', 'L', 'X', 'T', 'T', 'O', 'T'};
  std::fwrite(magic, 1, 8, f);
  std::int64_t hdr[5] = {st.L, static_cast<std::int64_t>(st.dB),
                         static_cast<std::int64_t>(st.dS), st.t,
                         static_cast<std::int64_t>(st.dim())};
  std::fwrite(hdr, sizeof(std::int64_t), 5, f);
  const Eigen::Index dim = st.dim();
  std::vector<double> row(static_cast<std::size_t>(2 * dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      row[static_cast<std::size_t>(2 * j)] = st.T(i, j).real();
      row[static_cast<std::size_t>(2 * j + 1)] = st.T(i, j).imag();
    }
    std::fwrite(row.data(), sizeof(double), row.size(), f);
  }
  std::fclose(f);
}

}  // namespace fermiflux
