#pragma once

#include <utility>

#include "fermiflux/perturbation.hpp"

namespace fermiflux {

/// Coined spin-1/2 walk on an n-cycle coupled to two reservoirs. The sample
/// basis is x_nu (x) e_tau with nu = 0..n-1 outer and tau in {+1, -1} inner
/// (e_{+1} first); site arithmetic is mod n. Spin-up walkers at sites 0 and
/// n/2 exchange with the left and right reservoir respectively.
struct CycleModelParams {
  int n = 8;              // even cycle length
  double phi = M_PI / 3;  // coin angle in (0, pi/2)
  double beta = 0.1;      // coin phase in (0, pi/2)
  double alpha = 0.3;     // coupling strength
  Density f_L = Density::constant(0.9);
  Density f_R = Density::constant(0.1);
  double gamma = 0.0;     // optional global phase on W
};

/// W = W_1 W_2 with the spin-dependent shift W_1 and the uniform coin
///   C = [ e^{i beta} cos phi   sin phi
///        -sin phi              e^{-i beta} cos phi ],
/// couplings phi_L = x_0 (x) e_{+1}, phi_R = x_{n/2} (x) e_{+1}, and the
/// two-dimensional environment carrying rank-one projectors with densities
/// f_L, f_R.
inline std::pair<CouplingSpec, ReservoirSymbol> build_cycle_model(const CycleModelParams& p) {
  if (p.n <= 0 || p.n % 2 != 0) throw ConfigError("cycle model: n must be even and positive");
  if (p.phi <= 0.0 || p.phi >= M_PI / 2 || p.beta <= 0.0 || p.beta >= M_PI / 2)
    throw ConfigError("cycle model: phi, beta must lie in (0, pi/2)");
  const Eigen::Index dS = 2 * static_cast<Eigen::Index>(p.n);
  auto idx = [&](int nu, int s) {
    return 2 * static_cast<Eigen::Index>(((nu % p.n) + p.n) % p.n) + s;  // s: 0 -> +1, 1 -> -1
  };
  Matrix w1 = Matrix::Zero(dS, dS);
  for (int nu = 0; nu < p.n; ++nu) {
    w1(idx(nu + 1, 0), idx(nu, 0)) = 1.0;
    w1(idx(nu - 1, 1), idx(nu, 1)) = 1.0;
  }
  Matrix coin(2, 2);
  coin << std::exp(Complex(0, p.beta)) * std::cos(p.phi), std::sin(p.phi),
      -std::sin(p.phi), std::exp(Complex(0, -p.beta)) * std::cos(p.phi);
  Matrix w2 = Matrix::Zero(dS, dS);
  for (int nu = 0; nu < p.n; ++nu) w2.block(idx(nu, 0), idx(nu, 0), 2, 2) = coin;
  Matrix w = std::exp(Complex(0, p.gamma)) * (w1 * w2);
  Matrix a = Matrix::Zero(dS, 2);
  a(idx(0, 0), 0) = 1.0;        // phi_L <- psi_L
  a(idx(p.n / 2, 0), 1) = 1.0;  // phi_R <- psi_R
  CouplingSpec spec = make_coupling_spec(std::move(w), std::move(a), p.alpha);
  std::vector<Matrix> projectors(2, Matrix::Zero(2, 2));
  projectors[0](0, 0) = 1.0;
  projectors[1](1, 1) = 1.0;
  ReservoirSymbol res(std::move(projectors), std::vector<Density>{p.f_L, p.f_R});
  return {std::move(spec), std::move(res)};
}

/// The paper-stated closed form for the alpha^2 coefficient of the current
/// into the right reservoir of the cycle model:
///   sum_{lambda in sp W} sin^2(2 phi) |sin phi - 1 + lambda^2|^2 / 4
///     * (f_L(-i log lambda) - f_R(-i log lambda)).
/// Requires the spectrum of W simple.
inline double cycle_jr_closed_form(const CycleModelParams& p) {
  auto [spec, res] = build_cycle_model(p);
  SplittingData split = splitting(spec);
  if (!split.simple) throw NotSimple("cycle_jr_closed_form: spectrum of W is not simple");
  double s2 = std::sin(2.0 * p.phi) * std::sin(2.0 * p.phi);
  double acc = 0.0;
  for (int i = 0; i < split.n_groups(); ++i) {
    Complex lam = split.group_eigenvalue[static_cast<std::size_t>(i)];
    double theta = std::arg(lam);
    if (theta < 0) theta += 2.0 * M_PI;
    double weight = s2 * std::norm(std::sin(p.phi) - 1.0 + lam * lam) / 4.0;
    acc += weight * (p.f_L(theta) - p.f_R(theta));
  }
  return acc;
}

}  // namespace fermiflux
