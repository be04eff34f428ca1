#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace fermiflux;
using fftest::Rng;

TEST_CASE("build_block_unitary uncoupled limit") {
  Rng rng(31);
  Matrix w = fftest::random_unitary(4, rng);
  CouplingSpec spec = make_coupling_spec(w, fftest::ginibre(4, 2, rng), 0.0);
  BlockUnitary z = build_block_unitary(spec);
  CHECK((z.C - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK(z.Z_BS.norm() < 1e-14);
  CHECK(z.Z_SB.norm() < 1e-14);
  CHECK((z.M - w).norm() < 1e-14);
}

TEST_CASE("build_block_unitary on a projector coupling at alpha = pi/2") {
  // AA* is an orthogonal projector P; cos(pi/2) = 0 on ran P, so M = W (1 - P)
  Rng rng(32);
  Matrix w = fftest::random_unitary(4, rng);
  Matrix a = Matrix::Zero(4, 2);
  a(0, 0) = 1.0;
  a(2, 1) = 1.0;
  CouplingSpec spec = make_coupling_spec(w, a, M_PI / 2);
  BlockUnitary z = build_block_unitary(spec);
  Matrix p = a * a.adjoint();
  CHECK((z.M - w * (Matrix::Identity(4, 4) - p)).norm() < 1e-13);
}

TEST_CASE("build_block_unitary satisfies the unitarity relations") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    CouplingSpec spec = fftest::random_coupling(5, 3, 0.3, rng);
    BlockUnitary z = build_block_unitary(spec);
    CHECK(block_unitary_residual(z) <= 1e-10);
  }
}

TEST_CASE("M depends on alpha only through alpha^2") {
  Rng rng(34);
  CouplingSpec spec = fftest::random_coupling(5, 2, 0.37, rng);
  BlockUnitary zp = build_block_unitary(spec);
  spec.alpha = -0.37;
  BlockUnitary zm = build_block_unitary(spec);
  CHECK((zp.M - zm.M).norm() == 0.0);
}

TEST_CASE("check_sp basics and the cycle regression value") {
  CHECK(check_sp(Matrix::Zero(3, 3)) == 0.0);
  Rng rng(35);
  Matrix w = fftest::random_unitary(4, rng);
  CHECK(check_sp(w) == Catch::Approx(1.0).margin(1e-12));

  auto [spec, res] = build_cycle_model(fftest::acceptance_preset());
  BlockUnitary z = build_block_unitary(spec);
  double rho = check_sp(z.M);
  CHECK(rho < 1.0);
  // frozen regression baseline for the acceptance preset
  CHECK(rho == Catch::Approx(0.9971499425856607).margin(1e-10));
}

TEST_CASE("check_kalman basics") {
  Rng rng(36);
  Matrix w = fftest::random_unitary(3, rng);
  CHECK(check_kalman(w, Matrix::Identity(3, 3)));

  // W = 1 with a rank-deficient coupling: the span never grows
  Matrix a = Matrix::Zero(3, 1);
  a(0, 0) = 1.0;
  CHECK(!check_kalman(Matrix::Identity(3, 3), a));
}

TEST_CASE("cycle couplings satisfy Kalman and give mixing at small alpha") {
  CycleModelParams p = fftest::acceptance_preset();
  auto [spec, res] = build_cycle_model(p);
  CHECK(check_kalman(spec.W, spec.A));
  for (double alpha : {0.1, 0.2, 0.3}) {
    CouplingSpec s = spec;
    s.alpha = alpha;
    CHECK(check_sp(build_block_unitary(s).M) < 1.0);
  }
}

TEST_CASE("Kalman condition is equivalent to mixing at small coupling") {
  Rng rng(37);
  int kalman_true = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix w, a;
    if (trial % 2 == 0) {
      w = fftest::random_unitary(4, rng);
      a = fftest::ginibre(4, 2, rng);
    } else {
      // block-diagonal W with coupling confined to the first block: a strict
      // W-stable subspace contains ran A, so Kalman fails
      Matrix w1 = fftest::random_unitary(2, rng), w2 = fftest::random_unitary(2, rng);
      w = Matrix::Zero(4, 4);
      w.topLeftCorner(2, 2) = w1;
      w.bottomRightCorner(2, 2) = w2;
      a = Matrix::Zero(4, 2);
      a.topRows(2) = fftest::ginibre(2, 2, rng);
    }
    bool kalman = check_kalman(w, a);
    kalman_true += kalman ? 1 : 0;
    CouplingSpec spec = make_coupling_spec(w, a, 0.05);
    double rho = check_sp(build_block_unitary(spec).M);
    if (kalman)
      CHECK(rho < 1.0 - 1e-9);
    else
      CHECK(rho >= 1.0 - 1e-9);
  }
  CHECK(kalman_true >= 20);  // both branches exercised
}

TEST_CASE("eval_xi_hat frequency-flat and rank-one density cases") {
  std::vector<Matrix> proj(2, Matrix::Zero(2, 2));
  proj[0](0, 0) = 1.0;
  proj[1](1, 1) = 1.0;
  ReservoirSymbol res(proj, std::vector<Density>{Density::constant(0.9), Density::constant(0.1)});
  for (double th : {0.0, 1.3, 5.0}) {
    Matrix xh = eval_xi_hat(res, th);
    CHECK(xh(0, 0).real() == Catch::Approx(0.9));
    CHECK(xh(1, 1).real() == Catch::Approx(0.1));
    CHECK(std::abs(xh(0, 1)) < 1e-15);
  }
}

TEST_CASE("eval_xi_hat matches the explicit Fourier sum") {
  Rng rng(38);
  ReservoirSymbol res = fftest::random_rank_one_reservoir(3, 1, rng);
  double th = 0.7;
  Matrix direct = res.block(0) + std::exp(Complex(0, th)) * res.block(1) +
                  std::exp(Complex(0, -th)) * res.block(-1);
  CHECK((eval_xi_hat(res, th) - direct).norm() < 1e-14);
}

TEST_CASE("eval_xi_hat is Hermitian whenever the blocks are mutually adjoint") {
  Rng rng(39);
  for (int trial = 0; trial < 10; ++trial) {
    ReservoirSymbol res = fftest::random_rank_one_reservoir(2, 3, rng);
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    for (int k = 0; k < 8; ++k) {
      Matrix xh = res.xi_hat(u(rng));
      CHECK(herm_defect(xh) < 1e-13);
    }
  }
}

TEST_CASE("ReservoirSymbol validates its structure") {
  std::vector<Matrix> proj(2, Matrix::Zero(2, 2));
  proj[0](0, 0) = 1.0;
  proj[1](1, 1) = 1.0;

  // projectors not summing to the identity
  std::vector<Matrix> bad = {proj[0], proj[0]};
  CHECK_THROWS_AS(ReservoirSymbol(bad, std::vector<Density>{Density::constant(0.5),
                                                            Density::constant(0.5)}),
                  ConfigError);

  // block violating selfadjointness across signs
  std::map<int, Matrix> blocks;
  blocks[0] = 0.5 * Matrix::Identity(2, 2);
  blocks[1] = Matrix::Zero(2, 2);
  blocks[1](0, 0) = Complex(0.1, 0.0);
  blocks[-1] = Matrix::Zero(2, 2);
  blocks[-1](0, 0) = Complex(0.2, 0.0);
  CHECK_THROWS_AS(ReservoirSymbol(proj, blocks), ConfigError);

  // block that does not commute with the projectors
  std::map<int, Matrix> noncomm;
  noncomm[0] = 0.5 * Matrix::Identity(2, 2);
  noncomm[0](0, 1) = 0.1;
  noncomm[0](1, 0) = 0.1;
  CHECK_THROWS_AS(ReservoirSymbol(proj, noncomm), ConfigError);
}

TEST_CASE("density input forms agree") {
  // fourier vs grid samples of the same function
  std::vector<Complex> coeffs{Complex(0.5, 0.0), Complex(0.1, -0.05), Complex(0.0, 0.02)};
  Density f = Density::fourier(coeffs);
  std::vector<double> samples;
  int n = 16;
  for (int j = 0; j < n; ++j) samples.push_back(f(2.0 * M_PI * j / n));
  Density g = Density::grid_samples(samples);
  for (double th : {0.0, 0.3, 2.2, 4.9})
    CHECK(g(th) == Catch::Approx(f(th)).margin(1e-13));
  CHECK(f.band() == 2);
  CHECK(Density::constant(0.3).is_constant());
}

TEST_CASE("sample initial symbol must be a state") {
  Matrix ok = 0.3 * Matrix::Identity(3, 3);
  CHECK_NOTHROW(make_sample_initial(ok));
  Matrix bad = 1.5 * Matrix::Identity(3, 3);
  CHECK_THROWS_AS(make_sample_initial(bad), SpectrumOutOfRange);
}
