#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fermiflux/config.hpp"
#include "fermiflux/entropy.hpp"
#include "fermiflux/transport.hpp"

namespace fermiflux {

// exit codes: 0 success, 1 usage/parse, 2 assumption failure, 3 numerical failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAssumption = 2;
inline constexpr int kExitNumerical = 3;

/// Floats in CSV files carry 17 significant digits so they round-trip exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

}  // namespace detail

/// Runs every model assumption check and prints one PASS/FAIL line each with
/// the numeric residual. Hard failures (block unitarity, the spectral-radius
/// condition, the reservoir block structure) give exit code 2.
inline int cmd_validate(const RunConfig& cfg, std::ostream& os = std::cout) {
  bool hard_fail = false;
  BlockUnitary z = cfg.block_unitary();
  double zres = block_unitary_residual(z);
  bool z_ok = zres <= cfg.tol.unit;
  hard_fail |= !z_ok;
  os << (z_ok ? "PASS" : "FAIL") << " unitarity(Z): residual " << fmt17(zres) << "\n";

  double rho = check_sp(z.M);
  bool sp_ok = rho < 1.0 - cfg.tol.sp;
  hard_fail |= !sp_ok;
  os << (sp_ok ? "PASS" : "FAIL") << " (Sp) spectral radius: rho(M) = " << fmt17(rho) << "\n";

  // reservoir structure was validated at construction; report it
  const ReservoirSymbol& res = cfg.reservoir();
  os << "PASS (Bl) reservoir blocks: " << res.n_reservoirs() << " reservoirs, band "
     << res.band() << (res.rank_one() ? ", rank one" : "") << "\n";

  if (cfg.has_coupling_model()) {
    CouplingSpec spec = cfg.coupling_spec();
    bool kalman = check_kalman(spec.W, spec.A, cfg.tol.rank);
    os << (kalman ? "PASS" : "FAIL") << " Kalman condition (informational)\n";
    os << (half_sim_projector_check(spec.A) ? "PASS" : "FAIL")
       << " AA* proportional to a projection (sufficient for semisimple splitting, "
          "informational)\n";
  }

  double margin = res.spectrum_margin(cfg.grid);
  os << (margin > 0.0 ? "PASS" : "FAIL") << " (IC+) reservoir spectrum margin: "
     << fmt17(margin) << " (informational for entropy)\n";

  return hard_fail ? kExitAssumption : kExitOk;
}

/// Computes the steady state, currents and entropy rate; writes a JSON summary
/// and a CSV of the frequency-resolved integrands.
inline int cmd_steady(const RunConfig& cfg, std::ostream& os = std::cout) {
  BlockUnitary z = cfg.block_unitary();
  const ReservoirSymbol& res = cfg.reservoir();
  SteadySampleState steady = steady_sample(z, res, cfg.tol);
  CurrentReport cur = currents(z, res, cfg.grid, cfg.tol);

  bool entropy_ok = res.spectrum_margin(cfg.grid) > 0.0;
  EntropyReport ent;
  if (entropy_ok) ent = entropy_rate(z, res, cfg.grid, cfg.eps_clip, cfg.tol);

  Json summary;
  summary["Delta_inf"] = matrix_to_json(steady.Delta_inf);
  summary["stein_residual"] = steady.residual;
  summary["J"] = std::vector<double>(cur.J.data(), cur.J.data() + cur.J.size());
  summary["conservation_defect"] = cur.conservation_defect;
  summary["grid_N"] = cfg.grid.N;
  if (entropy_ok) {
    summary["sigma_plus"] = ent.sigma_plus;
    if (res.rank_one()) summary["sigma_plus_flux_form"] = ent.sigma_plus_flux_form;
    summary["eps_clip"] = ent.eps_clip;
  } else {
    summary["sigma_plus"] = nullptr;
  }
  detail::write_file(detail::out_path(cfg, "steady_summary.json"), summary.dump(2) + "\n");

  std::string csv = "theta";
  for (int k = 0; k < res.n_reservoirs(); ++k) csv += ",jhat_" + std::to_string(k + 1);
  csv += ",entropy_integrand\n";
  for (int j = 0; j < cfg.grid.N; ++j) {
    csv += fmt17(cfg.grid.node(j));
    for (int k = 0; k < res.n_reservoirs(); ++k) csv += "," + fmt17(cur.integrand(k, j));
    csv += "," + (entropy_ok ? fmt17(ent.integrand[j]) : std::string("nan"));
    csv += "\n";
  }
  detail::write_file(detail::out_path(cfg, "steady_integrands.csv"), csv);
  os << "steady: J = [";
  for (Eigen::Index k = 0; k < cur.J.size(); ++k)
    os << (k ? ", " : "") << fmt17(cur.J[k]);
  os << "], sigma_plus = " << (entropy_ok ? fmt17(ent.sigma_plus) : "n/a") << "\n";
  return kExitOk;
}

/// Evolves the truncated lattice to t_max, writing one CSV row per step:
/// fluxes into each reservoir, sigma(t) and the distance of the sample corner
/// from Delta_inf.
inline int cmd_evolve(const RunConfig& cfg, int t_max, std::ostream& os = std::cout) {
  BlockUnitary z = cfg.block_unitary();
  const ReservoirSymbol& res = cfg.reservoir();
  SampleInitial d0 = cfg.sample(z.dim_S());
  LatticeState st = init_lattice_state(res, d0, cfg.lattice_L);
  if (t_max > st.horizon())
    throw TruncationExceeded("cmd_evolve: t_max " + std::to_string(t_max) +
                             " beyond causal horizon " + std::to_string(st.horizon()));
  Matrix dinf = steady_sample(z, res, cfg.tol).Delta_inf;
  double margin = lattice_spectrum_margin(st);
  bool entropy_ok = margin > 0.0;
  Matrix t0, log_ratio;
  if (entropy_ok) {
    t0 = lattice_initial_symbol(st);
    double eps = cfg.eps_clip > 0.0 ? cfg.eps_clip : margin / 10.0;
    log_ratio = lattice_log_ratio(st, eps, cfg.tol.clip);
  }
  std::string csv = "t";
  for (int k = 0; k < res.n_reservoirs(); ++k) csv += ",flux_" + std::to_string(k + 1);
  csv += ",sigma_t,dist_to_Dinf\n";
  for (int t = 0; t <= t_max; ++t) {
    if (t > 0) evolve(st, z, 1);
    csv += std::to_string(t);
    for (int k = 0; k < res.n_reservoirs(); ++k)
      csv += "," + fmt17(finite_time_flux(st, z, res, k));
    csv += "," + (entropy_ok ? fmt17(finite_time_entropy_given(st, t0, log_ratio))
                             : std::string("nan"));
    csv += "," + fmt17((st.sample_corner() - dinf).norm());
    csv += "\n";
  }
  detail::write_file(detail::out_path(cfg, "trajectory.csv"), csv);
  os << "evolve: wrote trajectory to t = " << t_max << "\n";
  return kExitOk;
}

/// Exact-vs-leading-order comparison over the alpha grid. Currents use the
/// quadrature-free Stein evaluation so that small couplings stay accurate;
/// for constant rank-one densities the entropy rate is evaluated through the
/// flux form, which is then exact as well.
inline int cmd_sweep(const RunConfig& cfg, std::ostream& os = std::cout) {
  if (!cfg.has_coupling_model())
    throw ConfigError("sweep requires a coupling model (W, A, alpha)");
  const ReservoirSymbol& res = cfg.reservoir();
  CouplingSpec base = cfg.coupling_spec();
  SplittingData split = splitting(base, cfg.tol.cluster, cfg.tol.rank);
  Eigen::VectorXd j2 = currents_leading(base, res, split);
  const int nb = res.n_reservoirs();

  bool constant_rank_one = res.rank_one() && res.has_densities();
  if (constant_rank_one)
    for (const Density& f : res.densities()) constant_rank_one &= f.is_constant();
  double sigma2 = 0.0;
  bool have_sigma2 = false;
  if (constant_rank_one && split.simple) {
    sigma2 = entropy_leading(base, res, split);
    have_sigma2 = true;
  }

  std::string csv = "alpha";
  for (int k = 0; k < nb; ++k)
    csv += ",J_" + std::to_string(k + 1) + ",leading_" + std::to_string(k + 1) + ",residual_" +
           std::to_string(k + 1);
  csv += ",sigma,sigma_leading\n";
  std::vector<double> log_alpha, log_res_j, log_res_d;
  Matrix dlead = steady_sample_leading(base, res, split);
  for (double alpha : cfg.alpha_sweep) {
    CouplingSpec spec = cfg.coupling_spec_with_alpha(alpha);
    BlockUnitary z = build_block_unitary(spec, cfg.tol.unit);
    Eigen::VectorXd j = currents_exact(z, res, cfg.tol);
    Matrix dinf = steady_sample(z, res, cfg.tol).Delta_inf;
    csv += fmt17(alpha);
    double max_res = 0.0;
    for (int k = 0; k < nb; ++k) {
      double lead = alpha * alpha * j2[k];
      csv += "," + fmt17(j[k]) + "," + fmt17(lead) + "," + fmt17(j[k] - lead);
      max_res = std::max(max_res, std::abs(j[k] - lead));
    }
    double sigma = std::numeric_limits<double>::quiet_NaN();
    if (constant_rank_one) {
      sigma = 0.0;  // flux form with constant mu_k, exact given exact currents
      for (int k = 0; k < nb; ++k) {
        double f = res.density(k, 0.0);
        sigma += std::log((1.0 - f) / f) * j[k];
      }
    }
    csv += "," + fmt17(sigma) + "," + (have_sigma2 ? fmt17(alpha * alpha * sigma2) : "nan");
    csv += "\n";
    log_alpha.push_back(std::log(alpha));
    log_res_j.push_back(std::log(std::max(max_res, 1e-300)));
    log_res_d.push_back(std::log(std::max((dinf - dlead).norm(), 1e-300)));
  }
  detail::write_file(detail::out_path(cfg, "sweep.csv"), csv);

  auto fit_slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  Json orders;
  orders["current_residual_slope"] = fit_slope(log_alpha, log_res_j);
  orders["steady_residual_slope"] = fit_slope(log_alpha, log_res_d);
  detail::write_file(detail::out_path(cfg, "sweep_orders.json"), orders.dump(2) + "\n");

  // per-channel circuit data for the simple rank-one case
  if (split.simple && res.rank_one()) {
    Json circuits = Json::array();
    for (const StarCircuit& c : star_circuit(base, res, split)) {
      Json jc;
      jc["lambda"] = Json::array({c.lambda.real(), c.lambda.imag()});
      jc["theta"] = c.theta;
      jc["sources"] = std::vector<double>(c.sources.data(), c.sources.data() + c.sources.size());
      jc["conductances"] = std::vector<double>(c.conductances.data(),
                                               c.conductances.data() + c.conductances.size());
      jc["branch_currents"] = std::vector<double>(
          c.branch_closed_form.data(), c.branch_closed_form.data() + c.branch_closed_form.size());
      circuits.push_back(std::move(jc));
    }
    detail::write_file(detail::out_path(cfg, "circuit.json"), circuits.dump(2) + "\n");
  }
  os << "sweep: current residual slope "
     << fmt17(orders["current_residual_slope"].get<double>()) << ", steady residual slope "
     << fmt17(orders["steady_residual_slope"].get<double>()) << "\n";
  return kExitOk;
}

/// Maps an exception to the documented process exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const SpectralRadiusTooLarge*>(&e) || dynamic_cast<const NotHermitian*>(&e) ||
      dynamic_cast<const SpectrumOutOfRange*>(&e) || dynamic_cast<const KalmanFailed*>(&e) ||
      dynamic_cast<const ObservableNotBlockDiagonal*>(&e) ||
      dynamic_cast<const SingularResolvent*>(&e) || dynamic_cast<const NotSimple*>(&e) ||
      dynamic_cast<const NotRankOne*>(&e) || dynamic_cast<const UnresolvedSplitting*>(&e))
    return kExitAssumption;
  return kExitNumerical;
}

}  // namespace fermiflux
