#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "fermiflux/presets.hpp"

namespace fermiflux {

using Json = nlohmann::json;

namespace detail {

inline Complex parse_entry(const Json& e) {
  if (e.is_number()) return Complex(e.get<double>(), 0.0);
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
    return Complex(e[0].get<double>(), e[1].get<double>());
  throw ConfigError("matrix entry must be a number or an [re, im] pair");
}

}  // namespace detail

/// Matrices are nested arrays of rows; each entry is a number or [re, im].
inline Matrix parse_matrix(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[static_cast<std::size_t>(r)].is_array() ||
        static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw ConfigError("matrix rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = detail::parse_entry(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  }
  return m;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Density parse_density(const Json& j) {
  if (j.is_number()) return Density::constant(j.get<double>());
  if (!j.is_object() || !j.contains("type")) throw ConfigError("density needs a type");
  std::string type = j.at("type").get<std::string>();
  if (type == "constant") return Density::constant(j.at("value").get<double>());
  if (type == "fourier") {
    std::vector<Complex> coeffs;
    for (const Json& e : j.at("coeffs")) coeffs.push_back(detail::parse_entry(e));
    return Density::fourier(std::move(coeffs));
  }
  if (type == "grid") {
    std::vector<double> samples = j.at("samples").get<std::vector<double>>();
    return Density::grid_samples(samples);
  }
  throw ConfigError("unknown density type: " + type);
}

/// Parsed run configuration: one model source, one reservoir source, the
/// numerics knobs and output paths.
struct RunConfig {
  // model: exactly one of preset / coupling / blocks
  std::optional<CycleModelParams> preset;
  std::optional<CouplingSpec> coupling;
  std::optional<BlockUnitary> blocks;
  // reservoirs (supplied by the preset when one is used)
  std::optional<ReservoirSymbol> reservoirs;
  // sample initial symbol; when absent a uniform density matrix is used
  std::optional<Matrix> sample_initial;
  std::optional<double> sample_uniform;
  // numerics
  PeriodicGrid grid{512};
  int lattice_L = 200;
  std::vector<double> alpha_sweep{0.04, 0.02, 0.01};
  double tail_tol = 1e-10;
  double eps_clip = -1.0;  // negative: derived from the spectrum margin
  Tolerances tol;
  // outputs
  std::string out_dir = ".";

  bool has_coupling_model() const { return preset.has_value() || coupling.has_value(); }

  CouplingSpec coupling_spec() const {
    if (coupling) return *coupling;
    if (preset) return build_cycle_model(*preset).first;
    throw ConfigError("this command requires a coupling model (preset or W/A/alpha)");
  }

  CouplingSpec coupling_spec_with_alpha(double alpha) const {
    CouplingSpec s = coupling_spec();
    s.alpha = alpha;
    return s;
  }

  BlockUnitary block_unitary() const {
    if (blocks) return *blocks;
    return build_block_unitary(coupling_spec(), tol.unit);
  }

  const ReservoirSymbol& reservoir() const {
    if (!reservoirs) throw ConfigError("configuration has no reservoir section");
    return *reservoirs;
  }

  SampleInitial sample(Eigen::Index dS) const {
    if (sample_initial) {
      if (sample_initial->rows() != dS)
        throw ConfigError("sample_initial dimension does not match the model");
      return make_sample_initial(*sample_initial);
    }
    double f = 0.5;
    if (sample_uniform) {
      f = *sample_uniform;
    } else if (reservoirs && reservoirs->has_densities()) {
      // neutral default: the average reservoir density at theta = 0
      f = 0.0;
      for (int k = 0; k < reservoirs->n_reservoirs(); ++k) f += reservoirs->density(k, 0.0);
      f /= reservoirs->n_reservoirs();
    }
    return make_sample_initial(f * Matrix::Identity(dS, dS));
  }
};

inline RunConfig parse_config(const Json& j) {
  RunConfig cfg;
  if (!j.is_object() || !j.contains("model")) throw ConfigError("config needs a model section");
  const Json& m = j.at("model");
  int model_sources = 0;
  if (m.contains("preset")) {
    ++model_sources;
    if (m.at("preset").get<std::string>() != "cycle")
      throw ConfigError("unknown preset: " + m.at("preset").get<std::string>());
    CycleModelParams p;
    const Json& pp = m.value("params", Json::object());
    p.n = pp.value("n", p.n);
    p.phi = pp.value("phi", p.phi);
    p.beta = pp.value("beta", p.beta);
    p.alpha = pp.value("alpha", p.alpha);
    p.gamma = pp.value("gamma", p.gamma);
    if (pp.contains("f_L")) p.f_L = parse_density(pp.at("f_L"));
    if (pp.contains("f_R")) p.f_R = parse_density(pp.at("f_R"));
    cfg.preset = p;
    cfg.reservoirs = build_cycle_model(p).second;
  }
  if (m.contains("coupling")) {
    ++model_sources;
    const Json& c = m.at("coupling");
    cfg.coupling = make_coupling_spec(parse_matrix(c.at("W")), parse_matrix(c.at("A")),
                                      c.at("alpha").get<double>());
  }
  if (m.contains("blocks")) {
    ++model_sources;
    const Json& b = m.at("blocks");
    cfg.blocks = make_block_unitary(parse_matrix(b.at("C")), parse_matrix(b.at("Z_BS")),
                                    parse_matrix(b.at("Z_SB")), parse_matrix(b.at("M")));
  }
  if (model_sources != 1) throw ConfigError("config must give exactly one model source");

  if (j.contains("reservoirs")) {
    if (cfg.preset) throw ConfigError("the preset already provides the reservoirs");
    const Json& r = j.at("reservoirs");
    std::vector<Matrix> projectors;
    for (const Json& p : r.at("projectors")) projectors.push_back(parse_matrix(p));
    if (r.contains("densities") == r.contains("blocks"))
      throw ConfigError("reservoirs need exactly one of densities or blocks");
    if (r.contains("densities")) {
      std::vector<Density> densities;
      for (const Json& d : r.at("densities")) densities.push_back(parse_density(d));
      cfg.reservoirs = ReservoirSymbol(std::move(projectors), std::move(densities));
    } else {
      std::map<int, Matrix> blocks;
      for (const auto& [key, val] : r.at("blocks").items())
        blocks[std::stoi(key)] = parse_matrix(val);
      cfg.reservoirs = ReservoirSymbol(std::move(projectors), std::move(blocks));
    }
  } else if (!cfg.preset) {
    throw ConfigError("config needs a reservoirs section (or a preset)");
  }

  if (j.contains("sample_initial")) {
    const Json& s = j.at("sample_initial");
    if (s.contains("Delta")) cfg.sample_initial = parse_matrix(s.at("Delta"));
    if (s.contains("uniform")) cfg.sample_uniform = s.at("uniform").get<double>();
    if (cfg.sample_initial.has_value() == cfg.sample_uniform.has_value())
      throw ConfigError("sample_initial needs exactly one of Delta or uniform");
  }

  const Json& n = j.value("numerics", Json::object());
  cfg.grid.N = n.value("grid_N", cfg.grid.N);
  if (cfg.grid.N < 1) throw ConfigError("grid_N must be positive");
  cfg.lattice_L = n.value("lattice_L", cfg.lattice_L);
  if (n.contains("alpha_sweep")) cfg.alpha_sweep = n.at("alpha_sweep").get<std::vector<double>>();
  cfg.tail_tol = n.value("tail_tol", cfg.tail_tol);
  cfg.eps_clip = n.value("eps_clip", cfg.eps_clip);
  cfg.tol.eig = n.value("tol_eig", cfg.tol.eig);
  cfg.tol.herm = n.value("tol_herm", cfg.tol.herm);
  cfg.tol.sp = n.value("tol_sp", cfg.tol.sp);
  cfg.tol.stein = n.value("tol_stein", cfg.tol.stein);
  cfg.tol.clip = n.value("tol_clip", cfg.tol.clip);
  cfg.tol.cluster = n.value("tol_cluster", cfg.tol.cluster);
  cfg.tol.unit = n.value("tol_unit", cfg.tol.unit);
  cfg.tol.rank = n.value("tol_rank", cfg.tol.rank);

  cfg.out_dir = j.value("outputs", Json::object()).value("dir", cfg.out_dir);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace fermiflux
