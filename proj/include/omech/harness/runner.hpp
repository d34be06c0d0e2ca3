#pragma once

// Experiment pipelines. Every pipeline first builds its validated inputs
// (prepare), then computes, then writes data files; the manifest goes last.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "omech/algebra.hpp"
#include "omech/classical.hpp"
#include "omech/entangle.hpp"
#include "omech/errors.hpp"
#include "omech/grid.hpp"
#include "omech/harness/config.hpp"
#include "omech/harness/digest.hpp"
#include "omech/harness/io.hpp"
#include "omech/kvn.hpp"
#include "omech/quantizer.hpp"
#include "omech/random_matrix.hpp"
#include "omech/spectral.hpp"

namespace omech::harness {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitCheckFailure = 1, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

struct Check {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool passed = false;
  std::string detail;
};

inline nlohmann::json to_json(const Check& c) {
  nlohmann::json j = {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}};
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

struct RunReport {
  ExperimentKind kind = ExperimentKind::VerifyAlgebra;
  nlohmann::json config;
  std::string version = kVersion;
  double wall_clock_seconds = 0;
  std::vector<Check> checks;
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::vector<OutputEntry> outputs;  // data files, excluding report.json and manifest.json
  std::string results_digest;        // over everything except the wall clock
  std::string report_sha256;
  std::filesystem::path output_dir;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  int exit_code() const { return passed() ? kExitPass : kExitCheckFailure; }
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kExitConfig;
  return kExitNumerical;
}

namespace detail {

using omech::detail::require;

// ---------------------------------------------------------------------------
// Inputs

inline Boundary boundary_from(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "zero-padded") return Boundary::ZeroPadded;
  if (s == "dirichlet") return Boundary::Dirichlet;
  throw ValidationError("unknown boundary '" + s + "'");
}

inline PotentialSpec potential_from(const ExperimentConfig& cfg, std::size_t dofs) {
  PotentialSpec spec;
  spec.coefficients.assign(dofs, cfg.numbers("potential.coefficients"));
  spec.mass = cfg.number("potential.mass");
  spec.validate();
  return spec;
}

inline SpectralWeights weights_from(const ExperimentConfig& cfg, std::size_t dofs) {
  auto w = cfg.numbers("spectral.weights");
  if (w.empty()) return SpectralWeights::uniform(dofs);
  if (w.size() != dofs)
    throw ValidationError("spectral.weights has " + std::to_string(w.size()) + " entries for " + std::to_string(dofs) +
                          " degrees of freedom");
  return SpectralWeights(std::move(w));
}

inline AlgebraContext context_from(const ExperimentConfig& cfg) {
  const auto rep = cfg.text("algebra.rep") == "ladder" ? Representation::Ladder : Representation::PositionGrid;
  ContextOptions options;
  options.dimension_budget = cfg.count("algebra.budget");
  return make_context(cfg.count("algebra.n"), cfg.count("algebra.N"), cfg.number("algebra.hbar"), rep, options);
}

inline void require_time_stepping(const ExperimentConfig& cfg, const std::string& ns) {
  const double dt = cfg.number(ns + ".dt");
  require(std::isfinite(dt) && dt > 0, ns + ".dt must be positive and finite");
  require(cfg.count(ns + ".steps") >= 1, ns + ".steps must be at least 1");
  require(cfg.count(ns + ".stride") >= 1, ns + ".stride must be at least 1");
  // Uniform sampling keeps the Ehrenfest time differences well defined.
  require(cfg.count(ns + ".steps") % cfg.count(ns + ".stride") == 0, ns + ".steps must be a multiple of " + ns + ".stride");
}

inline std::size_t phase_dofs(const ExperimentConfig& cfg) {
  const auto n = cfg.count("algebra.n");
  require(n >= 1 && n <= 2, "phase-space dynamics supports algebra.n = 1 or 2");
  return n;
}

inline PhaseGrid phase_grid_from(const ExperimentConfig& cfg, std::size_t dofs) {
  const Interval xb{cfg.number("kvn.grid.x_min"), cfg.number("kvn.grid.x_max")};
  const Interval pb{cfg.number("kvn.grid.p_min"), cfg.number("kvn.grid.p_max")};
  const std::array<std::size_t, 2> counts{cfg.count("kvn.grid.x_count"), cfg.count("kvn.grid.p_count")};
  return make_phase_grid(std::vector<Interval>(dofs, xb), std::vector<Interval>(dofs, pb),
                         std::vector<std::array<std::size_t, 2>>(dofs, counts),
                         boundary_from(cfg.text("kvn.grid.boundary")));
}

inline PhaseGaussian kvn_gaussian_from(const ExperimentConfig& cfg, std::size_t dofs) {
  const double sx = cfg.number("kvn.sigma_x"), sp = cfg.number("kvn.sigma_p");
  require(sx > 0 && sp > 0, "kvn.sigma_x and kvn.sigma_p must be positive");
  return {std::vector<double>(dofs, cfg.number("kvn.x0")), std::vector<double>(dofs, cfg.number("kvn.p0")),
          std::vector<double>(dofs, sx), std::vector<double>(dofs, sp)};
}

inline ConfigGrid config_grid_from(const ExperimentConfig& cfg, std::size_t dofs) {
  return ConfigGrid(std::vector<Interval>(dofs, Interval{cfg.number("qm.grid.min"), cfg.number("qm.grid.max")}),
                    cfg.count("qm.grid.points"), boundary_from(cfg.text("qm.grid.boundary")));
}

inline PotentialMode potential_mode_from(const ExperimentConfig& cfg) {
  return cfg.text("qm.potential_mode") == "shifted" ? PotentialMode::Shifted : PotentialMode::Textbook;
}

/// omega when every degree of freedom carries the same pure quadratic a2 x^2 (plus a constant).
inline std::optional<double> harmonic_omega(const PotentialSpec& spec) {
  std::optional<double> a2;
  for (std::size_t i = 0; i < spec.dofs(); ++i) {
    const auto& c = spec.dof_coefficients(i);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (k != 0 && k != 2 && c[k] != 0) return std::nullopt;
    const double q = c.size() > 2 ? c[2] : 0.0;
    if (q <= 0 || (a2 && *a2 != q)) return std::nullopt;
    a2 = q;
  }
  if (!a2) return std::nullopt;
  return std::sqrt(2 * *a2 / spec.mass);
}

// ---------------------------------------------------------------------------
// Run state

class Recorder {
 public:
  Recorder(RunReport& report, OutputDirectory& out) : report_(report), out_(out) {}

  void check(std::string name, double value, double tolerance, std::string detail = {}) {
    report_.checks.push_back({std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance,
                              std::move(detail)});
  }
  void require_true(std::string name, bool ok, std::string detail = {}) {
    report_.checks.push_back({std::move(name), ok ? 0.0 : 1.0, 0.0, ok, std::move(detail)});
  }

  nlohmann::json& results() { return report_.results; }
  void write(const std::string& name, const std::string& bytes) { report_.outputs.push_back(out_.write(name, bytes)); }
  void write(const std::string& name, const CsvTable& table) { write(name, table.str()); }

 private:
  RunReport& report_;
  OutputDirectory& out_;
};

/// Routes library warnings into the report for the duration of a run.
class WarningCapture {
 public:
  explicit WarningCapture(std::vector<std::string>& sink) : saved_(warning_sink()) {
    warning_sink() = [&sink](const std::string& m) { sink.push_back(m); };
  }
  ~WarningCapture() { warning_sink() = saved_; }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

 private:
  std::function<void(const std::string&)> saved_;
};

inline std::string fmt(double v) { return format_number(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }

// ---------------------------------------------------------------------------
// Shared pieces

struct ObservableRun {
  ObservableSeries series;
  Field initial, final_state;
};

inline CsvTable observable_table(const ObservableSeries& series, std::size_t dofs) {
  std::vector<std::string> cols{"t", "x_mean", "p_mean", "norm", "energy"};
  for (std::size_t i = 1; i < dofs; ++i) {
    cols.push_back("x_mean_" + std::to_string(i + 1));
    cols.push_back("p_mean_" + std::to_string(i + 1));
  }
  CsvTable table(cols);
  for (const auto& s : series.samples) {
    std::vector<double> row{s.t, s.x_mean[0], s.p_mean[0], s.norm, s.energy};
    for (std::size_t i = 1; i < dofs; ++i) {
      row.push_back(s.x_mean[i]);
      row.push_back(s.p_mean[i]);
    }
    table.row(row);
  }
  return table;
}

inline double max_norm_drift(const ObservableSeries& series) {
  double d = 0;
  for (const auto& s : series.samples) d = std::max(d, std::abs(s.norm - series.samples.front().norm));
  return d;
}

inline double max_relative_energy_drift(const ObservableSeries& series) {
  const double e0 = series.samples.front().energy;
  const double scale = e0 != 0 ? std::abs(e0) : 1.0;
  double d = 0;
  for (const auto& s : series.samples) d = std::max(d, std::abs(s.energy - e0) / scale);
  return d;
}

/// Largest deviation of the sampled means from the classical trajectory (dof-wise).
inline double classical_tracking(const ObservableSeries& series, const PotentialSpec& spec, const std::vector<double>& x0,
                                 const std::vector<double>& p0, double dt, std::size_t steps) {
  const auto traj = classical_trajectory(x0, p0, spec, dt, steps);
  double gap = 0;
  for (const auto& s : series.samples) {
    const auto k = std::size_t(std::llround(s.t / dt));
    for (std::size_t i = 0; i < s.x_mean.size(); ++i) {
      gap = std::max(gap, std::abs(s.x_mean[i] - traj.x[k][i]));
      gap = std::max(gap, std::abs(s.p_mean[i] - traj.p[k][i]));
    }
  }
  return gap;
}

inline nlohmann::json ehrenfest_json(const EhrenfestReport& r) {
  return {{"max_x_residual", r.max_x_residual}, {"max_p_residual", r.max_p_residual}, {"rows", r.rows.size()}};
}

inline void add_ehrenfest_rows(CsvTable& table, const std::string& source, const EhrenfestReport& r) {
  for (const auto& row : r.rows)
    table.row({source, fmt(row.dof), "", fmt(row.t), fmt(row.dx_dt), fmt(row.p_over_m), fmt(row.dp_dt),
               fmt(row.minus_grad)});
}

inline CsvTable ehrenfest_table() {
  return CsvTable({"source", "dof", "m", "t", "dx_dt", "p_over_m", "dp_dt", "minus_grad"});
}

inline ObservableRun run_kvn(const ExperimentConfig& cfg, const PotentialSpec& spec, const PhaseGrid& grid,
                             const PhaseGaussian& g, FrameWriter* frames) {
  const PhaseSpace space(grid);
  const KvNObserver observer(space, spec);
  ObservableRun run;
  const auto psi0 = gaussian_state(grid, g);
  run.initial = psi0.psi;
  std::vector<std::size_t> dims;
  for (const auto& a : grid.grid().axes()) dims.push_back(a.count);
  const auto final_state = evolve_kvn(psi0, spec, cfg.number("kvn.dt"), cfg.count("kvn.steps"), space,
                                      cfg.count("kvn.stride"), [&](const KvNState& s) {
                                        run.series.samples.push_back(observer(s));
                                        if (frames) frames->append(dims, s.t, s.psi);
                                      });
  run.final_state = final_state.psi;
  return run;
}

inline ObservableRun run_qm(const ExperimentConfig& cfg, const GridHamiltonian& h, const QMState& psi0,
                            FrameWriter* frames) {
  ObservableRun run;
  run.initial = psi0.psi;
  std::vector<std::size_t> dims;
  for (const auto& a : h.operators().grid().grid().axes()) dims.push_back(a.count);
  const auto final_state = evolve_schrodinger(psi0, h, cfg.number("qm.dt"), cfg.count("qm.steps"),
                                              cfg.count("qm.stride"), [&](const QMState& s) {
                                                const auto q = observe_qm(s, h);
                                                run.series.samples.push_back(
                                                    {q.t, q.x_mean, q.p_mean, q.grad_mean, q.norm, q.energy});
                                                if (frames) frames->append(dims, s.t, s.psi);
                                              });
  run.final_state = final_state.psi;
  return run;
}

// ---------------------------------------------------------------------------
// Pipelines

inline void verify_algebra(const ExperimentConfig& cfg, Recorder& rec) {
  const auto ctx = context_from(cfg);
  const auto spec = potential_from(cfg, ctx.dofs());
  const auto w = weights_from(cfg, ctx.dofs());
  const bool ladder = ctx.representation() == Representation::Ladder;
  const double tol = ladder ? 1e-10 : 1e-3;

  const auto canon = verify_canonical_structure(ctx, 1);
  const auto dyn = dynamics_residuals(spec, ctx);

  CsvTable table({"identity", "full", "block", "exclusion_depth"});
  for (const auto& r : canon.residuals) table.row({r.name, fmt(r.full), fmt(r.block), fmt(canon.exclusion_depth)});
  for (const auto& r : dyn.residuals) table.row({r.name, fmt(r.full), fmt(r.block), fmt(dyn.exclusion_depth)});
  rec.write("residuals.csv", table);

  rec.check("canonical_block_residual", canon.max_block(), tol);
  rec.check("dynamics_block_residual", dyn.max_block(), tol);
  rec.results()["canonical"] = {{"max_block", canon.max_block()},
                                {"max_full", canon.max_full()},
                                {"defect_rank", canon.defect_rank},
                                {"defect_magnitude", canon.defect_magnitude},
                                {"defect_location", {canon.defect_location.first, canon.defect_location.second}}};
  rec.results()["dynamics"] = {
      {"max_block", dyn.max_block()}, {"max_full", dyn.max_full()}, {"exclusion_depth", dyn.exclusion_depth}};

  if (ladder) {
    const auto compat = dequantization_compat_check(w, ctx);
    std::size_t defects = 0;
    for (const auto& r : compat.rows) defects += r.defect ? 1 : 0;
    rec.check("dequantization_compat", compat.max_residual, tol);
    rec.results()["compat"] = {{"max_residual", compat.max_residual}, {"rows", compat.rows.size()}, {"defect_rows", defects}};

    // Involution norm on low modes for seeded coefficient vectors.
    std::mt19937_64 rng(cfg.uint("seed"));
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0;
    const std::size_t low = std::min<std::size_t>(ctx.block_indices(2).size(), 4);
    for (std::size_t trial = 0; trial < 100; ++trial) {
      std::vector<std::complex<double>> k(ctx.dofs());
      double expected = 0;
      for (auto& c : k) {
        c = {g(rng), g(rng)};
        expected += std::norm(c);
      }
      for (std::size_t m = 0; m < low; ++m) {
        const auto mode = ctx.block_indices(2)[m];
        worst = std::max(worst, std::abs(involution_norm(k, mode, ctx) - expected));
      }
    }
    rec.check("involution_norm", worst, 1e-12);
    rec.results()["involution_norm_max_deviation"] = worst;
  }

  if (ctx.dim() <= 256) {
    rec.write("commutator_xp.bin", serialize_matrix(commutator(ctx.X(0), ctx.P(0)).matrix()));
  }
}

inline void spectrum(const ExperimentConfig& cfg, Recorder& rec) {
  const auto ctx = context_from(cfg);
  const auto w = weights_from(cfg, ctx.dofs());
  const auto ms = cfg.counts("spectral.m");
  const auto N_list = cfg.counts("spectral.N_list");
  const auto gen = cfg.text("spectral.generator") == "X" ? Generator::X : Generator::P;
  for (auto m : ms)
    require(m < ctx.dim(), "spectral.m entry " + std::to_string(m) + " out of range for dimension " + std::to_string(ctx.dim()));
  require(!N_list.empty(), "spectral.N_list must not be empty");
  const bool ensemble = cfg.flag("spectral.ensemble");
  if (ensemble) {
    require(cfg.count("spectral.ensemble_N") >= 2, "spectral.ensemble_N must be at least 2");
    require(cfg.count("spectral.samples") >= 1, "spectral.samples must be at least 1");
  }

  // First-kind expectations against w_i lambda_m.
  CsvTable expectations({"dof", "m", "generator", "expectation", "w_lambda"});
  for (const auto g : {Generator::X, Generator::P}) {
    double worst = 0;
    for (std::size_t i = 0; i < ctx.dofs(); ++i) {
      const auto lambda = eigenvalues(g == Generator::X ? ctx.X(i) : ctx.P(i));
      for (auto m : ms) {
        const double value = first_kind_expectation(g, i, m, w, ctx);
        const double expected = w[i] * lambda[m];
        worst = std::max(worst, std::abs(value - expected));
        expectations.row({fmt(i), fmt(m), to_string(g), fmt(value), fmt(expected)});
      }
    }
    rec.check("first_kind_" + to_string(g), worst, 1e-12);
  }
  rec.write("expectations.csv", expectations);

  // Continuum profile over increasing N.
  CsvTable profile({"x", "value", "N", "generator", "dof"});
  CsvTable plot({"x", "lambda_over_N", "N", "dof"});
  nlohmann::json continuum = nlohmann::json::array();
  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    const auto report = continuum_profile(gen, i, w, N_list, ctx.hbar(), ctx.representation());
    nlohmann::json alphas = nlohmann::json::array();
    bool shrinking = true;
    for (std::size_t k = 0; k < report.profiles.size(); ++k) {
      const auto& p = report.profiles[k];
      alphas.push_back(p.alpha);
      if (k > 0 && p.alpha > report.profiles[k - 1].alpha) shrinking = false;
      for (std::size_t j = 0; j < p.x.size(); ++j)
        profile.row({fmt(p.x[j]), fmt(p.values[j]), fmt(p.N), to_string(gen), fmt(i)});
    }
    for (auto N : N_list) {
      const auto c = make_context(ctx.dofs(), N, ctx.hbar(), ctx.representation(), ctx.options());
      const auto lambda = eigenvalues(gen == Generator::X ? c.X(i) : c.P(i));
      for (std::size_t j = 0; j < lambda.size(); ++j)
        plot.row({fmt(double(j + 1) / double(lambda.size())), fmt(lambda[j] / double(N)), fmt(N), fmt(i)});
    }
    continuum.push_back({{"dof", i}, {"alpha", alphas}, {"cauchy", report.cauchy}, {"support_shrinking", shrinking}});
  }
  rec.results()["continuum"] = continuum;

  if (ensemble) {
    const auto e = gue_profile(cfg.count("spectral.ensemble_N"), cfg.count("spectral.samples"),
                               cfg.seed_for("spectral.seed"), w[0]);
    for (std::size_t j = 0; j < e.mean_profile.x.size(); ++j)
      profile.row({fmt(e.mean_profile.x[j]), fmt(e.mean_profile.values[j]), fmt(e.N), "GUE", "0"});
    rec.check("ensemble_semicircle_ks", e.ks_distance, 0.05);
    rec.results()["ensemble"] = {{"N", e.N}, {"samples", e.samples}, {"seed", e.seed}, {"ks_distance", e.ks_distance}};
  }
  rec.write("profile.csv", profile);
  rec.write("spectrum.csv", plot);
}

inline void evolve_kvn_pipeline(const ExperimentConfig& cfg, Recorder& rec) {
  const auto n = phase_dofs(cfg);
  const auto spec = potential_from(cfg, n);
  const auto grid = phase_grid_from(cfg, n);
  const auto g = kvn_gaussian_from(cfg, n);
  require_time_stepping(cfg, "kvn");

  FrameWriter frames;
  const auto run = run_kvn(cfg, spec, grid, g, cfg.flag("kvn.write_frames") ? &frames : nullptr);
  const double dt = cfg.number("kvn.dt");
  const auto steps = cfg.count("kvn.steps");

  rec.write("observables.csv", observable_table(run.series, n));
  if (cfg.flag("kvn.write_frames")) rec.write("trajectory.bin", frames.bytes());

  const double drift = max_norm_drift(run.series);
  rec.check("norm_drift", drift, 1e-6);
  rec.results()["norm_drift"] = drift;
  rec.results()["relative_energy_drift"] = max_relative_energy_drift(run.series);

  if (run.series.samples.size() >= 3) {
    const auto eh = ehrenfest_from_series(run.series, spec.mass);
    rec.check("ehrenfest_x", eh.max_x_residual, 1e-3);
    rec.check("ehrenfest_p", eh.max_p_residual, 1e-3);
    rec.results()["ehrenfest"] = ehrenfest_json(eh);
  }
  if (spec.degree() <= 2) {
    const double gap = classical_tracking(run.series, spec, g.x0, g.p0, dt, steps);
    rec.check("classical_tracking", gap, 1e-3);
    rec.results()["classical_tracking"] = gap;
  }
  if (const auto omega = harmonic_omega(spec)) {
    const double periods = double(steps) * dt * *omega / (2 * std::numbers::pi);
    if (std::llround(periods) >= 1 && std::abs(periods - std::round(periods)) < 1e-9) {
      const double err = l2_norm(grid.grid(), Field(run.final_state - run.initial)) / l2_norm(grid.grid(), run.initial);
      rec.check("period_return_l2", err, 1e-3);
      rec.results()["period_return_l2"] = err;
    }
  }
}

inline void evolve_qm_pipeline(const ExperimentConfig& cfg, Recorder& rec) {
  const auto n = phase_dofs(cfg);
  const auto spec = potential_from(cfg, n);
  const auto grid = config_grid_from(cfg, n);
  const double hbar = cfg.number("qm.hbar");
  require(std::isfinite(hbar) && hbar > 0, "qm.hbar must be positive");
  require(cfg.number("qm.sigma") > 0, "qm.sigma must be positive");
  require(grid.boundary() == Boundary::Periodic || n == 1, "Dirichlet propagation supports one degree of freedom");
  require_time_stepping(cfg, "qm");

  const auto h = build_hqm(spec, quantize_map(grid, hbar), potential_mode_from(cfg));
  const std::vector<double> x0(n, cfg.number("qm.x0")), p0(n, cfg.number("qm.p0"));
  const auto psi0 = qm_gaussian(grid, x0, p0, std::vector<double>(n, cfg.number("qm.sigma")), hbar);

  FrameWriter frames;
  const auto run = run_qm(cfg, h, psi0, cfg.flag("qm.write_frames") ? &frames : nullptr);
  rec.write("observables.csv", observable_table(run.series, n));
  if (cfg.flag("qm.write_frames")) rec.write("trajectory.bin", frames.bytes());

  const double drift = max_norm_drift(run.series);
  rec.check("norm_drift", drift, 1e-10);
  rec.results()["norm_drift"] = drift;
  const double energy_drift = max_relative_energy_drift(run.series);
  rec.check("energy_drift", energy_drift, 1e-8);
  rec.results()["relative_energy_drift"] = energy_drift;

  if (run.series.samples.size() >= 3) {
    // The quantum law is exact for every potential; 1e-4 covers the time differencing.
    const auto eh = ehrenfest_from_series(run.series, spec.mass);
    rec.check("ehrenfest_x", eh.max_x_residual, 1e-4);
    rec.check("ehrenfest_p", eh.max_p_residual, 1e-4);
    rec.results()["ehrenfest"] = ehrenfest_json(eh);
  }

  const auto omega = harmonic_omega(spec);
  if (omega) {
    // Means of any Gaussian in a quadratic well follow the classical orbit.
    double gap = 0;
    for (const auto& s : run.series.samples) {
      const double c = std::cos(*omega * s.t), si = std::sin(*omega * s.t);
      gap = std::max(gap, std::abs(s.x_mean[0] - (x0[0] * c + p0[0] / (spec.mass * *omega) * si)));
    }
    rec.check("coherent_mean", gap, 1e-4);
    rec.results()["coherent_mean_max_error"] = gap;
  }

  if (grid.boundary() == Boundary::Periodic) {
    double op = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto f : {QuantumObservable::Position, QuantumObservable::Momentum})
        op = std::max(op, heisenberg_residual(f, i, h, cfg.number("qm.dt"), cfg.uint("seed")).operator_residual);
    rec.check("heisenberg_operator", op, 1e-8);
    rec.results()["heisenberg_operator_residual"] = op;
  } else {
    const auto count = std::min<std::size_t>(cfg.count("qm.eigenvalues"), grid.size());
    const auto energies = h.spectrum();
    CsvTable table({"k", "energy", "expected"});
    const auto& eff = h.potential_spec().dof_coefficients(0);
    const double offset = eff.empty() ? 0.0 : eff[0];
    for (std::size_t k = 0; k < count; ++k) {
      const double expected = omega ? hbar * *omega * (double(k) + 0.5) + offset : std::nan("");
      table.row({fmt(k), fmt(energies[k]), omega ? fmt(expected) : ""});
    }
    rec.write("spectrum.csv", table);
    if (omega && count > 0) {
      const double err = std::abs(energies[0] - (hbar * *omega / 2 + offset));
      rec.check("ground_energy", err, 1e-6);
      rec.results()["ground_energy"] = energies[0];
    }
  }
}

inline void quantize_compare(const ExperimentConfig& cfg, Recorder& rec) {
  const auto spec = potential_from(cfg, 1);
  const double hbar = cfg.number("qm.hbar");
  require(std::isfinite(hbar) && hbar > 0, "qm.hbar must be positive");
  require_time_stepping(cfg, "kvn");
  const auto calops_points = cfg.count("qm.calops_points");
  const auto calops_grid = make_phase_grid({{cfg.number("kvn.grid.x_min"), cfg.number("kvn.grid.x_max")}},
                                           {{cfg.number("kvn.grid.p_min"), cfg.number("kvn.grid.p_max")}},
                                           {{calops_points, calops_points}});
  require(cfg.number("kvn.grid.x_min") == -cfg.number("kvn.grid.x_max") &&
              cfg.number("kvn.grid.p_min") == cfg.number("kvn.grid.x_min") &&
              cfg.number("kvn.grid.p_max") == cfg.number("kvn.grid.x_max") &&
              cfg.count("kvn.grid.x_count") == cfg.count("kvn.grid.p_count"),
          "comparison needs a square symmetric KvN grid");
  require(cfg.number("qm.grid.min") == -cfg.number("qm.grid.max"), "comparison needs a symmetric QM grid");
  require(cfg.text("qm.grid.boundary") == "periodic", "comparison runs on a periodic QM grid");
  require(cfg.number("kvn.sigma_x") > 0, "kvn.sigma_x must be positive");

  // Shifted-potential rule, degree by degree.
  CsvTable shift({"k", "a_k", "gradient_term", "shifted"});
  bool rule = true;
  for (std::size_t k = 1; k <= PotentialSpec::kMaxDegree; ++k) {
    const auto mono = PotentialSpec::monomial(k, 1.0);
    const auto grad = coordinate_gradient_term(mono).dof_coefficients(0);
    const auto tilde = shifted_potential(mono).dof_coefficients(0);
    const double gk = k < grad.size() ? grad[k] : 0.0, tk = k < tilde.size() ? tilde[k] : 0.0;
    rule = rule && gk == double(k) && tk == double(k) - 1.0;
    shift.row({fmt(k), "1", fmt(gk), fmt(tk)});
  }
  rec.write("shifted_potential.csv", shift);
  rec.require_true("shift_rule", rule, "a_k -> k a_k and (k-1) a_k for k = 1..12");
  const auto quad = PotentialSpec::monomial(2, 0.5);
  rec.require_true("quadratic_fixed_point", shifted_potential(quad).dof_coefficients(0) == quad.dof_coefficients(0));

  const auto calops = calops_check(calops_grid, hbar, cfg.uint("seed"), cfg.count("qm.calops_fields"));
  CsvTable ctable({"relation", "residual"});
  for (const auto& r : calops.relations) ctable.row({r.name, fmt(r.residual)});
  rec.write("calops.csv", ctable);
  rec.check("calops", calops.max_residual(), 1e-8);

  ComparisonResolution res;
  res.kvn_half_width = cfg.number("kvn.grid.x_max");
  res.kvn_points = cfg.count("kvn.grid.x_count");
  res.qm_half_width = cfg.number("qm.grid.max");
  res.qm_points = cfg.count("qm.grid.points");
  res.steps = cfg.count("kvn.steps");
  res.stride = cfg.count("kvn.stride");
  const InitialMoments moments{cfg.number("kvn.x0"), cfg.number("kvn.p0"), cfg.number("kvn.sigma_x")};
  const double T = cfg.number("kvn.dt") * double(res.steps);
  const auto cmp = compare_kvn_qm(spec, moments, T, res, hbar, potential_mode_from(cfg));

  CsvTable table({"t", "x_kvn", "x_qm", "p_kvn", "p_qm", "abs_gap_x", "abs_gap_p"});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : cmp.rows) {
    table.row({r.t, r.x_kvn, r.x_qm, r.p_kvn, r.p_qm, r.abs_gap_x, r.abs_gap_p});
    rows.push_back({{"t", r.t}, {"x_kvn", r.x_kvn}, {"x_qm", r.x_qm}, {"p_kvn", r.p_kvn}, {"p_qm", r.p_qm},
                    {"abs_gap_x", r.abs_gap_x}, {"abs_gap_p", r.abs_gap_p}});
  }
  rec.write("comparison.csv", table);
  rec.results()["comparison"] = {{"rows", rows}, {"max_gap_x", cmp.max_gap_x}, {"max_gap_p", cmp.max_gap_p},
                                 {"exact", cmp.exact}};
  if (cmp.exact) rec.check("kvn_qm_gap_x", cmp.max_gap_x, 1e-3);
}

inline BlockPartition contiguous_partition(std::size_t dim, std::size_t blocks) {
  require(blocks >= 1 && blocks <= dim, "cannot split " + std::to_string(dim) + " modes into " + std::to_string(blocks) +
                                            " nonempty blocks");
  BlockPartition p;
  std::size_t next = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t size = dim / blocks + (b < dim % blocks ? 1 : 0);
    IndexSet block(size);
    for (auto& k : block) k = next++;
    p.blocks.push_back(std::move(block));
  }
  return p;
}

inline void entangle_metric(const ExperimentConfig& cfg, Recorder& rec) {
  const bool realized = cfg.text("geometry.source") == "realized";
  const bool position = cfg.text("geometry.basis") == "position";
  const auto draws = cfg.count("geometry.draws");
  const auto blocks = cfg.count("geometry.blocks");
  require(draws >= 1, "geometry.draws must be at least 1");
  require(!(position && !realized), "the position basis needs the realized density");
  std::optional<AlgebraContext> ctx;
  std::optional<OperatorElement> fixed_rho;
  if (realized) {
    ctx = context_from(cfg);
    fixed_rho = realize_density(weights_from(cfg, ctx->dofs()), *ctx);
  }
  const std::size_t dim = realized ? ctx->dim() : cfg.count("geometry.N");
  require(dim >= 2, "geometry.N must be at least 2");
  require(blocks >= 1 && blocks <= dim, "geometry.blocks must be between 1 and the mode dimension");

  std::mt19937_64 rng(cfg.seed_for("geometry.seed"));
  nlohmann::json metric = nlohmann::json::array();
  double symmetry = 0, worst_slack = std::numeric_limits<double>::infinity(), rajski_min = 0, rajski_max = 0;
  std::size_t violations = 0, degenerate = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    const OperatorElement rho = realized ? *fixed_rho : random_density(dim, rng);
    const auto partition = cfg.text("geometry.partition") == "random" ? random_partition(dim, blocks, rng)
                                                                      : contiguous_partition(dim, blocks);
    const auto basis = position ? ReferenceBasis::of_position(*ctx) : ReferenceBasis::of_density(rho);
    const auto r = build_metric_space(rho, partition, basis);

    symmetry = std::max(symmetry, r.symmetry_defect);
    worst_slack = std::min(worst_slack, r.voi_triangle.worst_slack);
    violations += r.voi_triangle.violations;
    degenerate += r.degenerate_pairs.size();
    rajski_min = d == 0 ? r.rajski_min : std::min(rajski_min, r.rajski_min);
    rajski_max = d == 0 ? r.rajski_max : std::max(rajski_max, r.rajski_max);

    if (d == 0) {
      CsvTable edges({"block_a", "block_b", "d_voi", "d_rajski", "s_joint", "mutual_info"});
      for (std::size_t a = 0; a < r.blocks; ++a)
        for (std::size_t b = a + 1; b < r.blocks; ++b) {
          const auto A = Eigen::Index(a), B = Eigen::Index(b);
          edges.row({fmt(a), fmt(b), fmt(r.voi(A, B)), fmt(r.rajski(A, B)), fmt(r.s_joint(A, B)),
                     fmt(r.mutual_info(A, B))});
        }
      rec.write("edges.csv", edges);
    }
    nlohmann::json degenerate_pairs = nlohmann::json::array();
    for (const auto& [a, b] : r.degenerate_pairs) degenerate_pairs.push_back({a, b});
    metric.push_back({{"draw", d},
                      {"dim", dim},
                      {"blocks", partition.blocks},
                      {"voi", matrix_json(r.voi)},
                      {"rajski", matrix_json(r.rajski)},
                      {"s_joint", matrix_json(r.s_joint)},
                      {"mutual_info", matrix_json(r.mutual_info)},
                      {"block_entropy", r.block_entropy},
                      {"degenerate_pairs", degenerate_pairs},
                      {"voi_worst_triangle_slack", r.voi_triangle.worst_slack},
                      {"voi_triangle_violations", r.voi_triangle.violations}});
  }
  rec.write("metric.json", metric.dump(1) + "\n");

  const OperatorElement mixed(ComplexMatrix<double>::Identity(Eigen::Index(dim), Eigen::Index(dim)) / double(dim), true);
  const double mixed_err = std::abs(entropy(mixed) - std::log(double(dim)));
  rec.check("maximally_mixed_entropy", mixed_err, 1e-10);
  rec.check("symmetry", symmetry, 1e-12);
  rec.check("voi_triangle_violations", double(violations), 0.0,
            "worst slack " + fmt(worst_slack) + " over " + fmt(draws) + " draws");
  rec.require_true("rajski_in_unit_interval", rajski_min >= -1e-12 && rajski_max <= 1 + 1e-12,
                   "range [" + fmt(rajski_min) + ", " + fmt(rajski_max) + "]");
  rec.results()["metric"] = {{"draws", draws},
                             {"dim", dim},
                             {"voi_worst_triangle_slack", worst_slack},
                             {"voi_triangle_violations", violations},
                             {"rajski_min", rajski_min},
                             {"rajski_max", rajski_max},
                             {"degenerate_pairs", degenerate},
                             {"symmetry_defect", symmetry}};
}

inline void ehrenfest_suite(const ExperimentConfig& cfg, Recorder& rec) {
  const auto ctx = context_from(cfg);
  const auto w = weights_from(cfg, ctx.dofs());
  const auto spec = potential_from(cfg, ctx.dofs());
  const auto ms = cfg.counts("spectral.m");
  const auto n = phase_dofs(cfg);
  const auto pgrid = phase_grid_from(cfg, n);
  const auto g = kvn_gaussian_from(cfg, n);
  const auto cgrid = config_grid_from(cfg, n);
  require(cgrid.boundary() == Boundary::Periodic || n == 1, "Dirichlet propagation supports one degree of freedom");
  require_time_stepping(cfg, "kvn");
  require_time_stepping(cfg, "qm");
  const double hbar = cfg.number("qm.hbar");
  require(std::isfinite(hbar) && hbar > 0, "qm.hbar must be positive");
  require(cfg.number("qm.sigma") > 0, "qm.sigma must be positive");

  auto table = ehrenfest_table();
  const auto first = ehrenfest_first_kind(spec, w, ms, ctx);
  for (const auto& r : first.rows)
    table.row({"first_kind", fmt(r.dof), fmt(r.m), "", fmt(r.dx_dt), fmt(r.p_over_m), fmt(r.dp_dt), fmt(r.minus_grad)});
  rec.check("first_kind_x", first.max_x_residual(), 1e-10);
  rec.check("first_kind_p", first.max_p_residual(), 1e-10);
  nlohmann::json fk = {{"max_x_residual", first.max_x_residual()},
                       {"max_p_residual", first.max_p_residual()},
                       {"exclusion_depth", first.exclusion_depth},
                       {"exact", first.exact}};
  if (!first.exact) {
    double gap = 0;
    for (const auto& r : first.rows)
      if (r.continuum_gap) gap = std::max(gap, *r.continuum_gap);
    fk["max_continuum_gap"] = gap;
  }
  rec.results()["first_kind"] = fk;

  const auto kvn = run_kvn(cfg, spec, pgrid, g, nullptr);
  const auto kvn_eh = ehrenfest_from_series(kvn.series, spec.mass);
  add_ehrenfest_rows(table, "kvn", kvn_eh);
  rec.check("kvn_ehrenfest_x", kvn_eh.max_x_residual, 1e-3);
  rec.check("kvn_ehrenfest_p", kvn_eh.max_p_residual, 1e-3);
  rec.results()["kvn"] = ehrenfest_json(kvn_eh);

  const auto h = build_hqm(spec, quantize_map(cgrid, hbar), potential_mode_from(cfg));
  const auto psi0 = qm_gaussian(cgrid, std::vector<double>(n, cfg.number("qm.x0")),
                                std::vector<double>(n, cfg.number("qm.p0")),
                                std::vector<double>(n, cfg.number("qm.sigma")), hbar);
  const auto qm = run_qm(cfg, h, psi0, nullptr);
  const auto qm_eh = ehrenfest_from_series(qm.series, spec.mass);
  add_ehrenfest_rows(table, "qm", qm_eh);
  rec.check("qm_ehrenfest_x", qm_eh.max_x_residual, 1e-4);
  rec.check("qm_ehrenfest_p", qm_eh.max_p_residual, 1e-4);
  rec.results()["qm"] = ehrenfest_json(qm_eh);

  rec.write("ehrenfest.csv", table);
}

}  // namespace detail

/// Executes one experiment and writes its outputs; the manifest is the
/// completion marker. Throws ValidationError, NumericalError or IoError.
inline RunReport run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.kind = cfg.kind;
  report.config = cfg.echo();
  report.output_dir = cfg.output_dir;
  detail::WarningCapture capture(report.warnings);

  OutputDirectory out(cfg.output_dir);
  detail::Recorder rec(report, out);
  switch (cfg.kind) {
    case ExperimentKind::VerifyAlgebra: detail::verify_algebra(cfg, rec); break;
    case ExperimentKind::Spectrum: detail::spectrum(cfg, rec); break;
    case ExperimentKind::EvolveKvN: detail::evolve_kvn_pipeline(cfg, rec); break;
    case ExperimentKind::EvolveQM: detail::evolve_qm_pipeline(cfg, rec); break;
    case ExperimentKind::QuantizeCompare: detail::quantize_compare(cfg, rec); break;
    case ExperimentKind::EntangleMetric: detail::entangle_metric(cfg, rec); break;
    case ExperimentKind::EhrenfestSuite: detail::ehrenfest_suite(cfg, rec); break;
  }

  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back(to_json(c));
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& e : report.outputs) outputs.push_back(OutputDirectory::entry_json(e));

  nlohmann::json body = {{"experiment", to_string(cfg.kind)},
                         {"version", report.version},
                         {"config", report.config},
                         {"checks", checks},
                         {"results", report.results},
                         {"warnings", report.warnings},
                         {"outputs", outputs},
                         {"passed", report.passed()}};
  report.results_digest = sha256(body.dump());
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json doc = body;
  doc["results_digest"] = report.results_digest;
  doc["wall_clock_seconds"] = report.wall_clock_seconds;
  doc["exit_code"] = report.exit_code();
  report.report_sha256 = out.write("report.json", doc.dump(2) + "\n").sha256;
  out.write_manifest({{"experiment", to_string(cfg.kind)},
                      {"version", report.version},
                      {"results_digest", report.results_digest}});
  return report;
}

}  // namespace omech::harness
