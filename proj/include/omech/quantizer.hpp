#pragma once

// The quantization map on grid functions, the quantum Hamiltonian with its
// shifted potential, Schrodinger propagation, and the KvN/QM comparison.
//
// With kappa~ = i hbar, the bracket operators act on phase-space functions as
//   kappa~ {P_i, .} = -kappa~ d/dX^i      kappa~ {X^i, .} = kappa~ d/dP_i
// Quantization keeps X^i and kappa~ {P_i, .}; the P_i multiplication is dropped.

#include <Eigen/Dense>
#include <Eigen/LU>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "omech/algebra.hpp"
#include "omech/errors.hpp"
#include "omech/grid.hpp"
#include "omech/kvn.hpp"
#include "omech/spectral.hpp"

namespace omech {

// ---------------------------------------------------------------------------
// Shifted potential

/// The coordinate-gradient term sum_i X^i dV/dX^i: a_k -> k a_k.
inline PotentialSpec coordinate_gradient_term(const PotentialSpec& v) {
  PotentialSpec out = v;
  for (auto& c : out.coefficients)
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= double(k);
  return out;
}

/// V~ = -V + sum_i X^i dV/dX^i, i.e. a_k -> (k - 1) a_k. Quadratics are fixed points.
inline PotentialSpec shifted_potential(const PotentialSpec& v) {
  v.validate();
  PotentialSpec out = v;
  for (auto& c : out.coefficients)
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= double(k) - 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Quantized operators

/// Observable algebra after quantization: position multiplication and the
/// derivative momentum. There is deliberately no momentum-multiplication member.
class QuantizedOperators {
 public:
  QuantizedOperators(ConfigGrid grid, double hbar_eff)
      : grid_(std::move(grid)), hbar_(hbar_eff), diff_(std::make_shared<Differentiator>(grid_.grid())) {
    detail::require(std::isfinite(hbar_eff) && hbar_eff > 0, "hbar_eff must be positive and finite");
  }

  const ConfigGrid& grid() const { return grid_; }
  double hbar() const { return hbar_; }
  std::complex<double> kappa() const { return {0.0, hbar_}; }
  const Differentiator& differentiator() const { return *diff_; }

  Field coordinate(std::size_t i) const { return grid_.grid().coordinates(check(i)); }

  /// X^i psi.
  Field position(const Field& psi, std::size_t i) const {
    check_field(grid_.grid(), psi, "position");
    return coordinate(i) * psi;
  }

  /// kappa~ {P_i, psi} = -i hbar d psi / dX^i.
  Field momentum(const Field& psi, std::size_t i) const {
    return -kappa() * diff_->derivative(psi, check(i));
  }

  /// -(hbar^2 / 2m) Laplacian psi.
  Field kinetic(const Field& psi, double mass) const {
    std::vector<std::size_t> axes(grid_.dofs());
    for (std::size_t d = 0; d < axes.size(); ++d) axes[d] = d;
    return (-hbar_ * hbar_ / (2 * mass)) * diff_->laplacian(psi, axes);
  }

 private:
  std::size_t check(std::size_t i) const {
    detail::require(i < grid_.dofs(), "degree-of-freedom index out of range");
    return i;
  }

  ConfigGrid grid_;
  double hbar_;
  std::shared_ptr<Differentiator> diff_;
};

inline QuantizedOperators quantize_map(const ConfigGrid& grid, double hbar_eff) {
  return QuantizedOperators(grid, hbar_eff);
}

/// Dense matrix of a linear grid operator, column by column.
template <class Apply>
ComplexMatrix<double> dense_matrix(std::size_t size, Apply&& apply) {
  const auto n = static_cast<Eigen::Index>(size);
  ComplexMatrix<double> m(n, n);
  Field e = Field::Zero(Eigen::Index(size));
  for (std::size_t c = 0; c < size; ++c) {
    e(Eigen::Index(c)) = 1.0;
    const Field col = apply(e);
    m.col(Eigen::Index(c)) = col.matrix();
    e(Eigen::Index(c)) = 0.0;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Calops relations on phase space

struct CalopsRelation {
  std::string name;
  double residual = 0;  // interior max |lhs psi - rhs psi|
};

struct CalopsReport {
  std::vector<CalopsRelation> relations;
  std::size_t fields = 0;
  double max_residual() const {
    double r = 0;
    for (const auto& c : relations) r = std::max(r, c.residual);
    return r;
  }
};

/// Random sum of localized complex Gaussians, decaying to roundoff at the edges.
inline Field smooth_test_field(const UniformGrid& grid, std::mt19937_64& rng, std::size_t bumps = 3) {
  std::vector<double> half(grid.rank()), mid(grid.rank());
  for (std::size_t d = 0; d < grid.rank(); ++d) {
    half[d] = 0.5 * grid.axis(d).length();
    mid[d] = 0.5 * (grid.axis(d).min + grid.axis(d).max);
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> width(0.02, 0.035);  // fraction of the span; edges stay below 1e-14
  struct Bump {
    std::vector<double> c, s;
    std::complex<double> a;
  };
  std::vector<Bump> bs;
  for (std::size_t b = 0; b < bumps; ++b) {
    Bump bump;
    for (std::size_t d = 0; d < grid.rank(); ++d) {
      bump.c.push_back(mid[d] + 0.3 * half[d] * unit(rng));
      bump.s.push_back(width(rng) * grid.axis(d).length());
    }
    bump.a = {unit(rng), unit(rng)};
    bs.push_back(std::move(bump));
  }
  return sample(grid, [&](std::span<const double> x) {
    std::complex<double> v = 0;
    for (const auto& b : bs) {
      double e = 0;
      for (std::size_t d = 0; d < x.size(); ++d) e += (x[d] - b.c[d]) * (x[d] - b.c[d]) / (2 * b.s[d] * b.s[d]);
      v += b.a * std::exp(-e);
    }
    return v;
  });
}

inline double interior_max(const Field& f, const std::vector<bool>& mask) {
  double m = 0;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) m = std::max(m, std::abs(f(Eigen::Index(k))));
  return m;
}

inline constexpr double kInteriorMargin = 0.1;

/// The six commutation relations among X, P, kappa~{X,.} and kappa~{P,.} on phase-space fields.
inline CalopsReport calops_check(const PhaseGrid& grid, double hbar_eff, std::uint64_t seed = 0,
                                 std::size_t fields = 4) {
  detail::require(hbar_eff > 0, "hbar_eff must be positive");
  for (const auto& a : grid.grid().axes())
    detail::require(a.boundary == Boundary::Periodic, "calops check needs a periodic grid");
  const PhaseSpace space(grid);
  const std::complex<double> kt(0.0, hbar_eff);
  const std::size_t n = grid.dofs();
  const auto mask = grid.grid().interior_mask(kInteriorMargin);
  std::mt19937_64 rng(seed);

  std::vector<Field> X, P;
  for (std::size_t i = 0; i < n; ++i) {
    X.push_back(space.coordinate(i));
    P.push_back(space.momentum(i));
  }
  const auto bx = [&](const Field& f, std::size_t i) -> Field { return kt * space.d_dp(f, i); };   // kappa~{X^i, .}
  const auto bp = [&](const Field& f, std::size_t i) -> Field { return -kt * space.d_dx(f, i); };  // kappa~{P_i, .}

  CalopsReport report;
  report.fields = fields;
  double r[6] = {0, 0, 0, 0, 0, 0};
  for (std::size_t f = 0; f < fields; ++f) {
    const Field psi = smooth_test_field(grid.grid(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double delta = i == j ? 1.0 : 0.0;
        // [X^i, P_j] = 0
        r[0] = std::max(r[0], interior_max(X[i] * (P[j] * psi) - P[j] * (X[i] * psi), mask));
        // [X^i, kappa~{P_j,.}] = kappa~ delta
        r[1] = std::max(r[1], interior_max(X[i] * bp(psi, j) - bp(X[i] * psi, j) - kt * delta * psi, mask));
        // [kappa~{X^i,.}, kappa~{P_j,.}] = 0
        r[2] = std::max(r[2], interior_max(bx(bp(psi, j), i) - bp(bx(psi, i), j), mask));
        // [kappa~{X^i,.}, P_j] = kappa~ delta
        r[3] = std::max(r[3], interior_max(bx(P[j] * psi, i) - P[j] * bx(psi, i) - kt * delta * psi, mask));
        // [X^i, kappa~{X^j,.}] = 0
        r[4] = std::max(r[4], interior_max(X[i] * bx(psi, j) - bx(X[i] * psi, j), mask));
        // [P_i, kappa~{P_j,.}] = 0
        r[5] = std::max(r[5], interior_max(P[i] * bp(psi, j) - bp(P[i] * psi, j), mask));
      }
    }
  }
  const char* names[6] = {"[X,P]=0", "[X,k{P,.}]=k", "[k{X,.},k{P,.}]=0", "[k{X,.},P]=k", "[X,k{X,.}]=0",
                          "[P,k{P,.}]=0"};
  for (int k = 0; k < 6; ++k) report.relations.push_back({names[k], r[k]});
  return report;
}

// ---------------------------------------------------------------------------
// Quantum Hamiltonian

enum class PotentialMode { Shifted, Textbook };

/// H_qm = -(hbar^2 / 2m) Laplacian + V~(X), or + V(X) in textbook mode.
class GridHamiltonian {
 public:
  GridHamiltonian(const PotentialSpec& spec, QuantizedOperators ops, PotentialMode mode)
      : ops_(std::move(ops)), original_(spec), mode_(mode) {
    spec.validate();
    detail::require(spec.dofs() <= ops_.grid().dofs(), "potential has more degrees of freedom than the grid");
    effective_ = mode == PotentialMode::Shifted ? shifted_potential(spec) : spec;
    potential_ = Field::Zero(Eigen::Index(ops_.grid().size()));
    for (std::size_t i = 0; i < ops_.grid().dofs(); ++i) {
      const Field x = ops_.coordinate(i);
      potential_ += x.unaryExpr([&](std::complex<double> c) { return std::complex<double>(effective_.value(i, c.real())); });
      gradients_.push_back(
          x.unaryExpr([&](std::complex<double> c) { return std::complex<double>(effective_.gradient(i, c.real())); }));
    }
  }

  const QuantizedOperators& operators() const { return ops_; }
  const PotentialSpec& potential_spec() const { return effective_; }
  const PotentialSpec& source_potential() const { return original_; }
  PotentialMode mode() const { return mode_; }
  double mass() const { return original_.mass; }
  const Field& potential() const { return potential_; }
  /// dV_eff/dX^i on the grid.
  const Field& gradient(std::size_t i) const { return gradients_.at(i); }

  Field apply(const Field& psi) const { return ops_.kinetic(psi, mass()) + potential_ * psi; }

  /// Dense matrix, symmetrized; only for modest grid sizes.
  ComplexMatrix<double> dense() const {
    detail::require(ops_.grid().size() <= 4096, "dense Hamiltonian limited to 4096 grid points");
    ComplexMatrix<double> h = dense_matrix(ops_.grid().size(), [&](const Field& e) { return apply(e); });
    return 0.5 * (h + h.adjoint());
  }

  std::vector<double> spectrum() const { return eigenvalues(OperatorElement(dense(), true)); }

 private:
  QuantizedOperators ops_;
  PotentialSpec original_;
  PotentialSpec effective_;
  PotentialMode mode_;
  Field potential_;
  std::vector<Field> gradients_;
};

inline GridHamiltonian build_hqm(const PotentialSpec& spec, const QuantizedOperators& ops,
                                 PotentialMode mode = PotentialMode::Shifted) {
  return GridHamiltonian(spec, ops, mode);
}

// ---------------------------------------------------------------------------
// Schrodinger propagation

struct QMState {
  Field psi;
  double t = 0;
};

/// psi = prod_i exp(-(x - x0)^2 / (4 sigma^2) + i p0 x / hbar), unit norm; |psi|^2 has std sigma.
inline QMState qm_gaussian(const ConfigGrid& grid, const std::vector<double>& x0, const std::vector<double>& p0,
                           const std::vector<double>& sigma, double hbar_eff) {
  const std::size_t n = grid.dofs();
  detail::require(x0.size() == n && p0.size() == n && sigma.size() == n,
                  "Gaussian parameters must have one entry per degree of freedom");
  Field psi = sample(grid.grid(), [&](std::span<const double> x) {
    std::complex<double> e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      detail::require(sigma[i] > 0, "Gaussian widths must be positive");
      const double d = x[i] - x0[i];
      e += std::complex<double>(-d * d / (4 * sigma[i] * sigma[i]), p0[i] * x[i] / hbar_eff);
    }
    return std::exp(e);
  });
  psi /= l2_norm(grid.grid(), psi);
  return {std::move(psi), 0.0};
}

struct QMSample {
  double t = 0;
  std::vector<double> x_mean, p_mean, grad_mean;
  double norm = 0;
  double energy = 0;
};

struct QMTrajectory {
  std::vector<QMState> frames;
};

/// Moments of a state under H.
inline QMSample observe_qm(const QMState& s, const GridHamiltonian& h) {
  const auto& ops = h.operators();
  const auto& grid = ops.grid().grid();
  const double dv = grid.cell_volume();
  const Eigen::ArrayXd rho = s.psi.abs2();
  const double norm2 = rho.sum() * dv;
  QMSample out;
  out.t = s.t;
  out.norm = std::sqrt(norm2);
  const auto inner = [&](const Field& o_psi) { return (s.psi.conjugate() * o_psi).sum().real() * dv / norm2; };
  for (std::size_t i = 0; i < ops.grid().dofs(); ++i) {
    out.x_mean.push_back((rho * ops.coordinate(i).real()).sum() * dv / norm2);
    out.p_mean.push_back(inner(ops.momentum(s.psi, i)));
    out.grad_mean.push_back((rho * h.gradient(i).real()).sum() * dv / norm2);
  }
  out.energy = inner(h.apply(s.psi));
  return out;
}

namespace detail {

/// Fourth-order (Yoshida) composition of three Strang steps with weights
/// w1, w0, w1; adjacent potential half-steps are merged, so a step costs three
/// FFT round trips. Strang alone leaves an O(dt^2) oscillation in <H>.
class SplitStep {
 public:
  SplitStep(const GridHamiltonian& h, double dt) : h_(h) {
    const auto& ops = h.operators();
    const double hbar = ops.hbar();
    const double cbrt2 = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - cbrt2), w0 = -cbrt2 / (2.0 - cbrt2);
    const auto k = ops.differentiator().wavenumber_fields();
    Field k2 = Field::Zero(Eigen::Index(ops.grid().size()));
    for (const auto& kd : k) k2 += kd * kd;
    const auto kinetic = [&](double tau) -> Field {
      return (std::complex<double>(0, -hbar * tau / (2 * h.mass())) * k2).exp();
    };
    const auto potential = [&](double tau) -> Field { return (std::complex<double>(0, -tau / hbar) * h.potential()).exp(); };
    kinetic_outer_ = kinetic(w1 * dt);
    kinetic_inner_ = kinetic(w0 * dt);
    potential_edge_ = potential(0.5 * w1 * dt);
    potential_join_ = potential(0.5 * (w1 + w0) * dt);
  }

  Field operator()(const Field& psi) const {
    const auto& diff = h_.operators().differentiator();
    Field out = potential_edge_ * psi;
    out = potential_join_ * diff.fourier_multiplier(out, kinetic_outer_);
    out = potential_join_ * diff.fourier_multiplier(out, kinetic_inner_);
    return potential_edge_ * diff.fourier_multiplier(out, kinetic_outer_);
  }

 private:
  const GridHamiltonian& h_;
  Field kinetic_outer_, kinetic_inner_;
  Field potential_edge_, potential_join_;
};

class CrankNicolson {
 public:
  CrankNicolson(const GridHamiltonian& h, double dt) {
    detail::require(h.operators().grid().dofs() == 1, "Crank-Nicolson propagation is implemented for one dimension");
    const ComplexMatrix<double> H = h.dense();
    const auto n = H.rows();
    const std::complex<double> a(0, dt / (2 * h.operators().hbar()));
    const ComplexMatrix<double> eye = ComplexMatrix<double>::Identity(n, n);
    explicit_ = eye - a * H;
    lu_.compute(eye + a * H);
  }

  Field operator()(const Field& psi) const {
    const Eigen::VectorXcd rhs = explicit_ * psi.matrix();
    return lu_.solve(rhs).array();
  }

 private:
  ComplexMatrix<double> explicit_;
  Eigen::PartialPivLU<ComplexMatrix<double>> lu_;
};

}  // namespace detail

/// i hbar dpsi/dt = H_qm psi: fourth-order split-step on periodic grids, Crank-Nicolson
/// on Dirichlet grids. `observe` sees the initial state and every stride-th state.
inline QMState evolve_schrodinger(const QMState& psi0, const GridHamiltonian& h, double dt, std::size_t steps,
                                  std::size_t stride, const std::function<void(const QMState&)>& observe) {
  const auto& grid = h.operators().grid();
  check_state(grid.grid(), psi0.psi, "evolve_schrodinger");
  detail::require(std::isfinite(dt), "time step must be finite");
  detail::require(stride >= 1, "trajectory stride must be at least 1");
  if (grid.boundary() == Boundary::Periodic) require_boundary_decay(grid.grid(), psi0.psi);

  std::function<Field(const Field&)> step;
  if (dt != 0.0) {
    if (grid.boundary() == Boundary::Periodic) {
      step = detail::SplitStep(h, dt);
    } else {
      step = detail::CrankNicolson(h, dt);
    }
  }
  QMState state = psi0;
  if (observe) observe(state);
  for (std::size_t s = 1; s <= steps; ++s) {
    if (step) state.psi = step(state.psi);
    state.t = psi0.t + double(s) * dt;
    if (!state.psi.allFinite()) {
      throw NumericalError("Schrodinger amplitudes became non-finite at step " + std::to_string(s));
    }
    if (observe && (s % stride == 0 || s == steps)) observe(state);
  }
  return state;
}

inline QMTrajectory evolve_schrodinger(const QMState& psi0, const GridHamiltonian& h, double dt, std::size_t steps,
                                       std::size_t stride = 1) {
  QMTrajectory traj;
  evolve_schrodinger(psi0, h, dt, steps, stride, [&](const QMState& s) { traj.frames.push_back(s); });
  return traj;
}

// ---------------------------------------------------------------------------
// Heisenberg residuals

enum class QuantumObservable { Position, Momentum };

struct HeisenbergReport {
  QuantumObservable observable = QuantumObservable::Position;
  std::size_t dof = 0;
  /// Interior max |(1/kappa~)[F, H] psi - rhs psi| over the test fields.
  double operator_residual = 0;
  /// |d<F>/dt - <rhs>| from a centered difference over +-dt propagation.
  double finite_time_residual = 0;
};

/// Checks dF/dt = (1/kappa~)[F, H_qm] with rhs = momentum/m for F = X^i and
/// rhs = -dV_eff/dX^i for F = momentum.
inline HeisenbergReport heisenberg_residual(QuantumObservable f, std::size_t i, const GridHamiltonian& h, double dt,
                                            std::uint64_t seed = 0, std::size_t fields = 4) {
  const auto& ops = h.operators();
  const auto& grid = ops.grid().grid();
  detail::require(i < ops.grid().dofs(), "degree-of-freedom index out of range");
  detail::require(dt > 0, "finite-time check needs dt > 0");
  const auto mask = grid.interior_mask(kInteriorMargin);
  const std::complex<double> inv_kt = 1.0 / ops.kappa();
  const auto F = [&](const Field& psi) {
    return f == QuantumObservable::Position ? ops.position(psi, i) : ops.momentum(psi, i);
  };
  const auto rhs = [&](const Field& psi) -> Field {
    return f == QuantumObservable::Position ? Field(ops.momentum(psi, i) / h.mass()) : Field(-h.gradient(i) * psi);
  };

  HeisenbergReport report;
  report.observable = f;
  report.dof = i;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < fields; ++k) {
    const Field psi = smooth_test_field(grid, rng);
    const Field lhs = inv_kt * (F(h.apply(psi)) - h.apply(F(psi)));
    report.operator_residual = std::max(report.operator_residual, interior_max(lhs - rhs(psi), mask));
  }

  // d<F>/dt from short propagation of a normalized smooth state.
  Field psi = smooth_test_field(grid, rng);
  psi /= l2_norm(grid, psi);
  const QMState s0{psi, 0.0};
  const auto expect = [&](const Field& p, const Field& op_p) {
    return (p.conjugate() * op_p).sum().real() * grid.cell_volume() / (p.abs2().sum() * grid.cell_volume());
  };
  const QMState fwd = evolve_schrodinger(s0, h, dt, 1, 1, nullptr);
  const QMState bwd = evolve_schrodinger(s0, h, -dt, 1, 1, nullptr);
  const double deriv = (expect(fwd.psi, F(fwd.psi)) - expect(bwd.psi, F(bwd.psi))) / (2 * dt);
  report.finite_time_residual = std::abs(deriv - expect(psi, rhs(psi)));
  return report;
}

// ---------------------------------------------------------------------------
// KvN vs QM

struct InitialMoments {
  double x0 = 0;
  double p0 = 0;
  double sigma_x = 1;  // position spread; the QM packet is minimal, sigma_p = hbar / (2 sigma_x)
};

struct ComparisonResolution {
  double kvn_half_width = 10;  // phase grid [-L, L]^2
  std::size_t kvn_points = 256;
  double qm_half_width = 12;   // configuration grid [-L, L]
  std::size_t qm_points = 512;
  std::size_t steps = 4096;
  std::size_t stride = 64;
};

struct ComparisonRow {
  double t = 0, x_kvn = 0, x_qm = 0, p_kvn = 0, p_qm = 0, abs_gap_x = 0, abs_gap_p = 0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double max_gap_x = 0;
  double max_gap_p = 0;
  /// Both dynamics follow the classical means exactly only for degree <= 2.
  bool exact = true;
};

/// Matched Gaussians evolved under KvN and Schrodinger dynamics over [0, T].
inline ComparisonReport compare_kvn_qm(const PotentialSpec& spec, const InitialMoments& m, double T,
                                       const ComparisonResolution& res, double hbar_eff = 1.0,
                                       PotentialMode mode = PotentialMode::Shifted) {
  spec.validate();
  detail::require(spec.dofs() <= 1, "KvN/QM comparison is one-dimensional");
  detail::require(res.steps >= 1 && res.stride >= 1, "comparison needs positive steps and stride");
  detail::require(T > 0, "comparison horizon must be positive");
  const double dt = T / double(res.steps);
  const double sigma_p = hbar_eff / (2 * m.sigma_x);

  const auto pgrid = make_phase_grid({{-res.kvn_half_width, res.kvn_half_width}},
                                     {{-res.kvn_half_width, res.kvn_half_width}}, {{res.kvn_points, res.kvn_points}});
  const PhaseSpace space(pgrid);
  const KvNObserver kvn_obs(space, spec);
  std::vector<ObservableSample> kvn;
  evolve_kvn(gaussian_state(pgrid, {{m.x0}, {m.p0}, {m.sigma_x}, {sigma_p}}), spec, dt, res.steps, space, res.stride,
             [&](const KvNState& s) { kvn.push_back(kvn_obs(s)); });

  const ConfigGrid cgrid({{-res.qm_half_width, res.qm_half_width}}, res.qm_points, Boundary::Periodic);
  const auto h = build_hqm(spec, quantize_map(cgrid, hbar_eff), mode);
  std::vector<QMSample> qm;
  evolve_schrodinger(qm_gaussian(cgrid, {m.x0}, {m.p0}, {m.sigma_x}, hbar_eff), h, dt, res.steps, res.stride,
                     [&](const QMState& s) { qm.push_back(observe_qm(s, h)); });

  ComparisonReport report;
  report.exact = spec.degree() <= 2;
  for (std::size_t k = 0; k < std::min(kvn.size(), qm.size()); ++k) {
    ComparisonRow row;
    row.t = kvn[k].t;
    row.x_kvn = kvn[k].x_mean[0];
    row.p_kvn = kvn[k].p_mean[0];
    row.x_qm = qm[k].x_mean[0];
    row.p_qm = qm[k].p_mean[0];
    row.abs_gap_x = std::abs(row.x_kvn - row.x_qm);
    row.abs_gap_p = std::abs(row.p_kvn - row.p_qm);
    report.max_gap_x = std::max(report.max_gap_x, row.abs_gap_x);
    report.max_gap_p = std::max(report.max_gap_p, row.abs_gap_p);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace omech
