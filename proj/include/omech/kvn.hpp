#pragma once

// Koopman-von Neumann dynamics on a phase-space grid: Poisson brackets,
// Liouville propagation and second-kind (state) expectations.
//
// Bracket order follows {f, g} = sum_i (df/dX_i dg/dP_i - df/dP_i dg/dX_i), and the
// wave function obeys dpsi/dt = {H, psi} = -sum_i (P_i/m) dpsi/dX_i + V_i'(X_i) dpsi/dP_i.

#include <cmath>
#include <cstdio>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "omech/algebra.hpp"
#include "omech/errors.hpp"
#include "omech/grid.hpp"

namespace omech {

struct KvNState {
  Field psi;
  double t = 0;
};

/// Validates finiteness and a positive norm on the grid.
inline void check_state(const UniformGrid& grid, const Field& psi, const char* who) {
  check_field(grid, psi, who);
  if (!psi.allFinite()) throw NumericalError(std::string(who) + ": state has non-finite amplitudes");
  if (!(l2_norm(grid, psi) > 0)) throw ValidationError(std::string(who) + ": state has zero norm");
}

/// Largest boundary amplitude relative to the peak, over every edge of every axis.
inline double boundary_ratio(const UniformGrid& grid, const Field& psi) {
  const double peak = max_abs(psi);
  if (peak == 0) return 0;
  double edge = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t d = 0; d < grid.rank(); ++d) {
      const auto j = grid.index_along(k, d);
      if (j == 0 || j + 1 == grid.axis(d).count) {
        edge = std::max(edge, std::abs(psi(Eigen::Index(k))));
        break;
      }
    }
  }
  return edge / peak;
}

inline constexpr double kBoundaryDecay = 1e-12;

inline void require_boundary_decay(const UniformGrid& grid, const Field& psi) {
  const double r = boundary_ratio(grid, psi);
  if (r > kBoundaryDecay) {
    char ratio[64];
    std::snprintf(ratio, sizeof ratio, "%.3g exceeds %.3g", r, kBoundaryDecay);
    throw ValidationError(std::string("initial state does not decay at the grid boundary: max|psi_edge|/max|psi| = ") +
                          ratio + "; enlarge the domain");
  }
}

/// Separable Gaussian psi = prod_i exp(-(x-x0)^2/(4 sx^2) - (p-p0)^2/(4 sp^2)), unit L2 norm.
/// |psi|^2 then has standard deviations (sx, sp) per axis.
struct PhaseGaussian {
  std::vector<double> x0, p0, sigma_x, sigma_p;
};

inline KvNState gaussian_state(const PhaseGrid& grid, const PhaseGaussian& g) {
  const std::size_t n = grid.dofs();
  detail::require(g.x0.size() == n && g.p0.size() == n && g.sigma_x.size() == n && g.sigma_p.size() == n,
                  "Gaussian parameters must have one entry per degree of freedom");
  for (std::size_t i = 0; i < n; ++i)
    detail::require(g.sigma_x[i] > 0 && g.sigma_p[i] > 0, "Gaussian widths must be positive");
  Field psi = sample(grid.grid(), [&](std::span<const double> c) {
    double e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = c[i] - g.x0[i], dp = c[n + i] - g.p0[i];
      e += dx * dx / (4 * g.sigma_x[i] * g.sigma_x[i]) + dp * dp / (4 * g.sigma_p[i] * g.sigma_p[i]);
    }
    return std::exp(-e);
  });
  psi /= l2_norm(grid.grid(), psi);
  return {std::move(psi), 0.0};
}

// ---------------------------------------------------------------------------
// Phase-space calculus

class PhaseSpace {
 public:
  explicit PhaseSpace(PhaseGrid grid) : grid_(std::move(grid)), diff_(grid_.grid()) {}

  const PhaseGrid& grid() const { return grid_; }

  Field d_dx(const Field& f, std::size_t i) const { return diff_.derivative(f, grid_.x_axis(i)); }
  Field d_dp(const Field& f, std::size_t i) const { return diff_.derivative(f, grid_.p_axis(i)); }

  Field coordinate(std::size_t i) const { return grid_.grid().coordinates(grid_.x_axis(i)); }
  Field momentum(std::size_t i) const { return grid_.grid().coordinates(grid_.p_axis(i)); }

  Field poisson_bracket(const Field& f, const Field& g) const {
    check_field(grid_.grid(), f, "poisson_bracket");
    check_field(grid_.grid(), g, "poisson_bracket");
    Field out = Field::Zero(f.size());
    for (std::size_t i = 0; i < grid_.dofs(); ++i) out += d_dx(f, i) * d_dp(g, i) - d_dp(f, i) * d_dx(g, i);
    return out;
  }

  Field potential(const PotentialSpec& spec) const {
    check_spec(spec);
    Field v = Field::Zero(Eigen::Index(grid_.size()));
    for (std::size_t i = 0; i < grid_.dofs(); ++i)
      v += coordinate(i).unaryExpr([&](std::complex<double> x) { return std::complex<double>(spec.value(i, x.real())); });
    return v;
  }

  /// dV/dX_i sampled on the grid.
  Field gradient(const PotentialSpec& spec, std::size_t i) const {
    check_spec(spec);
    return coordinate(i).unaryExpr(
        [&](std::complex<double> x) { return std::complex<double>(spec.gradient(i, x.real())); });
  }

  /// H_cl = sum_i P_i^2 / 2m + V.
  Field hamiltonian(const PotentialSpec& spec) const {
    Field h = potential(spec);
    for (std::size_t i = 0; i < grid_.dofs(); ++i) h += momentum(i).square() / (2 * spec.mass);
    return h;
  }

  /// {f, H_cl} with the Hamiltonian's derivatives taken analytically, so only f is
  /// differentiated on the grid.
  Field bracket_with_hamiltonian(const Field& f, const PotentialSpec& spec) const {
    check_field(grid_.grid(), f, "bracket_with_hamiltonian");
    Field out = Field::Zero(f.size());
    for (std::size_t i = 0; i < grid_.dofs(); ++i)
      out += d_dx(f, i) * momentum(i) / spec.mass - d_dp(f, i) * gradient(spec, i);
    return out;
  }

  /// df/dt = (explicit df/dt) + {f, H_cl}.
  Field total_time_derivative(const Field& f, const PotentialSpec& spec,
                              const std::optional<Field>& explicit_dt = std::nullopt) const {
    Field out = bracket_with_hamiltonian(f, spec);
    if (explicit_dt) {
      check_field(grid_.grid(), *explicit_dt, "total_time_derivative");
      out += *explicit_dt;
    }
    return out;
  }

 private:
  void check_spec(const PotentialSpec& spec) const {
    spec.validate();
    detail::require(spec.dofs() <= grid_.dofs(), "potential has more degrees of freedom than the grid");
  }

  PhaseGrid grid_;
  Differentiator diff_;
};

inline Field poisson_bracket(const Field& f, const Field& g, const PhaseGrid& grid) {
  return PhaseSpace(grid).poisson_bracket(f, g);
}

inline Field total_time_derivative(const Field& f, const PotentialSpec& spec, const PhaseGrid& grid,
                                   const std::optional<Field>& explicit_dt = std::nullopt) {
  return PhaseSpace(grid).total_time_derivative(f, spec, explicit_dt);
}

// ---------------------------------------------------------------------------
// Liouville propagation

struct KvNTrajectory {
  std::vector<KvNState> frames;
};

inline constexpr double kCflLimit = 0.5;

namespace detail {

class LiouvilleRhs {
 public:
  LiouvilleRhs(const PhaseSpace& space, const PotentialSpec& spec) : space_(space) {
    for (std::size_t i = 0; i < space.grid().dofs(); ++i) {
      x_velocity_.push_back(space.momentum(i) / spec.mass);
      p_velocity_.push_back(-space.gradient(spec, i));
    }
  }

  Field operator()(const Field& psi) const {
    Field out = Field::Zero(psi.size());
    for (std::size_t i = 0; i < x_velocity_.size(); ++i) {
      out -= x_velocity_[i] * space_.d_dx(psi, i);
      out -= p_velocity_[i] * space_.d_dp(psi, i);
    }
    return out;
  }

  /// Throws if |dt| * max|velocity| / spacing exceeds the limit on any axis.
  void check_cfl(double dt) const {
    const auto& g = space_.grid();
    for (std::size_t i = 0; i < x_velocity_.size(); ++i) {
      const std::pair<const Field*, std::size_t> axes[2] = {{&x_velocity_[i], g.x_axis(i)}, {&p_velocity_[i], g.p_axis(i)}};
      for (const auto& [vel, axis] : axes) {
        const double h = g.grid().axis(axis).spacing();
        const double courant = std::abs(dt) * max_abs(*vel) / h;
        if (courant > kCflLimit) {
          const std::string name = (axis < g.dofs() ? "X_" : "P_") + std::to_string(i + 1);
          throw NumericalError("CFL bound violated on axis " + name + ": dt*max|velocity|/spacing = " +
                               std::to_string(courant) + " > " + std::to_string(kCflLimit));
        }
      }
    }
  }

 private:
  const PhaseSpace& space_;
  std::vector<Field> x_velocity_;
  std::vector<Field> p_velocity_;
};

inline Field rk4_step(const LiouvilleRhs& rhs, const Field& psi, double dt) {
  const Field k1 = rhs(psi);
  const Field k2 = rhs(psi + (0.5 * dt) * k1);
  const Field k3 = rhs(psi + (0.5 * dt) * k2);
  const Field k4 = rhs(psi + dt * k3);
  return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// RK4 method-of-lines integration; `observe` sees the initial state and every
/// `stride`-th state after it, and the final state is returned.
inline KvNState evolve_kvn(const KvNState& psi0, const PotentialSpec& spec, double dt, std::size_t steps,
                           const PhaseSpace& space, std::size_t stride,
                           const std::function<void(const KvNState&)>& observe) {
  const auto& grid = space.grid().grid();
  check_state(grid, psi0.psi, "evolve_kvn");
  require_boundary_decay(grid, psi0.psi);
  detail::require(std::isfinite(dt), "time step must be finite");
  detail::require(stride >= 1, "trajectory stride must be at least 1");
  detail::LiouvilleRhs rhs(space, spec);
  rhs.check_cfl(dt);

  KvNState state = psi0;
  if (observe) observe(state);
  for (std::size_t s = 1; s <= steps; ++s) {
    if (dt != 0.0) state.psi = detail::rk4_step(rhs, state.psi, dt);
    state.t = psi0.t + double(s) * dt;
    if (!state.psi.allFinite()) {
      throw NumericalError("KvN amplitudes became non-finite at step " + std::to_string(s) + " (t = " +
                           std::to_string(state.t) + ")");
    }
    if (observe && (s % stride == 0 || s == steps)) observe(state);
  }
  return state;
}

inline KvNTrajectory evolve_kvn(const KvNState& psi0, const PotentialSpec& spec, double dt, std::size_t steps,
                                const PhaseGrid& grid, std::size_t stride = 1) {
  PhaseSpace space(grid);
  KvNTrajectory traj;
  evolve_kvn(psi0, spec, dt, steps, space, stride, [&](const KvNState& s) { traj.frames.push_back(s); });
  return traj;
}

// ---------------------------------------------------------------------------
// Second-kind expectations

struct MixedEnsemble {
  std::vector<std::pair<KvNState, double>> members;  // (state, probability)

  static MixedEnsemble pure(KvNState s) { return {{{std::move(s), 1.0}}}; }

  void validate() const {
    detail::require(!members.empty(), "ensemble is empty");
    double sum = 0;
    for (const auto& [s, p] : members) {
      detail::require(std::isfinite(p) && p >= 0, "ensemble probabilities must be nonnegative");
      sum += p;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "ensemble probabilities must sum to 1 (got " + std::to_string(sum) + ")");
  }
};

/// Multiplicative observables on phase space.
struct Observable {
  enum class Kind { Coordinate, Momentum, Potential, Hamiltonian, Custom };
  Kind kind = Kind::Coordinate;
  std::size_t dof = 0;
  Field custom;

  static Observable coordinate(std::size_t i = 0) { return {Kind::Coordinate, i, {}}; }
  static Observable momentum(std::size_t i = 0) { return {Kind::Momentum, i, {}}; }
  static Observable potential() { return {Kind::Potential, 0, {}}; }
  static Observable hamiltonian() { return {Kind::Hamiltonian, 0, {}}; }
  static Observable field(Field f) { return {Kind::Custom, 0, std::move(f)}; }
};

inline Field observable_field(const Observable& obs, const PhaseSpace& space, const PotentialSpec& spec) {
  switch (obs.kind) {
    case Observable::Kind::Coordinate: return space.coordinate(obs.dof);
    case Observable::Kind::Momentum: return space.momentum(obs.dof);
    case Observable::Kind::Potential: return space.potential(spec);
    case Observable::Kind::Hamiltonian: return space.hamiltonian(spec);
    case Observable::Kind::Custom:
      check_field(space.grid().grid(), obs.custom, "observable");
      return obs.custom;
  }
  return {};
}

inline constexpr double kNormDriftWarning = 1e-6;

/// <O> = integral psi* O psi / integral |psi|^2 for one state.
inline double state_expectation(const UniformGrid& grid, const Field& psi, const Field& o) {
  const double norm2 = psi.abs2().sum() * grid.cell_volume();
  if (!(norm2 > 0)) throw ValidationError("state has zero norm");
  if (std::abs(norm2 - 1.0) > kNormDriftWarning) {
    warn("state norm^2 = " + std::to_string(norm2) + " drifted from 1; renormalizing for the expectation");
  }
  return (psi.abs2() * o).sum().real() * grid.cell_volume() / norm2;
}

/// sum_j p_j <psi_j| O |psi_j>.
inline double second_kind_expectation(const MixedEnsemble& ens, const Observable& obs, const PhaseSpace& space,
                                      const PotentialSpec& spec = PotentialSpec{}) {
  ens.validate();
  const Field o = observable_field(obs, space, spec);
  double total = 0;
  for (const auto& [state, p] : ens.members) {
    check_state(space.grid().grid(), state.psi, "second_kind_expectation");
    total += p * state_expectation(space.grid().grid(), state.psi, o);
  }
  return total;
}

inline double second_kind_expectation(const MixedEnsemble& ens, const Observable& obs, const PhaseGrid& grid,
                                      const PotentialSpec& spec = PotentialSpec{}) {
  return second_kind_expectation(ens, obs, PhaseSpace(grid), spec);
}

// ---------------------------------------------------------------------------
// Observable series and the second-kind Ehrenfest check

struct ObservableSample {
  double t = 0;
  std::vector<double> x_mean, p_mean, grad_mean;  // per dof; grad is <dV/dX_i>
  double norm = 0;
  double energy = 0;
};

struct ObservableSeries {
  std::vector<ObservableSample> samples;
};

/// Precomputed multiplicative fields for repeated sampling.
class KvNObserver {
 public:
  KvNObserver(const PhaseSpace& space, const PotentialSpec& spec) : grid_(space.grid().grid()) {
    for (std::size_t i = 0; i < space.grid().dofs(); ++i) {
      x_.push_back(space.coordinate(i));
      p_.push_back(space.momentum(i));
      g_.push_back(space.gradient(spec, i));
    }
    h_ = space.hamiltonian(spec);
  }

  ObservableSample operator()(const KvNState& s) const {
    ObservableSample out;
    out.t = s.t;
    const Eigen::ArrayXd rho = s.psi.abs2();
    const double dv = grid_.cell_volume();
    const double norm2 = rho.sum() * dv;
    out.norm = std::sqrt(norm2);
    const auto mean = [&](const Field& o) { return (rho * o.real()).sum() * dv / norm2; };
    for (std::size_t i = 0; i < x_.size(); ++i) {
      out.x_mean.push_back(mean(x_[i]));
      out.p_mean.push_back(mean(p_[i]));
      out.grad_mean.push_back(mean(g_[i]));
    }
    out.energy = mean(h_);
    return out;
  }

 private:
  UniformGrid grid_;
  std::vector<Field> x_, p_, g_;
  Field h_;
};

struct EhrenfestRow {
  double t = 0;
  std::size_t dof = 0;
  double dx_dt = 0, p_over_m = 0, dp_dt = 0, minus_grad = 0;
};

struct EhrenfestReport {
  std::vector<EhrenfestRow> rows;
  double max_x_residual = 0;  // max |d<X>/dt - <P>/m|
  double max_p_residual = 0;  // max |d<P>/dt + <V'(X)>|
};

/// Differences of the sampled means at every interior sample: 4th-order centered
/// where two neighbours exist on each side, 4th-order one-sided next to the ends,
/// 2nd-order centered when fewer than 5 samples exist. Requires uniform spacing.
inline EhrenfestReport ehrenfest_from_series(const ObservableSeries& series, double mass) {
  const auto& s = series.samples;
  detail::require(s.size() >= 3, "Ehrenfest check needs at least 3 samples");
  const double dt = s[1].t - s[0].t;
  detail::require(dt != 0, "samples must be separated in time");
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (std::abs((s[k].t - s[k - 1].t) - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw ValidationError("Ehrenfest check needs uniformly spaced samples");
    }
  }
  EhrenfestReport report;
  const auto derivative = [&](std::size_t k, auto get) {
    if (s.size() < 5) return (get(s[k + 1]) - get(s[k - 1])) / (2 * dt);
    if (k >= 2 && k + 2 < s.size()) {
      return (get(s[k - 2]) - 8 * get(s[k - 1]) + 8 * get(s[k + 1]) - get(s[k + 2])) / (12 * dt);
    }
    if (k == 1) {
      return (-3 * get(s[0]) - 10 * get(s[1]) + 18 * get(s[2]) - 6 * get(s[3]) + get(s[4])) / (12 * dt);
    }
    return (3 * get(s[k + 1]) + 10 * get(s[k]) - 18 * get(s[k - 1]) + 6 * get(s[k - 2]) - get(s[k - 3])) / (12 * dt);
  };
  const std::size_t n = s.front().x_mean.size();
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      EhrenfestRow row;
      row.t = s[k].t;
      row.dof = i;
      row.dx_dt = derivative(k, [i](const ObservableSample& o) { return o.x_mean[i]; });
      row.dp_dt = derivative(k, [i](const ObservableSample& o) { return o.p_mean[i]; });
      row.p_over_m = s[k].p_mean[i] / mass;
      row.minus_grad = -s[k].grad_mean[i];
      report.max_x_residual = std::max(report.max_x_residual, std::abs(row.dx_dt - row.p_over_m));
      report.max_p_residual = std::max(report.max_p_residual, std::abs(row.dp_dt - row.minus_grad));
      report.rows.push_back(row);
    }
  }
  return report;
}

inline EhrenfestReport ehrenfest_second_kind(const KvNTrajectory& traj, const PotentialSpec& spec,
                                             const PhaseGrid& grid) {
  detail::require(traj.frames.size() >= 3, "Ehrenfest check needs at least 3 samples");
  PhaseSpace space(grid);
  KvNObserver observe(space, spec);
  ObservableSeries series;
  for (const auto& f : traj.frames) series.samples.push_back(observe(f));
  return ehrenfest_from_series(series, spec.mass);
}

}  // namespace omech
