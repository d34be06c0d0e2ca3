#pragma once

// Eigenvalue projection, first-kind density and expectations, and the
// large-N continuum profile of the generator spectra.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "omech/algebra.hpp"
#include "omech/errors.hpp"
#include "omech/operator.hpp"

namespace omech {

struct EigenSystem {
  std::vector<double> values;      // ascending
  ComplexMatrix<double> vectors;   // orthonormal columns, largest component real-positive
};

namespace detail {
template <std::floating_point Real>
void require_hermitian(const ComplexMatrix<Real>& m, const char* who) {
  if (m.rows() != m.cols()) throw ValidationError(std::string(who) + ": matrix must be square");
  const auto defect = hermiticity_defect(m);
  if (!(defect <= Real(kHermitianTolerance))) {
    throw ValidationError(std::string(who) + ": operator is not Hermitian (defect " +
                          std::to_string(double(defect)) + ")");
  }
}

inline void fix_phases(ComplexMatrix<double>& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index best = 0;
    double mag = -1;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      // Strict comparison with a relative guard keeps the first of near-equal components.
      const double a = std::abs(v(r, c));
      if (a > mag * (1 + 1e-12)) {
        mag = a;
        best = r;
      }
    }
    if (mag > 0) v.col(c) *= std::conj(v(best, c)) / mag;
  }
}
}  // namespace detail

/// Ascending spectrum and phase-fixed eigenvectors of a Hermitian operator.
template <std::floating_point Real>
EigenSystem eigensystem(const BasicOperator<Real>& f) {
  detail::require_hermitian(f.matrix(), "eigensystem");
  const ComplexMatrix<double> m = f.matrix().template cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<double>> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensystem: Hermitian eigensolver did not converge");
  const auto n = m.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ev(a) < ev(b); });
  EigenSystem out;
  out.values.reserve(order.size());
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values.push_back(ev(order[std::size_t(k)]));
    out.vectors.col(k) = solver.eigenvectors().col(order[std::size_t(k)]);
  }
  detail::fix_phases(out.vectors);
  return out;
}

/// Ascending eigenvalues only.
template <std::floating_point Real>
std::vector<double> eigenvalues(const BasicOperator<Real>& f) {
  detail::require_hermitian(f.matrix(), "eigenvalues");
  const ComplexMatrix<double> m = f.matrix().template cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<double>> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: Hermitian eigensolver did not converge");
  std::vector<double> v(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::stable_sort(v.begin(), v.end());
  return v;
}

/// Pr_m: the m-th eigenvalue in ascending order.
template <std::floating_point Real>
double project_eigenvalue(const BasicOperator<Real>& f, std::size_t m) {
  if (m >= f.dim()) {
    throw ValidationError("eigenvalue index " + std::to_string(m) + " out of range for dimension " +
                          std::to_string(f.dim()));
  }
  return eigenvalues(f)[m];
}

/// Per-degree-of-freedom weights w_i >= 0 with sum 1.
class SpectralWeights {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit SpectralWeights(std::vector<double> w) : w_(std::move(w)) {
    detail::require(!w_.empty(), "weights must not be empty");
    double sum = 0;
    for (double x : w_) {
      detail::require(std::isfinite(x) && x >= 0, "weights must be finite and nonnegative");
      sum += x;
    }
    detail::require(std::abs(sum - 1.0) <= kSumTolerance, "weights must sum to 1 (got " + std::to_string(sum) + ")");
  }

  static SpectralWeights uniform(std::size_t n) {
    detail::require(n >= 1, "weights must not be empty");
    return SpectralWeights(std::vector<double>(n, 1.0 / double(n)));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_.at(i); }
  const std::vector<double>& values() const { return w_; }

 private:
  std::vector<double> w_;
};

/// rho = sum_i w_i A_i A_i^dagger / tr(A_i A_i^dagger), with A_i = (X^i + i P_i)/sqrt(2).
template <std::floating_point Real>
BasicOperator<Real> density_first_kind(const SpectralWeights& w, const BasicAlgebraContext<Real>& ctx) {
  detail::require(w.size() == ctx.dofs(), "weights length must equal the number of degrees of freedom");
  const auto d = Eigen::Index(ctx.dim());
  ComplexMatrix<Real> rho = ComplexMatrix<Real>::Zero(d, d);
  const Real root_half = std::sqrt(Real(0.5));
  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    if (w[i] == 0) continue;
    const ComplexMatrix<Real> a = root_half * (ctx.X(i).matrix() + std::complex<Real>(0, 1) * ctx.P(i).matrix());
    const ComplexMatrix<Real> aa = a * a.adjoint();
    const Real tr = aa.trace().real();
    if (!(tr > 0)) throw NumericalError("density factor has vanishing trace");
    rho += (Real(w[i]) / tr) * aa;
  }
  ComplexMatrix<Real> sym = Real(0.5) * (rho + rho.adjoint());
  return BasicOperator<Real>(std::move(sym), true);
}

enum class Generator { X, P };

inline std::string to_string(Generator g) { return g == Generator::X ? "X" : "P"; }

/// How the trace over the pre-Hilbert basis is read.
///   PerIndex:   only the pair (i, i) contributes, giving w_i * lambda_m.
///   LiteralSum: every pair contributes; the weights sum out and the result is lambda_m.
enum class TraceReading { PerIndex, LiteralSum };

/// Which side of the trace pairing F sits on. Position form: (w/kappa)[X^i, F P_i];
/// momentum form: (w/kappa)[X^i F, P_i].
enum class PairingForm { Position, Momentum };

/// Operator whose m-th eigenvalue is the first-kind expectation of F.
///
/// With [X^i, P_i] = kappa taken as the abstract relation, the pairings expand to
///   position: (w/kappa)[X^i, F] P_i + w F
///   momentum: (w/kappa) X^i [F, P_i] + w F
/// which is what is built here; expanding on the truncated matrices instead
/// would smear the corner defect through F.
template <std::floating_point Real>
BasicOperator<Real> first_kind_operator(const BasicOperator<Real>& f, std::size_t i, const SpectralWeights& w,
                                        const BasicAlgebraContext<Real>& ctx, PairingForm form,
                                        TraceReading reading = TraceReading::PerIndex) {
  detail::require(w.size() == ctx.dofs(), "weights length must equal the number of degrees of freedom");
  detail::require(i < ctx.dofs(), "degree-of-freedom index out of range");
  detail::require(f.dim() == ctx.dim(), "operator does not belong to this context");
  const auto inv_kappa = Real(1) / ctx.kappa();
  const auto term = [&](std::size_t j) {
    const Real wj = Real(w[j]);
    ComplexMatrix<Real> t;
    if (form == PairingForm::Position) {
      t = (wj * inv_kappa) * (commutator(ctx.X(j), f).matrix() * ctx.P(j).matrix());
    } else {
      t = (wj * inv_kappa) * (ctx.X(j).matrix() * commutator(f, ctx.P(j)).matrix());
    }
    return ComplexMatrix<Real>(t + wj * f.matrix());
  };
  ComplexMatrix<Real> total = term(i);
  if (reading == TraceReading::LiteralSum) {
    for (std::size_t j = 0; j < ctx.dofs(); ++j)
      if (j != i) total += term(j);
  }
  return BasicOperator<Real>(std::move(total));
}

/// Hermitian part check and projection; mixed products are not Hermitian in general.
template <std::floating_point Real>
double project_first_kind(const BasicOperator<Real>& t, std::size_t m) {
  if (hermiticity_defect(t.matrix()) > Real(1e-10)) {
    throw ValidationError("first-kind expectation is only defined here for generator-type operators "
                          "(pairing produced a non-Hermitian matrix)");
  }
  ComplexMatrix<Real> sym = Real(0.5) * (t.matrix() + t.matrix().adjoint());
  return project_eigenvalue(BasicOperator<Real>(std::move(sym), true), m);
}

/// <X^i>_m or <P_i>_m; with the per-index reading this is w_i * lambda_m.
template <std::floating_point Real>
double first_kind_expectation(Generator gen, std::size_t i, std::size_t m, const SpectralWeights& w,
                              const BasicAlgebraContext<Real>& ctx,
                              TraceReading reading = TraceReading::PerIndex) {
  detail::require(i < ctx.dofs(), "degree-of-freedom index out of range");
  if (m >= ctx.dim()) throw ValidationError("eigenvalue index " + std::to_string(m) + " out of range");
  const auto& f = gen == Generator::X ? ctx.X(i) : ctx.P(i);
  const auto form = gen == Generator::X ? PairingForm::Position : PairingForm::Momentum;
  return project_first_kind(first_kind_operator(f, i, w, ctx, form, reading), m);
}

// ---------------------------------------------------------------------------
// Continuum profile

struct PhaseProfile {
  std::size_t N = 0;
  Generator generator = Generator::X;
  std::size_t dof = 0;
  std::vector<double> x;       // (m + 1) / N, in (0, 1]
  std::vector<double> values;  // w_i * lambda_m / N, non-decreasing
  double alpha = 0;            // max |value|
};

struct ContinuumReport {
  std::vector<PhaseProfile> profiles;
  /// Sup-norm distance between consecutive profiles (size = profiles - 1).
  std::vector<double> cauchy;
};

/// Scaled sorted spectrum as a function of the eigenvalue fraction.
inline PhaseProfile profile_from_spectrum(std::vector<double> lambda, double weight, Generator gen = Generator::X,
                                          std::size_t dof = 0) {
  detail::require(!lambda.empty(), "empty spectrum");
  std::stable_sort(lambda.begin(), lambda.end());
  PhaseProfile p;
  p.N = lambda.size();
  p.generator = gen;
  p.dof = dof;
  const double n = double(p.N);
  for (std::size_t m = 0; m < p.N; ++m) {
    p.x.push_back(double(m + 1) / n);
    p.values.push_back(weight * lambda[m] / n);
    p.alpha = std::max(p.alpha, std::abs(p.values.back()));
  }
  return p;
}

/// Piecewise-linear interpolation of a profile, clamped at the ends.
inline double interpolate(const PhaseProfile& p, double x) {
  if (x <= p.x.front()) return p.values.front();
  if (x >= p.x.back()) return p.values.back();
  const auto it = std::upper_bound(p.x.begin(), p.x.end(), x);
  const auto k = std::size_t(it - p.x.begin());
  const double t = (x - p.x[k - 1]) / (p.x[k] - p.x[k - 1]);
  return (1 - t) * p.values[k - 1] + t * p.values[k];
}

/// Sup-norm distance of two profiles on the finer profile's sample points.
inline double profile_distance(const PhaseProfile& coarse, const PhaseProfile& fine) {
  double d = 0;
  for (std::size_t k = 0; k < fine.x.size(); ++k) d = std::max(d, std::abs(fine.values[k] - interpolate(coarse, fine.x[k])));
  return d;
}

/// Profiles of generator `gen` on dof i for each N (deterministic family given by `rep`).
inline ContinuumReport continuum_profile(Generator gen, std::size_t i, const SpectralWeights& w,
                                         const std::vector<std::size_t>& N_list, double hbar_eff,
                                         Representation rep = Representation::Ladder) {
  detail::require(!N_list.empty(), "N_list must not be empty");
  detail::require(std::is_sorted(N_list.begin(), N_list.end()), "N_list must be ascending");
  detail::require(i < w.size(), "degree-of-freedom index out of range");
  ContinuumReport report;
  for (std::size_t N : N_list) {
    // One factor suffices: the lifted generator's spectrum is the factor spectrum repeated.
    const auto ctx = make_context(1, N, hbar_eff, rep);
    const auto& f = gen == Generator::X ? ctx.X(0) : ctx.P(0);
    report.profiles.push_back(profile_from_spectrum(eigenvalues(f), w[i], gen, i));
  }
  for (std::size_t k = 1; k < report.profiles.size(); ++k)
    report.cauchy.push_back(profile_distance(report.profiles[k - 1], report.profiles[k]));
  return report;
}

// ---------------------------------------------------------------------------
// First-kind Ehrenfest checks

struct FirstKindEhrenfestRow {
  std::size_t dof = 0;
  std::size_t m = 0;
  double dx_dt = 0;        // Pr_m of the paired time derivative of X^i
  double p_over_m = 0;     // w_i lambda_m(P_i) / m
  double dp_dt = 0;        // Pr_m of the paired time derivative of P_i
  double minus_grad = 0;   // -<dV/dX^i>_m
  double x_residual() const { return std::abs(dx_dt - p_over_m); }
  double p_residual() const { return std::abs(dp_dt - minus_grad); }

  // Monomial potentials g X^l only.
  std::optional<double> newton_rhs;       // -g l <X^{l-1}>_m
  std::optional<double> classical_rhs;    // -g l <X>_m^{l-1}
  std::optional<double> continuum_gap;    // |<X^{l-1}>/N - (<X>/N)^{l-1}|
};

struct FirstKindEhrenfestReport {
  std::size_t exclusion_depth = 0;
  std::vector<FirstKindEhrenfestRow> rows;
  std::optional<std::size_t> monomial_degree;
  /// True when the Newton form holds without statistical corrections (degree <= 2).
  bool exact = true;
  double max_x_residual() const {
    double r = 0;
    for (const auto& row : rows) r = std::max(r, row.x_residual());
    return r;
  }
  double max_p_residual() const {
    double r = 0;
    for (const auto& row : rows) r = std::max(r, row.p_residual());
    return r;
  }
};

/// Both sides of the first-kind Ehrenfest relations, each projected on the
/// defect-free block (depth max(K, 2) + 2: the pairing adds one X and one P).
template <std::floating_point Real>
FirstKindEhrenfestReport ehrenfest_first_kind(const PotentialSpec& spec, const SpectralWeights& w,
                                              const std::vector<std::size_t>& m_list,
                                              const BasicAlgebraContext<Real>& ctx) {
  detail::check_spec_fits(spec, ctx);
  detail::require(w.size() == ctx.dofs(), "weights length must equal the number of degrees of freedom");
  FirstKindEhrenfestReport report;
  report.exclusion_depth = std::max<std::size_t>(spec.degree(), 2) + 2;
  const auto block = ctx.block_indices(report.exclusion_depth);
  detail::require(!block.empty(), "representation too small for the exclusion depth");
  for (std::size_t m : m_list) {
    if (m >= block.size()) {
      throw ValidationError("eigenvalue index " + std::to_string(m) + " exceeds the defect-free block size " +
                            std::to_string(block.size()));
    }
  }

  const auto h = build_hamiltonian(spec, ctx);
  const Real mass = Real(spec.mass);
  const auto proj = [&](const BasicOperator<Real>& t, std::size_t m) {
    ComplexMatrix<Real> sub = restrict_to<Real>(t.matrix(), block);
    sub = Real(0.5) * (sub + sub.adjoint()).eval();
    return project_eigenvalue(BasicOperator<Real>(std::move(sub), true), m);
  };

  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    const auto xdot = nc_time_derivative(ctx.X(i), h, ctx);
    const auto pdot = nc_time_derivative(ctx.P(i), h, ctx);
    const auto lhs_x = first_kind_operator(xdot, i, w, ctx, PairingForm::Momentum);
    const auto lhs_p = first_kind_operator(pdot, i, w, ctx, PairingForm::Position);
    const auto rhs_x = (Real(w[i]) / mass) * ctx.P(i);
    const auto rhs_p = Real(w[i]) * force_operator(spec, i, ctx);

    const auto mono = spec.monomial_on(i);
    if (mono && i == 0) report.monomial_degree = mono->first;
    if (mono && mono->first > 2) report.exact = false;
    if (!mono && spec.degree() > 2) report.exact = false;

    for (std::size_t m : m_list) {
      FirstKindEhrenfestRow row;
      row.dof = i;
      row.m = m;
      row.dx_dt = proj(lhs_x, m);
      row.p_over_m = proj(rhs_x, m);
      row.dp_dt = proj(lhs_p, m);
      row.minus_grad = proj(rhs_p, m);
      if (mono) {
        const auto [l, g] = *mono;
        const Real wi = Real(w[i]);
        std::vector<Real> power(l, Real(0));
        power[l - 1] = Real(1);
        const BasicOperator<Real> x_pow(matrix_polynomial<Real>(ctx.X(i).matrix(), power));
        const double moment = proj(wi * x_pow, m);
        const double mean = proj(wi * ctx.X(i), m);
        const double n_scale = double(ctx.factor_dim());
        row.newton_rhs = -g * double(l) * moment;
        row.classical_rhs = -g * double(l) * std::pow(mean, double(l - 1));
        row.continuum_gap = std::abs(moment / n_scale - std::pow(mean / n_scale, double(l - 1)));
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dequantization compatibility

struct CompatRow {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t m = 0;
  double value = 0;     // <(1/kappa)[X^i, P_j]>_m read on basis mode m
  double weighted = 0;  // w_i * value
  double expected = 0;  // delta_ij
  bool defect = false;  // mode sits on the truncation corner of factor i
};

struct CompatReport {
  std::vector<CompatRow> rows;
  /// Worst |value - delta_ij| over rows not on the defect.
  double max_residual = 0;
};

/// Checks <(1/kappa)[X^i, P_j]>_m = delta_ij mode by mode. Modes on the truncation
/// corner carry 1 - N; they are reported and excluded from the residual.
template <std::floating_point Real>
CompatReport dequantization_compat_check(const SpectralWeights& w, const BasicAlgebraContext<Real>& ctx,
                                         std::optional<std::vector<std::size_t>> modes = std::nullopt) {
  detail::require(w.size() == ctx.dofs(), "weights length must equal the number of degrees of freedom");
  std::vector<std::size_t> ms;
  if (modes) {
    ms = *modes;
  } else {
    ms.resize(ctx.dim());
    std::iota(ms.begin(), ms.end(), std::size_t(0));
  }
  CompatReport report;
  const auto inv_kappa = Real(1) / ctx.kappa();
  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    for (std::size_t j = 0; j < ctx.dofs(); ++j) {
      const auto bracket = inv_kappa * commutator(ctx.X(i), ctx.P(j));
      for (std::size_t m : ms) {
        CompatRow row;
        row.i = i;
        row.j = j;
        row.m = m;
        row.value = mode_eigenvalue(bracket, m);
        row.weighted = w[i] * row.value;
        row.expected = i == j ? 1.0 : 0.0;
        row.defect = i == j && ctx.level(m, i) == ctx.factor_dim() - 1;
        if (!row.defect) report.max_residual = std::max(report.max_residual, std::abs(row.value - row.expected));
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

}  // namespace omech
