#pragma once

// Finite-dimensional representations of the canonical generators {X^i, P_i}
// and the commutator calculus built on them.
//
// No pair of finite matrices satisfies [X, P] = kappa * I (the trace of a
// commutator vanishes). In the ladder representation the failure is a single
// corner entry per tensor factor:
//
//   [X^i, P_i] = kappa * (I - N * Pi_top_i)
//
// Every identity below is therefore audited twice: on the full matrix, and on
// the principal block that drops the top `depth` levels of each factor.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "omech/errors.hpp"
#include "omech/operator.hpp"

namespace omech {

enum class Representation { Ladder, PositionGrid };

inline std::string to_string(Representation r) {
  return r == Representation::Ladder ? "ladder" : "position-grid";
}

struct ContextOptions {
  std::size_t dimension_budget = 4096;
  /// Half-width L of the PositionGrid interval [-L, L). Zero selects
  /// sqrt(pi * N * hbar / 2), which balances the position and momentum ranges.
  double grid_half_width = 0.0;
};

template <std::floating_point Real>
class BasicAlgebraContext;

namespace detail {
template <std::floating_point Real>
BasicAlgebraContext<Real> build_context(std::size_t n, std::size_t N, double hbar_eff, Representation rep,
                                        const ContextOptions& options);
}

template <std::floating_point Real>
class BasicAlgebraContext {
 public:
  using Operator = BasicOperator<Real>;
  using Scalar = std::complex<Real>;

  std::size_t dofs() const { return n_; }
  std::size_t factor_dim() const { return N_; }
  std::size_t dim() const { return dim_; }
  Real hbar() const { return hbar_; }
  /// kappa = i * hbar_eff: the only choice compatible with Hermitian X and P.
  Scalar kappa() const { return Scalar(0, hbar_); }
  Representation representation() const { return rep_; }
  const ContextOptions& options() const { return options_; }
  Real grid_half_width() const { return half_width_; }

  const Operator& X(std::size_t i) const { return X_.at(check_index(i)); }
  const Operator& P(std::size_t i) const { return P_.at(check_index(i)); }
  const Operator& identity() const { return identity_; }

  /// Lift a single-factor matrix onto factor i of the tensor product.
  ComplexMatrix<Real> lift(const ComplexMatrix<Real>& factor, std::size_t i) const {
    ComplexMatrix<Real> out = ComplexMatrix<Real>::Identity(1, 1);
    const auto eye = ComplexMatrix<Real>::Identity(Eigen::Index(N_), Eigen::Index(N_));
    for (std::size_t f = 0; f < n_; ++f) out = kron<Real>(out, f == i ? factor : ComplexMatrix<Real>(eye));
    return out;
  }

  /// Level of factor f in basis state `index` (factor 0 is the slowest digit).
  std::size_t level(std::size_t index, std::size_t f) const {
    std::size_t stride = 1;
    for (std::size_t g = n_; g-- > f + 1;) stride *= N_;
    return (index / stride) % N_;
  }

  /// Projector onto the highest retained level of factor i.
  Operator top_projector(std::size_t i) const {
    ComplexMatrix<Real> pi = ComplexMatrix<Real>::Zero(Eigen::Index(N_), Eigen::Index(N_));
    pi(Eigen::Index(N_ - 1), Eigen::Index(N_ - 1)) = Scalar(1);
    return Operator(lift(pi, check_index(i)), true);
  }

  /// Basis states whose every factor level lies below N - depth.
  std::vector<std::size_t> block_indices(std::size_t depth) const {
    std::vector<std::size_t> out;
    if (depth >= N_) return out;
    for (std::size_t k = 0; k < dim_; ++k) {
      bool keep = true;
      for (std::size_t f = 0; f < n_ && keep; ++f) keep = level(k, f) + depth < N_;
      if (keep) out.push_back(k);
    }
    return out;
  }

 private:
  template <std::floating_point R>
  friend BasicAlgebraContext<R> detail::build_context(std::size_t, std::size_t, double, Representation,
                                                      const ContextOptions&);

  std::size_t check_index(std::size_t i) const {
    if (i >= n_) throw ValidationError("degree-of-freedom index " + std::to_string(i) + " out of range");
    return i;
  }

  std::size_t n_ = 0;
  std::size_t N_ = 0;
  std::size_t dim_ = 0;
  Real hbar_ = 1;
  Real half_width_ = 0;
  Representation rep_ = Representation::Ladder;
  ContextOptions options_;
  std::vector<Operator> X_;
  std::vector<Operator> P_;
  Operator identity_;
};

using AlgebraContext = BasicAlgebraContext<double>;

namespace detail {

template <std::floating_point Real>
std::pair<ComplexMatrix<Real>, ComplexMatrix<Real>> ladder_pair(std::size_t N, Real hbar) {
  using C = std::complex<Real>;
  ComplexMatrix<Real> a = ComplexMatrix<Real>::Zero(Eigen::Index(N), Eigen::Index(N));
  for (std::size_t k = 1; k < N; ++k) a(Eigen::Index(k - 1), Eigen::Index(k)) = C(std::sqrt(Real(k)), 0);
  const Real s = std::sqrt(hbar / Real(2));
  ComplexMatrix<Real> adag = a.adjoint();
  ComplexMatrix<Real> x = s * (a + adag);
  ComplexMatrix<Real> p = C(0, s) * (adag - a);
  return {x, p};
}

// Periodic spectral differentiation on N equispaced points of [-L, L) with the
// Nyquist mode dropped: D is real antisymmetric, so P = -i hbar D is Hermitian.
template <std::floating_point Real>
std::pair<ComplexMatrix<Real>, ComplexMatrix<Real>> grid_pair(std::size_t N, Real hbar, Real L) {
  using C = std::complex<Real>;
  const Real pi = std::numbers::pi_v<Real>;
  const Real h = 2 * L / Real(N);
  ComplexMatrix<Real> x = ComplexMatrix<Real>::Zero(Eigen::Index(N), Eigen::Index(N));
  for (std::size_t j = 0; j < N; ++j) x(Eigen::Index(j), Eigen::Index(j)) = C(-L + Real(j) * h, 0);
  ComplexMatrix<Real> p = ComplexMatrix<Real>::Zero(Eigen::Index(N), Eigen::Index(N));
  const Real scale = pi / (2 * L);  // maps the 2*pi-periodic formula onto length 2L
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t l = 0; l < N; ++l) {
      if (j == l) continue;
      const long d = long(j) - long(l);
      Real entry;
      if (N % 2 == 0) {
        entry = Real(0.5) * ((d % 2 == 0) ? 1 : -1) / std::tan(pi * Real(d) / Real(N));
      } else {
        entry = Real(0.5) * ((d % 2 == 0) ? 1 : -1) / std::sin(pi * Real(d) / Real(N));
      }
      p(Eigen::Index(j), Eigen::Index(l)) = C(0, -hbar * 2 * scale * entry);
    }
  }
  return {x, p};
}

}  // namespace detail

template <std::floating_point Real>
BasicAlgebraContext<Real> detail::build_context(std::size_t n, std::size_t N, double hbar_eff, Representation rep,
                                                const ContextOptions& options) {
  detail::require(n >= 1, "need at least one degree of freedom");
  detail::require(N >= 2, "representation dimension N must be at least 2");
  detail::require(std::isfinite(hbar_eff) && hbar_eff > 0, "hbar_eff must be positive and finite");
  double total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= double(N);
  if (total > double(options.dimension_budget)) {
    throw ValidationError("dimension N^n = " + std::to_string(static_cast<long long>(total)) +
                          " exceeds the dimension budget " + std::to_string(options.dimension_budget));
  }

  BasicAlgebraContext<Real> ctx;
  ctx.n_ = n;
  ctx.N_ = N;
  ctx.dim_ = static_cast<std::size_t>(total);
  ctx.hbar_ = Real(hbar_eff);
  ctx.rep_ = rep;
  ctx.options_ = options;
  ctx.half_width_ = options.grid_half_width > 0
                        ? Real(options.grid_half_width)
                        : std::sqrt(std::numbers::pi_v<Real> * Real(N) * Real(hbar_eff) / 2);

  const auto [x, p] = rep == Representation::Ladder ? detail::ladder_pair<Real>(N, Real(hbar_eff))
                                                    : detail::grid_pair<Real>(N, Real(hbar_eff), ctx.half_width_);
  for (std::size_t i = 0; i < n; ++i) {
    ctx.X_.emplace_back(ctx.lift(x, i), true);
    ctx.P_.emplace_back(ctx.lift(p, i), true);
  }
  ctx.identity_ = BasicOperator<Real>::identity(ctx.dim_);
  return ctx;
}

/// Build the generators for n degrees of freedom, N levels each.
template <std::floating_point Real = double>
BasicAlgebraContext<Real> make_context(std::size_t n, std::size_t N, double hbar_eff, Representation rep,
                                       const ContextOptions& options = {}) {
  return detail::build_context<Real>(n, N, hbar_eff, rep, options);
}

// ---------------------------------------------------------------------------
// Potentials and the Hamiltonian

/// Separable polynomial potential V = sum_i sum_k a[i][k] (X^i)^k with flat
/// metric eta^{ij} = delta^{ij}.
struct PotentialSpec {
  static constexpr std::size_t kMaxDegree = 12;

  std::vector<std::vector<double>> coefficients;  // [dof][power]
  double mass = 1.0;

  static PotentialSpec free_particle(std::size_t n = 1, double mass = 1.0) {
    return {std::vector<std::vector<double>>(n), mass};
  }
  /// V = m omega^2 x^2 / 2 on every degree of freedom.
  static PotentialSpec harmonic(std::size_t n = 1, double omega = 1.0, double mass = 1.0) {
    return {std::vector<std::vector<double>>(n, {0.0, 0.0, 0.5 * mass * omega * omega}), mass};
  }
  /// V = g x^l on every degree of freedom.
  static PotentialSpec monomial(std::size_t l, double g, std::size_t n = 1, double mass = 1.0) {
    std::vector<double> c(l + 1, 0.0);
    c[l] = g;
    return {std::vector<std::vector<double>>(n, c), mass};
  }

  std::size_t dofs() const { return coefficients.size(); }

  /// Highest power with a nonzero coefficient (0 for a constant or empty potential).
  std::size_t degree() const {
    std::size_t k_max = 0;
    for (const auto& c : coefficients)
      for (std::size_t k = 0; k < c.size(); ++k)
        if (c[k] != 0.0) k_max = std::max(k_max, k);
    return k_max;
  }

  void validate() const {
    detail::require(std::isfinite(mass) && mass > 0, "mass must be positive");
    detail::require(degree() <= kMaxDegree, "potential degree " + std::to_string(degree()) +
                                                " exceeds the maximum " + std::to_string(kMaxDegree));
    for (const auto& c : coefficients)
      for (double a : c) detail::require(std::isfinite(a), "potential coefficients must be finite");
  }

  const std::vector<double>& dof_coefficients(std::size_t i) const {
    static const std::vector<double> empty;
    return i < coefficients.size() ? coefficients[i] : empty;
  }

  /// Coefficients of dV/dX^i.
  std::vector<double> derivative_coefficients(std::size_t i) const {
    const auto& c = dof_coefficients(i);
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(double(k) * c[k]);
    return d;
  }

  /// Single nonzero power l >= 1 on dof i, if the dof carries a monomial g x^l.
  std::optional<std::pair<std::size_t, double>> monomial_on(std::size_t i) const {
    const auto& c = dof_coefficients(i);
    std::optional<std::pair<std::size_t, double>> found;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] == 0.0) continue;
      if (k == 0 || found) return std::nullopt;
      found = std::make_pair(k, c[k]);
    }
    return found;
  }

  double value(std::size_t i, double x) const { return horner(dof_coefficients(i), x); }
  double gradient(std::size_t i, double x) const { return horner(derivative_coefficients(i), x); }

  static double horner(const std::vector<double>& c, double x) {
    double acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
};

namespace detail {
template <std::floating_point Real>
std::vector<Real> cast_coefficients(const std::vector<double>& c) {
  return std::vector<Real>(c.begin(), c.end());
}

template <std::floating_point Real>
void check_spec_fits(const PotentialSpec& spec, const BasicAlgebraContext<Real>& ctx) {
  spec.validate();
  detail::require(spec.dofs() <= ctx.dofs(), "potential has more degrees of freedom than the context");
}
}  // namespace detail

/// H = (1/2m) sum_i P_i P_i + V({X^i}), V evaluated as a matrix polynomial.
template <std::floating_point Real>
BasicOperator<Real> build_hamiltonian(const PotentialSpec& spec, const BasicAlgebraContext<Real>& ctx) {
  detail::check_spec_fits(spec, ctx);
  const auto d = Eigen::Index(ctx.dim());
  ComplexMatrix<Real> h = ComplexMatrix<Real>::Zero(d, d);
  const Real inv2m = Real(1) / (2 * Real(spec.mass));
  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    const auto& p = ctx.P(i).matrix();
    h += inv2m * (p * p);
    h += matrix_polynomial<Real>(ctx.X(i).matrix(), detail::cast_coefficients<Real>(spec.dof_coefficients(i)));
  }
  // Products of Hermitian factors pick up O(eps) skew parts; project them out.
  ComplexMatrix<Real> sym = Real(0.5) * (h + h.adjoint());
  return BasicOperator<Real>(std::move(sym), true);
}

/// Matrix of -dV/dX^i, the operator force.
template <std::floating_point Real>
BasicOperator<Real> force_operator(const PotentialSpec& spec, std::size_t i, const BasicAlgebraContext<Real>& ctx) {
  auto grad = detail::cast_coefficients<Real>(spec.derivative_coefficients(i));
  for (auto& g : grad) g = -g;
  return BasicOperator<Real>(matrix_polynomial<Real>(ctx.X(i).matrix(), grad));
}

// ---------------------------------------------------------------------------
// Noncommutative calculus

enum class Axis { X, P };

/// dF/dX^i = (1/kappa)[F, P_i];  dF/dP_i = (1/kappa)[X^i, F].
template <std::floating_point Real>
BasicOperator<Real> nc_partial_derivative(const BasicOperator<Real>& f, std::size_t i, Axis axis,
                                          const BasicAlgebraContext<Real>& ctx) {
  const auto inv_kappa = Real(1) / ctx.kappa();
  return axis == Axis::X ? inv_kappa * commutator(f, ctx.P(i)) : inv_kappa * commutator(ctx.X(i), f);
}

/// dF/dt = (1/kappa)[F, H].
template <std::floating_point Real>
BasicOperator<Real> nc_time_derivative(const BasicOperator<Real>& f, const BasicOperator<Real>& h,
                                       const BasicAlgebraContext<Real>& ctx) {
  check_same_dim(f, h);
  detail::require(f.dim() == ctx.dim(), "operator does not belong to this context");
  return (Real(1) / ctx.kappa()) * commutator(f, h);
}

/// Principal sub-matrix on the given basis states.
template <std::floating_point Real>
ComplexMatrix<Real> restrict_to(const ComplexMatrix<Real>& m, const std::vector<std::size_t>& idx) {
  const auto k = Eigen::Index(idx.size());
  ComplexMatrix<Real> out(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) out(r, c) = m(Eigen::Index(idx[r]), Eigen::Index(idx[c]));
  return out;
}

/// Defect-free principal block of F: every factor level below N - depth.
template <std::floating_point Real>
BasicOperator<Real> restrict_to_block(const BasicOperator<Real>& f, const BasicAlgebraContext<Real>& ctx,
                                      std::size_t depth) {
  detail::require(f.dim() == ctx.dim(), "operator does not belong to this context");
  const auto idx = ctx.block_indices(depth);
  detail::require(!idx.empty(), "exclusion depth leaves an empty block");
  ComplexMatrix<Real> sub = restrict_to<Real>(f.matrix(), idx);
  const bool herm = f.hermitian();
  return BasicOperator<Real>(std::move(sub), herm);
}

// ---------------------------------------------------------------------------
// Residual audits

struct IdentityResidual {
  std::string name;
  double full = 0;   // max-norm over all entries
  double block = 0;  // max-norm over the defect-excluded block
};

struct DefectReport {
  std::vector<IdentityResidual> residuals;
  std::size_t exclusion_depth = 0;
  /// Rank of the same-index CCR defect on one tensor factor.
  std::size_t defect_rank = 0;
  /// max |[X^i, P_i] - kappa I|, i.e. N * |kappa| for the ladder.
  double defect_magnitude = 0;
  /// Location (row, col) of the largest defect entry in the full space.
  std::pair<std::size_t, std::size_t> defect_location{0, 0};

  double max_block() const {
    double m = 0;
    for (const auto& r : residuals) m = std::max(m, r.block);
    return m;
  }
  double max_full() const {
    double m = 0;
    for (const auto& r : residuals) m = std::max(m, r.full);
    return m;
  }
  const IdentityResidual* find(const std::string& name) const {
    for (const auto& r : residuals)
      if (r.name == name) return &r;
    return nullptr;
  }
};

namespace detail {

template <std::floating_point Real>
IdentityResidual audit(std::string name, const ComplexMatrix<Real>& residual, const std::vector<std::size_t>& block) {
  IdentityResidual r;
  r.name = std::move(name);
  r.full = static_cast<double>(max_abs(residual));
  r.block = block.empty() ? 0.0 : static_cast<double>(max_abs(restrict_to<Real>(residual, block)));
  return r;
}

template <std::floating_point Real>
std::size_t numerical_rank(const ComplexMatrix<Real>& m) {
  if (m.size() == 0) return 0;
  const Real scale = max_abs(m);
  if (scale == Real(0)) return 0;
  Eigen::ColPivHouseholderQR<ComplexMatrix<Real>> qr(m);
  qr.setThreshold(Real(1e-10));
  return static_cast<std::size_t>(qr.rank());
}

template <std::floating_point Real>
void fill_defect(DefectReport& report, const BasicAlgebraContext<Real>& ctx) {
  // Single-factor context carries the per-factor structure.
  const auto one = make_context<Real>(1, ctx.factor_dim(), double(ctx.hbar()), ctx.representation(), ctx.options());
  ComplexMatrix<Real> d1 = commutator(one.X(0), one.P(0)).matrix() - one.kappa() * one.identity().matrix();
  report.defect_rank = numerical_rank<Real>(d1);
  ComplexMatrix<Real> d = commutator(ctx.X(0), ctx.P(0)).matrix() - ctx.kappa() * ctx.identity().matrix();
  Eigen::Index r = 0, c = 0;
  d.cwiseAbs().maxCoeff(&r, &c);
  report.defect_magnitude = static_cast<double>(std::abs(d(r, c)));
  report.defect_location = {std::size_t(r), std::size_t(c)};
}

}  // namespace detail

/// Residuals of the operator Hamilton equations and Newton's law:
///   R1 = (1/kappa)[X^i, H] - P_i / m
///   R2 = (1/kappa)[P_i, H] + dV/dX^i
///   R3 = m (1/kappa)^2 [[X^i, H], H] - F^i
/// The block drops the top max(K_max, 2) levels per factor unless `depth` is given.
///
/// The products are formed in extended precision: the identities are exact on
/// the block, and double rounding of the quartic entries at N = 64 would
/// otherwise dominate the truncation leakage this is meant to measure.
template <std::floating_point Real>
DefectReport dynamics_residuals(const PotentialSpec& spec, const BasicAlgebraContext<Real>& ctx,
                                std::optional<std::size_t> depth = std::nullopt) {
  using Wide = long double;
  detail::check_spec_fits(spec, ctx);
  const auto wide = make_context<Wide>(ctx.dofs(), ctx.factor_dim(), double(ctx.hbar()), ctx.representation(),
                                       ctx.options());
  const auto h = build_hamiltonian(spec, wide);
  const Wide m = Wide(spec.mass);
  const auto inv_kappa = Wide(1) / wide.kappa();

  DefectReport report;
  report.exclusion_depth = depth.value_or(std::max<std::size_t>(spec.degree(), 2));
  const auto block = wide.block_indices(report.exclusion_depth);

  for (std::size_t i = 0; i < wide.dofs(); ++i) {
    const auto& x = wide.X(i).matrix();
    const auto& p = wide.P(i).matrix();
    const ComplexMatrix<Wide> xh = inv_kappa * commutator(wide.X(i), h).matrix();
    const ComplexMatrix<Wide> force = force_operator(spec, i, wide).matrix();
    const ComplexMatrix<Wide> r1 = xh - p / m;
    const ComplexMatrix<Wide> r2 = inv_kappa * commutator(wide.P(i), h).matrix() - force;
    const ComplexMatrix<Wide> r3 = m * inv_kappa * (xh * h.matrix() - h.matrix() * xh) - force;
    const std::string tag = "(i=" + std::to_string(i) + ")";
    report.residuals.push_back(detail::audit<Wide>("hamilton_x" + tag, r1, block));
    report.residuals.push_back(detail::audit<Wide>("hamilton_p" + tag, r2, block));
    report.residuals.push_back(detail::audit<Wide>("newton" + tag, r3, block));
    (void)x;
  }
  detail::fill_defect(report, wide);
  return report;
}

/// Symplectic packaging V_i = (X^i, P_i): checks (1/kappa)[V_i^a, V_j^b] = omega^{ab} delta_ij I
/// with omega = [[0, 1], [-1, 0]]. Block depth 1 isolates the corner defect.
template <std::floating_point Real>
DefectReport verify_canonical_structure(const BasicAlgebraContext<Real>& ctx, std::size_t depth = 1) {
  DefectReport report;
  report.exclusion_depth = depth;
  const auto block = ctx.block_indices(depth);
  const auto inv_kappa = Real(1) / ctx.kappa();
  const int omega[2][2] = {{0, 1}, {-1, 0}};
  auto component = [&](std::size_t i, int a) -> const BasicOperator<Real>& { return a == 0 ? ctx.X(i) : ctx.P(i); };
  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    for (std::size_t j = 0; j < ctx.dofs(); ++j) {
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          ComplexMatrix<Real> r = inv_kappa * commutator(component(i, a), component(j, b)).matrix();
          if (i == j) r -= Real(omega[a][b]) * ctx.identity().matrix();
          const std::string name = "omega[" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "](i=" +
                                   std::to_string(i) + ",j=" + std::to_string(j) + ")";
          report.residuals.push_back(detail::audit<Real>(name, r, block));
        }
      }
    }
  }
  detail::fill_defect(report, ctx);
  return report;
}

/// Eigenvalue carried by basis mode m, for an operator that has the basis
/// vector e_m as an eigenvector (all CCR-derived operators in the ladder basis).
template <std::floating_point Real>
double mode_eigenvalue(const BasicOperator<Real>& f, std::size_t m, Real tolerance = Real(1e-12)) {
  if (m >= f.dim()) throw ValidationError("mode index " + std::to_string(m) + " out of range");
  const auto col = f.matrix().col(Eigen::Index(m));
  const Real scale = std::max(Real(1), max_abs(f.matrix()));
  Real off = 0;
  for (Eigen::Index r = 0; r < col.size(); ++r)
    if (r != Eigen::Index(m)) off = std::max(off, std::abs(col(r)));
  if (off > tolerance * scale) {
    throw NumericalError("basis mode " + std::to_string(m) + " is not an eigenvector (off-diagonal " +
                         std::to_string(double(off)) + ")");
  }
  return static_cast<double>(col(Eigen::Index(m)).real());
}

/// Positivity norm: with phi = sum_i k_i X^i and its involution chi = sum_i conj(k_i) P_i,
/// returns the eigenvalue of (1/kappa)[phi, chi] on mode m. Below the defect
/// levels this is sum_i |k_i|^2.
template <std::floating_point Real>
double involution_norm(const std::vector<std::complex<double>>& k, std::size_t m, const BasicAlgebraContext<Real>& ctx) {
  detail::require(k.size() == ctx.dofs(), "coefficient list length must equal the number of degrees of freedom");
  detail::require(std::any_of(k.begin(), k.end(), [](auto c) { return c != std::complex<double>(0); }),
                  "coefficients must not all vanish");
  if (m >= ctx.dim()) throw ValidationError("eigenvalue index " + std::to_string(m) + " out of range");
  const auto d = Eigen::Index(ctx.dim());
  ComplexMatrix<Real> phi = ComplexMatrix<Real>::Zero(d, d);
  ComplexMatrix<Real> chi = ComplexMatrix<Real>::Zero(d, d);
  for (std::size_t i = 0; i < ctx.dofs(); ++i) {
    const std::complex<Real> ki(Real(k[i].real()), Real(k[i].imag()));
    phi += ki * ctx.X(i).matrix();
    chi += std::conj(ki) * ctx.P(i).matrix();
  }
  const auto bracket = (Real(1) / ctx.kappa()) * commutator(BasicOperator<Real>(phi), BasicOperator<Real>(chi));
  return mode_eigenvalue(bracket, m);
}

}  // namespace omech
