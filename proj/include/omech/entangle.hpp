#pragma once

// Reduced densities over mode blocks, entanglement entropies and the
// information distances between blocks.
//
// Blocks are subsets of one N-dimensional mode space, not tensor factors, so the
// reduction is a principal sub-block of rho in a reference basis, renormalized
// to unit trace.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "omech/algebra.hpp"
#include "omech/errors.hpp"
#include "omech/operator.hpp"
#include "omech/parallel.hpp"
#include "omech/spectral.hpp"

namespace omech {

using IndexSet = std::vector<std::size_t>;

/// Source state for the entanglement analysis.
template <std::floating_point Real>
BasicOperator<Real> realize_density(const SpectralWeights& w, const BasicAlgebraContext<Real>& ctx) {
  return density_first_kind(w, ctx);
}

/// Orthonormal columns spanning the mode space.
struct ReferenceBasis {
  ComplexMatrix<double> vectors;

  static ReferenceBasis identity(std::size_t dim) {
    return {ComplexMatrix<double>::Identity(Eigen::Index(dim), Eigen::Index(dim))};
  }
  /// Eigenbasis of rho itself (the default).
  static ReferenceBasis of_density(const OperatorElement& rho) { return {eigensystem(rho).vectors}; }
  /// Eigenbasis of X^1, so blocks are position-ordered modes.
  static ReferenceBasis of_position(const AlgebraContext& ctx) { return {eigensystem(ctx.X(0)).vectors}; }

  std::size_t dim() const { return std::size_t(vectors.cols()); }
};

struct BlockPartition {
  std::vector<IndexSet> blocks;

  void validate(std::size_t dim) const {
    std::set<std::size_t> seen;
    for (const auto& b : blocks) {
      detail::require(!b.empty(), "partition blocks must be nonempty");
      for (std::size_t k : b) {
        detail::require(k < dim, "block index " + std::to_string(k) + " out of range");
        detail::require(seen.insert(k).second, "partition blocks must be disjoint (index " + std::to_string(k) + ")");
      }
    }
  }
};

inline constexpr double kDensityTolerance = 1e-8;
inline constexpr double kEmptyBlockTrace = 1e-12;

namespace detail {

inline void check_indices(const IndexSet& m, std::size_t dim) {
  require(!m.empty(), "block must be nonempty");
  std::set<std::size_t> seen;
  for (std::size_t k : m) {
    require(k < dim, "block index " + std::to_string(k) + " out of range");
    require(seen.insert(k).second, "block has repeated index " + std::to_string(k));
  }
}

inline void check_disjoint(const IndexSet& a, const IndexSet& b) {
  std::set<std::size_t> sa(a.begin(), a.end());
  for (std::size_t k : b)
    if (sa.count(k)) throw ValidationError("blocks must be disjoint (shared index " + std::to_string(k) + ")");
}

inline IndexSet join(const IndexSet& a, const IndexSet& b) {
  IndexSet u = a;
  u.insert(u.end(), b.begin(), b.end());
  return u;
}

inline ComplexMatrix<double> rotate(const OperatorElement& rho, const ReferenceBasis& basis) {
  require(basis.dim() == rho.dim() && std::size_t(basis.vectors.rows()) == rho.dim(),
          "reference basis dimension does not match the density");
  return basis.vectors.adjoint() * rho.matrix() * basis.vectors;
}

inline OperatorElement reduce_rotated(const ComplexMatrix<double>& rotated, const IndexSet& m) {
  check_indices(m, std::size_t(rotated.rows()));
  ComplexMatrix<double> sub = restrict_to<double>(rotated, m);
  const double tr = sub.trace().real();
  if (!(tr > kEmptyBlockTrace)) {
    throw NumericalError("block carries no weight (sub-block trace " + std::to_string(tr) + ")");
  }
  sub /= tr;
  sub = 0.5 * (sub + sub.adjoint()).eval();
  return OperatorElement(std::move(sub), true);
}

}  // namespace detail

/// rho_M: principal sub-block of U^dagger rho U on M, renormalized to unit trace.
inline OperatorElement reduce_block(const OperatorElement& rho, const IndexSet& m, const ReferenceBasis& basis) {
  return detail::reduce_rotated(detail::rotate(rho, basis), m);
}

inline OperatorElement reduce_block(const OperatorElement& rho, const IndexSet& m) {
  return reduce_block(rho, m, ReferenceBasis::of_density(rho));
}

/// -sum lambda ln lambda with 0 ln 0 = 0.
inline double entropy(const OperatorElement& rho_m) {
  const auto lambda = eigenvalues(rho_m);
  const double tr = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  if (lambda.front() < -kDensityTolerance) {
    throw NumericalError("density is not positive semidefinite (min eigenvalue " + std::to_string(lambda.front()) + ")");
  }
  if (std::abs(tr - 1.0) > kDensityTolerance) {
    throw NumericalError("density does not have unit trace (trace " + std::to_string(tr) + ")");
  }
  double s = 0;
  for (double l : lambda)
    if (l > 0) s -= l * std::log(l);
  return std::max(0.0, s);
}

struct MutualInformation {
  double s1 = 0, s2 = 0, s12 = 0;
  double value() const { return s1 + s2 - s12; }
};

inline MutualInformation mutual_information(const OperatorElement& rho, const IndexSet& m1, const IndexSet& m2,
                                            const ReferenceBasis& basis) {
  detail::check_disjoint(m1, m2);
  const auto rotated = detail::rotate(rho, basis);
  return {entropy(detail::reduce_rotated(rotated, m1)), entropy(detail::reduce_rotated(rotated, m2)),
          entropy(detail::reduce_rotated(rotated, detail::join(m1, m2)))};
}

struct BlockDistance {
  MutualInformation info;
  double voi = 0;     // S12 - I
  double rajski = 0;  // 1 - I / S12
  bool degenerate = false;  // S12 = 0: Rajski set to 0
};

inline constexpr double kDegenerateEntropy = 1e-14;

inline BlockDistance distances_from(const MutualInformation& info) {
  BlockDistance d;
  d.info = info;
  d.voi = info.s12 - info.value();
  if (info.s12 <= kDegenerateEntropy) {
    d.degenerate = true;
    d.rajski = 0;
  } else {
    d.rajski = 1 - info.value() / info.s12;
  }
  return d;
}

inline BlockDistance block_distances(const OperatorElement& rho, const IndexSet& m1, const IndexSet& m2,
                                     const ReferenceBasis& basis) {
  return distances_from(mutual_information(rho, m1, m2, basis));
}

struct TriangleAudit {
  double worst_slack = std::numeric_limits<double>::infinity();  // min over triples of d_ij + d_jk - d_ik
  std::size_t triples = 0;
  std::size_t violations = 0;  // slack < -tolerance
};

struct MetricReport {
  std::size_t blocks = 0;
  Eigen::MatrixXd voi;
  Eigen::MatrixXd rajski;
  Eigen::MatrixXd s_joint;
  Eigen::MatrixXd mutual_info;
  std::vector<double> block_entropy;
  std::vector<std::pair<std::size_t, std::size_t>> degenerate_pairs;

  double symmetry_defect = 0;  // max |D - D^T| over both matrices
  double min_distance = 0;     // min off-diagonal entry over both matrices
  double rajski_min = 0, rajski_max = 0;
  TriangleAudit voi_triangle;
  TriangleAudit rajski_triangle;
};

inline constexpr double kTriangleTolerance = 1e-9;

inline TriangleAudit audit_triangle(const Eigen::MatrixXd& d, double tolerance = kTriangleTolerance) {
  TriangleAudit a;
  const auto n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        const double slack = d(i, j) + d(j, k) - d(i, k);
        a.worst_slack = std::min(a.worst_slack, slack);
        ++a.triples;
        if (slack < -tolerance) ++a.violations;
      }
  if (a.triples == 0) a.worst_slack = 0;
  return a;
}

/// Pairwise distances between all blocks plus the metric-axiom audit.
inline MetricReport build_metric_space(const OperatorElement& rho, const BlockPartition& partition,
                                       const ReferenceBasis& basis) {
  const std::size_t n = partition.blocks.size();
  detail::require(n >= 2, "metric space needs at least 2 blocks");
  partition.validate(rho.dim());
  const auto rotated = detail::rotate(rho, basis);

  MetricReport r;
  r.blocks = n;
  r.block_entropy.resize(n);
  parallel_for(n, [&](std::size_t k) { r.block_entropy[k] = entropy(detail::reduce_rotated(rotated, partition.blocks[k])); });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<BlockDistance> dist(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    MutualInformation info{r.block_entropy[i], r.block_entropy[j],
                           entropy(detail::reduce_rotated(rotated, detail::join(partition.blocks[i], partition.blocks[j])))};
    dist[k] = distances_from(info);
  });

  const auto N = Eigen::Index(n);
  r.voi = Eigen::MatrixXd::Zero(N, N);
  r.rajski = Eigen::MatrixXd::Zero(N, N);
  r.s_joint = Eigen::MatrixXd::Zero(N, N);
  r.mutual_info = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const auto a = Eigen::Index(i), b = Eigen::Index(j);
    r.voi(a, b) = r.voi(b, a) = dist[k].voi;
    r.rajski(a, b) = r.rajski(b, a) = dist[k].rajski;
    r.s_joint(a, b) = r.s_joint(b, a) = dist[k].info.s12;
    r.mutual_info(a, b) = r.mutual_info(b, a) = dist[k].info.value();
    if (dist[k].degenerate) r.degenerate_pairs.emplace_back(i, j);
  }

  r.symmetry_defect = std::max((r.voi - r.voi.transpose()).cwiseAbs().maxCoeff(),
                               (r.rajski - r.rajski.transpose()).cwiseAbs().maxCoeff());
  r.min_distance = std::numeric_limits<double>::infinity();
  r.rajski_min = std::numeric_limits<double>::infinity();
  r.rajski_max = -std::numeric_limits<double>::infinity();
  for (const auto& [i, j] : pairs) {
    const auto a = Eigen::Index(i), b = Eigen::Index(j);
    r.min_distance = std::min({r.min_distance, r.voi(a, b), r.rajski(a, b)});
    r.rajski_min = std::min(r.rajski_min, r.rajski(a, b));
    r.rajski_max = std::max(r.rajski_max, r.rajski(a, b));
  }
  r.voi_triangle = audit_triangle(r.voi);
  r.rajski_triangle = audit_triangle(r.rajski);
  return r;
}

inline MetricReport build_metric_space(const OperatorElement& rho, const BlockPartition& partition) {
  return build_metric_space(rho, partition, ReferenceBasis::of_density(rho));
}

// ---------------------------------------------------------------------------
// Seeded draws for property checks

/// rho = G G^dagger / tr with G complex Gaussian: full-rank, PSD, unit trace.
inline OperatorElement random_density(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto d = Eigen::Index(dim);
  ComplexMatrix<double> a(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) a(r, c) = {g(rng), g(rng)};
  ComplexMatrix<double> rho = a * a.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return OperatorElement(std::move(rho), true);
}

/// Random partition of a shuffled index set into `blocks` nonempty blocks covering all indices.
inline BlockPartition random_partition(std::size_t dim, std::size_t blocks, std::mt19937_64& rng) {
  detail::require(blocks >= 1 && blocks <= dim, "cannot split " + std::to_string(dim) + " modes into " +
                                                    std::to_string(blocks) + " nonempty blocks");
  IndexSet idx(dim);
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  std::shuffle(idx.begin(), idx.end(), rng);
  // Cut points: blocks-1 distinct positions in 1..dim-1.
  IndexSet cuts(dim - 1);
  std::iota(cuts.begin(), cuts.end(), std::size_t(1));
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(blocks - 1);
  std::sort(cuts.begin(), cuts.end());
  BlockPartition p;
  std::size_t start = 0;
  for (std::size_t c = 0; c <= cuts.size(); ++c) {
    const std::size_t end = c < cuts.size() ? cuts[c] : dim;
    p.blocks.emplace_back(idx.begin() + long(start), idx.begin() + long(end));
    start = end;
  }
  return p;
}

}  // namespace omech
