#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "omech/errors.hpp"

namespace omech {

template <std::floating_point Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

/// Largest absolute entry, the norm every residual in this library is quoted in.
template <class Derived>
auto max_abs(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (m.size() == 0) return Real(0);
  return m.cwiseAbs().maxCoeff();
}

/// Relative Hermiticity defect ||F - F^dagger||_max / max(||F||_max, 1).
template <class Derived>
auto hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Real scale = std::max(Real(1), max_abs(m));
  return max_abs(m - m.adjoint()) / scale;
}

inline constexpr double kHermitianTolerance = 1e-12;

/// A generic algebra element: a dense complex matrix plus a Hermiticity hint.
///
/// The hint is only ever set where Hermiticity is known structurally, and it is
/// validated on construction so downstream code can rely on it.
template <std::floating_point Real>
class BasicOperator {
 public:
  using Scalar = std::complex<Real>;
  using Matrix = ComplexMatrix<Real>;

  BasicOperator() = default;

  explicit BasicOperator(Matrix entries, bool hermitian = false)
      : entries_(std::move(entries)), hermitian_(hermitian) {
    detail::require(entries_.rows() == entries_.cols(), "operator matrix must be square");
    if (hermitian_ && hermiticity_defect(entries_) > Real(kHermitianTolerance)) {
      throw ValidationError("operator flagged Hermitian fails the Hermiticity check (defect " +
                            std::to_string(static_cast<double>(hermiticity_defect(entries_))) + ")");
    }
  }

  static BasicOperator identity(std::size_t dim) {
    return BasicOperator(Matrix::Identity(Eigen::Index(dim), Eigen::Index(dim)), true);
  }
  static BasicOperator zero(std::size_t dim) {
    return BasicOperator(Matrix::Zero(Eigen::Index(dim), Eigen::Index(dim)), true);
  }

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  bool hermitian() const { return hermitian_; }
  Scalar operator()(std::size_t r, std::size_t c) const { return entries_(Eigen::Index(r), Eigen::Index(c)); }

  BasicOperator adjoint() const { return BasicOperator(entries_.adjoint(), hermitian_); }

  friend BasicOperator operator+(const BasicOperator& a, const BasicOperator& b) {
    check_same_dim(a, b);
    return BasicOperator(a.entries_ + b.entries_, a.hermitian_ && b.hermitian_);
  }
  friend BasicOperator operator-(const BasicOperator& a, const BasicOperator& b) {
    check_same_dim(a, b);
    return BasicOperator(a.entries_ - b.entries_, a.hermitian_ && b.hermitian_);
  }
  friend BasicOperator operator*(const BasicOperator& a, const BasicOperator& b) {
    check_same_dim(a, b);
    return BasicOperator(a.entries_ * b.entries_);
  }
  friend BasicOperator operator*(Scalar s, const BasicOperator& a) {
    return BasicOperator(s * a.entries_, a.hermitian_ && s.imag() == Real(0));
  }
  friend BasicOperator operator*(Real s, const BasicOperator& a) {
    return BasicOperator(s * a.entries_, a.hermitian_);
  }

  friend void check_same_dim(const BasicOperator& a, const BasicOperator& b) {
    if (a.dim() != b.dim()) {
      throw ValidationError("operator dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
    }
  }

 private:
  Matrix entries_;
  bool hermitian_ = false;
};

using OperatorElement = BasicOperator<double>;

/// [A, B] = AB - BA.
template <std::floating_point Real>
BasicOperator<Real> commutator(const BasicOperator<Real>& a, const BasicOperator<Real>& b) {
  check_same_dim(a, b);
  return BasicOperator<Real>(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

template <std::floating_point Real>
ComplexMatrix<Real> kron(const ComplexMatrix<Real>& a, const ComplexMatrix<Real>& b) {
  ComplexMatrix<Real> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Matrix polynomial sum_k c[k] A^k by Horner's rule.
template <std::floating_point Real>
ComplexMatrix<Real> matrix_polynomial(const ComplexMatrix<Real>& a, const std::vector<Real>& coeffs) {
  const auto n = a.rows();
  ComplexMatrix<Real> acc = ComplexMatrix<Real>::Zero(n, n);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = (acc * a).eval();
    acc.diagonal().array() += std::complex<Real>(*it, 0);
  }
  return acc;
}

}  // namespace omech
