#pragma once

// Uniform tensor-product grids, sampled fields, differentiation and quadrature.
//
// Fields are flattened row-major (last axis contiguous).
//   Periodic:   x_j = min + (j + 1/2) h, h = (max - min) / count, spectral derivatives
//   ZeroPadded: x_j = min + (j + 1/2) h, h = (max - min) / count, 4th-order differences, zero ghosts
//   Dirichlet:  x_j = min + (j + 1) h,   h = (max - min) / (count + 1), zero at both walls;
//               4th-order first derivative, sine-spectral second derivative

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "omech/errors.hpp"
#include "omech/fft.hpp"

namespace omech {

enum class Boundary { Periodic, ZeroPadded, Dirichlet };

inline std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::Periodic: return "periodic";
    case Boundary::ZeroPadded: return "zero-padded";
    case Boundary::Dirichlet: return "dirichlet";
  }
  return "?";
}

struct GridAxis {
  double min = 0;
  double max = 1;
  std::size_t count = 16;
  Boundary boundary = Boundary::Periodic;

  double length() const { return max - min; }
  double spacing() const {
    return boundary == Boundary::Dirichlet ? length() / double(count + 1) : length() / double(count);
  }
  double point(std::size_t j) const {
    return boundary == Boundary::Dirichlet ? min + double(j + 1) * spacing() : min + (double(j) + 0.5) * spacing();
  }
  friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

using Field = Eigen::ArrayXcd;

class UniformGrid {
 public:
  UniformGrid() = default;
  explicit UniformGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
    detail::require(!axes_.empty(), "grid needs at least one axis");
    size_ = 1;
    for (const auto& a : axes_) {
      detail::require(std::isfinite(a.min) && std::isfinite(a.max), "grid bounds must be finite");
      detail::require(a.max > a.min, "grid bounds are inverted or empty");
      detail::require(a.count >= 1, "grid axis needs at least one point");
      size_ *= a.count;
    }
    strides_.resize(axes_.size());
    std::size_t s = 1;
    for (std::size_t d = axes_.size(); d-- > 0;) {
      strides_[d] = s;
      s *= axes_[d].count;
    }
  }

  std::size_t rank() const { return axes_.size(); }
  std::size_t size() const { return size_; }
  const GridAxis& axis(std::size_t d) const { return axes_.at(d); }
  const std::vector<GridAxis>& axes() const { return axes_; }
  std::size_t stride(std::size_t d) const { return strides_.at(d); }
  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> s;
    for (const auto& a : axes_) s.push_back(a.count);
    return s;
  }
  std::size_t index_along(std::size_t flat, std::size_t d) const { return (flat / strides_[d]) % axes_[d].count; }
  double coordinate(std::size_t flat, std::size_t d) const { return axes_[d].point(index_along(flat, d)); }

  /// Product of spacings: the quadrature weight of every node.
  double cell_volume() const {
    double v = 1;
    for (const auto& a : axes_) v *= a.spacing();
    return v;
  }

  /// The coordinate of axis d at every node, as a field.
  Field coordinates(std::size_t d) const {
    Field f(static_cast<Eigen::Index>(size_));
    for (std::size_t k = 0; k < size_; ++k) f(Eigen::Index(k)) = coordinate(k, d);
    return f;
  }

  /// Nodes at least `fraction` of the span away from every edge.
  std::vector<bool> interior_mask(double fraction) const {
    std::vector<bool> mask(size_, true);
    for (std::size_t k = 0; k < size_; ++k) {
      for (std::size_t d = 0; d < rank(); ++d) {
        const auto& a = axes_[d];
        const double x = coordinate(k, d);
        const double margin = fraction * a.length();
        if (x < a.min + margin || x > a.max - margin) mask[k] = false;
      }
    }
    return mask;
  }

  friend bool operator==(const UniformGrid& a, const UniformGrid& b) { return a.axes_ == b.axes_; }

 private:
  std::vector<GridAxis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Field from f(coordinates) evaluated at every node.
template <class Fn>
Field sample(const UniformGrid& grid, Fn&& f) {
  Field out(Eigen::Index(grid.size()));
  std::vector<double> x(grid.rank());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t d = 0; d < grid.rank(); ++d) x[d] = grid.coordinate(k, d);
    out(Eigen::Index(k)) = std::complex<double>(f(std::span<const double>(x)));
  }
  return out;
}

inline void check_field(const UniformGrid& grid, const Field& f, const char* who) {
  if (std::size_t(f.size()) != grid.size()) {
    throw ValidationError(std::string(who) + ": field size " + std::to_string(f.size()) + " does not match grid size " +
                          std::to_string(grid.size()));
  }
}

/// Sum over nodes times the cell volume. Equals the trapezoidal rule for periodic
/// fields and for fields that vanish at the edges.
inline std::complex<double> integrate(const UniformGrid& grid, const Field& f) {
  check_field(grid, f, "integrate");
  return f.sum() * grid.cell_volume();
}

inline double l2_norm(const UniformGrid& grid, const Field& f) {
  check_field(grid, f, "l2_norm");
  return std::sqrt(f.abs2().sum() * grid.cell_volume());
}

inline double max_abs(const Field& f) { return f.size() == 0 ? 0.0 : f.abs().maxCoeff(); }

/// Angular wavenumbers in FFTW order for a periodic axis.
inline std::vector<double> wavenumbers(const GridAxis& a) {
  const std::size_t n = a.count;
  std::vector<double> k(n);
  const double base = 2 * std::numbers::pi / a.length();
  for (std::size_t j = 0; j < n; ++j) k[j] = base * (j < (n + 1) / 2 ? double(j) : double(j) - double(n));
  return k;
}

/// Differentiation and Fourier multipliers on a fixed grid.
///
/// Holds FFTW plans and scratch storage, so an instance is single-writer: use
/// one per thread.
class Differentiator {
 public:
  explicit Differentiator(UniformGrid grid) : grid_(std::move(grid)), buf_(grid_.size()) {
    plans_.resize(grid_.rank());
  }

  const UniformGrid& grid() const { return grid_; }

  /// First derivative along axis d.
  Field derivative(const Field& f, std::size_t d) const {
    check_field(grid_, f, "derivative");
    const auto& a = grid_.axis(d);
    if (a.boundary == Boundary::Periodic) {
      const auto k = wavenumbers(a);
      std::vector<std::complex<double>> mult(a.count);
      for (std::size_t j = 0; j < a.count; ++j) mult[j] = {0.0, k[j]};
      if (a.count % 2 == 0) mult[a.count / 2] = 0.0;  // Nyquist derivative of a real field is zero
      return axis_multiplier(f, d, mult);
    }
    return fd4_first(f, d);
  }

  /// Second derivative along axis d.
  Field second_derivative(const Field& f, std::size_t d) const {
    check_field(grid_, f, "second_derivative");
    const auto& a = grid_.axis(d);
    switch (a.boundary) {
      case Boundary::Periodic: {
        const auto k = wavenumbers(a);
        std::vector<std::complex<double>> mult(a.count);
        for (std::size_t j = 0; j < a.count; ++j) mult[j] = -k[j] * k[j];
        if (a.count % 2 == 0) {
          const double kn = std::numbers::pi / a.spacing();
          mult[a.count / 2] = -kn * kn;
        }
        return axis_multiplier(f, d, mult);
      }
      case Boundary::Dirichlet: return dst_second(f, d);
      case Boundary::ZeroPadded: return fd4_second(f, d);
    }
    return f;
  }

  /// Sum of second derivatives over the given axes.
  Field laplacian(const Field& f, const std::vector<std::size_t>& axes) const {
    Field out = Field::Zero(f.size());
    for (std::size_t d : axes) out += second_derivative(f, d);
    return out;
  }

  /// Applies mult[j] to Fourier mode j of axis d (axis must be periodic).
  Field axis_multiplier(const Field& f, std::size_t d, const std::vector<std::complex<double>>& mult) const {
    const auto& a = grid_.axis(d);
    detail::require(a.boundary == Boundary::Periodic, "Fourier multiplier needs a periodic axis");
    auto& p = axis_plans(d);
    load(f);
    p.forward->execute(buf_);
    const std::size_t stride = grid_.stride(d);
    const std::size_t outer = grid_.size() / (stride * a.count);
    const double scale = 1.0 / double(a.count);
    std::complex<double>* data = buf_.data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < a.count; ++j) {
        const std::complex<double> m = mult[j] * scale;
        std::complex<double>* row = data + (o * a.count + j) * stride;
        for (std::size_t i = 0; i < stride; ++i) row[i] *= m;
      }
    }
    p.backward->execute(buf_);
    return store();
  }

  /// Applies a full-grid multiplier (in FFTW mode order on every axis); all axes periodic.
  Field fourier_multiplier(const Field& f, const Field& mult) const {
    check_field(grid_, f, "fourier_multiplier");
    check_field(grid_, mult, "fourier_multiplier");
    if (!full_forward_) {
      std::vector<std::size_t> all(grid_.rank());
      for (std::size_t d = 0; d < all.size(); ++d) {
        detail::require(grid_.axis(d).boundary == Boundary::Periodic, "Fourier multiplier needs periodic axes");
        all[d] = d;
      }
      full_forward_ = std::make_unique<fft::DftPlan>(grid_.shape(), all, FFTW_FORWARD, buf_);
      full_backward_ = std::make_unique<fft::DftPlan>(grid_.shape(), all, FFTW_BACKWARD, buf_);
    }
    load(f);
    full_forward_->execute(buf_);
    const double scale = 1.0 / double(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) buf_[k] *= mult(Eigen::Index(k)) * scale;
    full_backward_->execute(buf_);
    return store();
  }

  /// Wavenumber vector of every Fourier node, axis by axis (all axes periodic).
  std::vector<Field> wavenumber_fields() const {
    std::vector<Field> out;
    for (std::size_t d = 0; d < grid_.rank(); ++d) {
      const auto k = wavenumbers(grid_.axis(d));
      Field f(Eigen::Index(grid_.size()));
      for (std::size_t j = 0; j < grid_.size(); ++j) f(Eigen::Index(j)) = k[grid_.index_along(j, d)];
      out.push_back(std::move(f));
    }
    return out;
  }

 private:
  struct AxisPlans {
    std::unique_ptr<fft::DftPlan> forward;
    std::unique_ptr<fft::DftPlan> backward;
    std::unique_ptr<fft::DstPlan> sine;
  };

  AxisPlans& axis_plans(std::size_t d) const {
    auto& p = plans_.at(d);
    if (!p.forward && grid_.axis(d).boundary == Boundary::Periodic) {
      p.forward = std::make_unique<fft::DftPlan>(grid_.shape(), std::vector<std::size_t>{d}, FFTW_FORWARD, buf_);
      p.backward = std::make_unique<fft::DftPlan>(grid_.shape(), std::vector<std::size_t>{d}, FFTW_BACKWARD, buf_);
    }
    if (!p.sine && grid_.axis(d).boundary == Boundary::Dirichlet) {
      p.sine = std::make_unique<fft::DstPlan>(grid_.shape(), d, buf_);
    }
    return p;
  }

  void load(const Field& f) const { std::copy(f.data(), f.data() + f.size(), buf_.data()); }
  Field store() const { return Eigen::Map<const Field>(buf_.data(), Eigen::Index(grid_.size())); }

  // Neighbour at offset o along axis d, zero outside the axis.
  std::complex<double> neighbour(const Field& f, std::size_t k, std::size_t d, long o) const {
    const long j = long(grid_.index_along(k, d)) + o;
    if (j < 0 || j >= long(grid_.axis(d).count)) return 0.0;
    return f(Eigen::Index(long(k) + o * long(grid_.stride(d))));
  }

  Field fd4_first(const Field& f, std::size_t d) const {
    const double h = grid_.axis(d).spacing();
    Field out(f.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      out(Eigen::Index(k)) = (neighbour(f, k, d, -2) - 8.0 * neighbour(f, k, d, -1) + 8.0 * neighbour(f, k, d, 1) -
                              neighbour(f, k, d, 2)) /
                             (12 * h);
    }
    return out;
  }

  Field fd4_second(const Field& f, std::size_t d) const {
    const double h = grid_.axis(d).spacing();
    Field out(f.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      out(Eigen::Index(k)) = (-neighbour(f, k, d, -2) + 16.0 * neighbour(f, k, d, -1) - 30.0 * f(Eigen::Index(k)) +
                              16.0 * neighbour(f, k, d, 1) - neighbour(f, k, d, 2)) /
                             (12 * h * h);
    }
    return out;
  }

  // Sine series: mode q (1-based) is sin(q pi (x - min) / L) with eigenvalue -(q pi / L)^2.
  Field dst_second(const Field& f, std::size_t d) const {
    const auto& a = grid_.axis(d);
    auto& p = axis_plans(d);
    load(f);
    p.sine->execute(buf_);
    const std::size_t stride = grid_.stride(d);
    const double norm = 1.0 / (2.0 * double(a.count + 1));
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      const double q = double((k / stride) % a.count + 1) * std::numbers::pi / a.length();
      buf_[k] *= -q * q * norm;
    }
    p.sine->execute(buf_);
    return store();
  }

  UniformGrid grid_;
  mutable fft::Buffer buf_;
  mutable std::vector<AxisPlans> plans_;
  mutable std::unique_ptr<fft::DftPlan> full_forward_;
  mutable std::unique_ptr<fft::DftPlan> full_backward_;
};

// ---------------------------------------------------------------------------
// Phase-space and configuration grids

/// Grid over [X_1..X_n, P_1..P_n].
class PhaseGrid {
 public:
  PhaseGrid(std::vector<GridAxis> x_axes, std::vector<GridAxis> p_axes) {
    detail::require(!x_axes.empty() && x_axes.size() == p_axes.size(),
                    "phase grid needs matching position and momentum axes");
    detail::require(x_axes.size() <= 2, "phase grids support at most 2 degrees of freedom");
    n_ = x_axes.size();
    std::vector<GridAxis> all = x_axes;
    all.insert(all.end(), p_axes.begin(), p_axes.end());
    for (const auto& a : all) {
      detail::require(a.count >= 16 && a.count % 2 == 0,
                      "phase grid counts must be even and at least 16 (got " + std::to_string(a.count) + ")");
      detail::require(a.boundary != Boundary::Dirichlet, "phase grids are periodic or zero-padded");
    }
    grid_ = UniformGrid(std::move(all));
  }

  std::size_t dofs() const { return n_; }
  std::size_t x_axis(std::size_t i) const { return check(i); }
  std::size_t p_axis(std::size_t i) const { return n_ + check(i); }
  const UniformGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  friend bool operator==(const PhaseGrid& a, const PhaseGrid& b) { return a.grid_ == b.grid_; }

 private:
  std::size_t check(std::size_t i) const {
    detail::require(i < n_, "degree-of-freedom index out of range");
    return i;
  }
  std::size_t n_ = 0;
  UniformGrid grid_;
};

struct Interval {
  double min;
  double max;
};

/// Phase grid from per-dof bounds and counts; counts are (G_x, G_p) per dof.
inline PhaseGrid make_phase_grid(const std::vector<Interval>& x_bounds, const std::vector<Interval>& p_bounds,
                                 const std::vector<std::array<std::size_t, 2>>& counts,
                                 Boundary boundary = Boundary::Periodic) {
  detail::require(x_bounds.size() == p_bounds.size() && x_bounds.size() == counts.size(),
                  "phase grid bounds and counts must have one entry per degree of freedom");
  std::vector<GridAxis> xs, ps;
  for (std::size_t i = 0; i < x_bounds.size(); ++i) {
    detail::require(x_bounds[i].max > x_bounds[i].min && p_bounds[i].max > p_bounds[i].min,
                    "phase grid bounds are inverted or empty");
    xs.push_back({x_bounds[i].min, x_bounds[i].max, counts[i][0], boundary});
    ps.push_back({p_bounds[i].min, p_bounds[i].max, counts[i][1], boundary});
  }
  return PhaseGrid(std::move(xs), std::move(ps));
}

/// Configuration-space grid: one axis per degree of freedom, G points each.
class ConfigGrid {
 public:
  static constexpr std::size_t kMinPoints = 32;

  ConfigGrid(std::vector<Interval> bounds, std::size_t points, Boundary boundary) : boundary_(boundary) {
    detail::require(!bounds.empty() && bounds.size() <= 2, "configuration grids support 1 or 2 degrees of freedom");
    detail::require(points >= kMinPoints, "configuration grid needs at least " + std::to_string(kMinPoints) +
                                              " points (got " + std::to_string(points) + ")");
    detail::require(boundary != Boundary::ZeroPadded, "configuration grids are periodic or Dirichlet");
    std::vector<GridAxis> axes;
    for (const auto& b : bounds) {
      detail::require(b.max > b.min, "configuration grid bounds are inverted or empty");
      axes.push_back({b.min, b.max, points, boundary});
    }
    grid_ = UniformGrid(std::move(axes));
  }

  std::size_t dofs() const { return grid_.rank(); }
  std::size_t points() const { return grid_.axis(0).count; }
  Boundary boundary() const { return boundary_; }
  const UniformGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  friend bool operator==(const ConfigGrid& a, const ConfigGrid& b) { return a.grid_ == b.grid_; }

 private:
  Boundary boundary_;
  UniformGrid grid_;
};

}  // namespace omech
