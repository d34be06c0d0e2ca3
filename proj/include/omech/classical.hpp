#pragma once

// Reference phase-space trajectories from Hamilton's equations with a
// separable H = sum_i p_i^2 / 2m + V_i(x_i).

#include <cmath>
#include <cstddef>
#include <vector>

#include "omech/algebra.hpp"
#include "omech/errors.hpp"

namespace omech {

struct ClassicalTrajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> x;  // [sample][dof]
  std::vector<std::vector<double>> p;
  std::vector<double> energy;

  double max_relative_energy_drift() const {
    if (energy.empty()) return 0;
    const double e0 = energy.front();
    const double scale = e0 != 0 ? std::abs(e0) : 1.0;
    double d = 0;
    for (double e : energy) d = std::max(d, std::abs(e - e0) / scale);
    return d;
  }
};

inline double classical_energy(const PotentialSpec& spec, const std::vector<double>& x, const std::vector<double>& p) {
  double e = 0;
  for (std::size_t i = 0; i < x.size(); ++i) e += p[i] * p[i] / (2 * spec.mass) + spec.value(i, x[i]);
  return e;
}

/// Kick-drift-kick leapfrog. Every step is recorded, including t = 0.
inline ClassicalTrajectory classical_trajectory(std::vector<double> x0, std::vector<double> p0,
                                                const PotentialSpec& spec, double dt, std::size_t steps) {
  spec.validate();
  detail::require(!x0.empty() && x0.size() == p0.size(), "initial position and momentum must have equal, nonzero size");
  detail::require(std::isfinite(dt), "time step must be finite");
  const std::size_t n = x0.size();
  ClassicalTrajectory out;
  out.t.reserve(steps + 1);
  out.x.reserve(steps + 1);
  out.p.reserve(steps + 1);
  out.energy.reserve(steps + 1);
  auto record = [&](double t, const std::vector<double>& x, const std::vector<double>& p) {
    out.t.push_back(t);
    out.x.push_back(x);
    out.p.push_back(p);
    out.energy.push_back(classical_energy(spec, x, p));
  };
  std::vector<double> x = std::move(x0), p = std::move(p0);
  record(0.0, x, p);
  for (std::size_t s = 1; s <= steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) p[i] -= 0.5 * dt * spec.gradient(i, x[i]);
    for (std::size_t i = 0; i < n; ++i) x[i] += dt * p[i] / spec.mass;
    for (std::size_t i = 0; i < n; ++i) p[i] -= 0.5 * dt * spec.gradient(i, x[i]);
    record(double(s) * dt, x, p);
  }
  return out;
}

}  // namespace omech
