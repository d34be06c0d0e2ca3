#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "omech/classical.hpp"
#include "omech/kvn.hpp"

using namespace omech;
using Catch::Matchers::WithinAbs;
using C = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSigma = std::sqrt(0.5);

PhaseGrid square_grid(double half, std::size_t points, Boundary b = Boundary::Periodic) {
  return make_phase_grid({{-half, half}}, {{-half, half}}, {{points, points}}, b);
}

/// Smooth, well-resolved random field, below 1e-9 at the edges of [-8, 8]^2.
Field smooth_field(const PhaseGrid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> centre(-2.0, 2.0), width(0.6, 0.9), amp(-1.0, 1.0);
  Field f = Field::Zero(Eigen::Index(grid.size()));
  for (int bump = 0; bump < 3; ++bump) {
    const double cx = centre(rng), cp = centre(rng), s = width(rng);
    const C a(amp(rng), amp(rng));
    f += sample(grid.grid(), [&](std::span<const double> z) {
      return a * std::exp(-((z[0] - cx) * (z[0] - cx) + (z[1] - cp) * (z[1] - cp)) / (2 * s * s));
    });
  }
  return f;
}

double interior_error(const PhaseGrid& grid, const Field& f, double fraction = 0.1) {
  const auto mask = grid.grid().interior_mask(fraction);
  double e = 0;
  for (Eigen::Index k = 0; k < f.size(); ++k)
    if (mask[std::size_t(k)]) e = std::max(e, std::abs(f[k]));
  return e;
}

}  // namespace

TEST_CASE("phase grid construction", "[kvn]") {
  const auto g = square_grid(8, 128);
  CHECK(g.grid().axis(g.x_axis(0)).spacing() == 0.125);
  CHECK(g.grid().axis(g.p_axis(0)).spacing() == 0.125);

  const auto a = make_phase_grid({{-8, 8}}, {{-6, 6}}, {{128, 96}});
  CHECK(a.grid().axis(a.x_axis(0)).spacing() == 0.125);
  CHECK(a.grid().axis(a.p_axis(0)).spacing() == 0.125);

  CHECK_THROWS_AS(make_phase_grid({{-8, 8}}, {{-8, 8}}, {{15, 16}}), ValidationError);
  CHECK_THROWS_AS(make_phase_grid({{-8, 8}}, {{-8, 8}}, {{8, 8}}), ValidationError);
  CHECK_THROWS_AS(make_phase_grid({{8, -8}}, {{-8, 8}}, {{16, 16}}), ValidationError);
  CHECK_THROWS_AS(make_phase_grid({{-8, 8}}, {{-8, 8}}, {{16, 16}}, Boundary::Dirichlet), ValidationError);
}

TEST_CASE("Poisson bracket of the canonical pair", "[kvn]") {
  const auto g = square_grid(8, 128, Boundary::ZeroPadded);
  const PhaseSpace s(g);
  const Field one = poisson_bracket(s.coordinate(0), s.momentum(0), g);
  CHECK(interior_error(g, one - 1.0) <= 1e-10);
  const Field x2 = s.coordinate(0).square();
  CHECK(interior_error(g, poisson_bracket(x2, s.momentum(0), g) - 2.0 * s.coordinate(0)) <= 1e-8);
}

TEST_CASE("Poisson bracket algebra on smooth fields", "[kvn]") {
  const auto g = square_grid(8, 128);
  const PhaseSpace s(g);
  std::mt19937_64 rng(21);
  const Field f = smooth_field(g, rng), h = smooth_field(g, rng), k = smooth_field(g, rng);
  const auto pb = [&](const Field& a, const Field& b) { return s.poisson_bracket(a, b); };

  CHECK(max_abs(pb(f, f)) <= 1e-12);
  CHECK(max_abs(pb(f, h) + pb(h, f)) <= 1e-9);
  CHECK(max_abs(pb(Field(2.0 * f + k), h) - (2.0 * pb(f, h) + pb(k, h))) <= 1e-9);
  CHECK(max_abs(pb(Field(f * h), k) - (f * pb(h, k) + h * pb(f, k))) <= 1e-9);
  const Field jacobi = pb(f, pb(h, k)) + pb(h, pb(k, f)) + pb(k, pb(f, h));
  CHECK(max_abs(jacobi) <= 1e-9);
}

TEST_CASE("total time derivative for the oscillator", "[kvn]") {
  const auto g = square_grid(8, 64, Boundary::ZeroPadded);
  const PhaseSpace s(g);
  const auto sho = PotentialSpec::harmonic(1, 1.0, 2.0);  // m = 2, m omega^2 = 2
  CHECK(interior_error(g, s.total_time_derivative(s.coordinate(0), sho) - s.momentum(0) / 2.0) <= 1e-10);
  const auto unit = PotentialSpec::harmonic();
  CHECK(interior_error(g, s.total_time_derivative(s.momentum(0), unit) + s.coordinate(0)) <= 1e-10);
  CHECK(interior_error(g, s.total_time_derivative(s.hamiltonian(unit), unit)) <= 1e-8);

  const Field explicit_dt = Field::Constant(Eigen::Index(g.size()), 3.0);
  CHECK(interior_error(g, total_time_derivative(s.coordinate(0), unit, g, explicit_dt) - s.momentum(0) - 3.0) <= 1e-10);
}

TEST_CASE("free advection follows the characteristics", "[kvn]") {
  const auto g = square_grid(10, 256);
  const PhaseGaussian gauss{{-1.0}, {0.5}, {kSigma}, {kSigma}};
  const auto psi0 = gaussian_state(g, gauss);
  const double dt = 1.0 / 512;
  const auto traj = evolve_kvn(psi0, PotentialSpec::free_particle(), dt, 512, g, 512);
  REQUIRE(traj.frames.size() == 2);
  const double t = traj.frames.back().t;
  CHECK_THAT(t, WithinAbs(1.0, 1e-15));
  // Closed form: psi0 evaluated at (x - p t, p).
  const auto& grid = g.grid();
  const double norm = l2_norm(grid, sample(grid, [&](std::span<const double> z) {
    return std::exp(-(z[0] + 1) * (z[0] + 1) / (4 * 0.5) - (z[1] - 0.5) * (z[1] - 0.5) / (4 * 0.5));
  }));
  const Field closed = sample(grid, [&](std::span<const double> z) {
    const double x = z[0] - z[1] * t;
    return std::exp(-(x + 1) * (x + 1) / (4 * 0.5) - (z[1] - 0.5) * (z[1] - 0.5) / (4 * 0.5)) / norm;
  });
  CHECK(max_abs(Field(traj.frames.back().psi - closed)) <= 1e-4);
}

TEST_CASE("oscillator period returns the state", "[kvn]") {
  const auto g = square_grid(10, 128);
  const auto psi0 = gaussian_state(g, {{2.0}, {0.0}, {kSigma}, {kSigma}});
  const double T = 2 * kPi;
  const auto traj = evolve_kvn(psi0, PotentialSpec::harmonic(), T / 2048, 2048, g, 2048);
  const Field diff = traj.frames.back().psi - psi0.psi;
  CHECK(l2_norm(g.grid(), diff) <= 1e-3);
  CHECK_THAT(l2_norm(g.grid(), traj.frames.back().psi), WithinAbs(1.0, 1e-6));
}

TEST_CASE("zero time step leaves the state unchanged", "[kvn]") {
  const auto g = square_grid(10, 64);
  const auto psi0 = gaussian_state(g, {{0.0}, {0.0}, {kSigma}, {kSigma}});
  const auto traj = evolve_kvn(psi0, PotentialSpec::harmonic(), 0.0, 10, g);
  CHECK(max_abs(Field(traj.frames.back().psi - psi0.psi)) == 0.0);
}

TEST_CASE("evolution is time reversible", "[kvn]") {
  const auto g = square_grid(10, 128);
  const auto psi0 = gaussian_state(g, {{1.5}, {0.5}, {kSigma}, {kSigma}});
  const double dt = 2 * kPi / 1024;
  const PhaseSpace space(g);
  const auto forward = evolve_kvn(psi0, PotentialSpec::harmonic(), dt, 256, space, 256, nullptr);
  const auto back = evolve_kvn(forward, PotentialSpec::harmonic(), -dt, 256, space, 256, nullptr);
  CHECK(l2_norm(g.grid(), Field(back.psi - psi0.psi)) <= 1e-6);
}

TEST_CASE("CFL guard names the offending axis", "[kvn]") {
  const auto g = square_grid(10, 64);
  const auto psi0 = gaussian_state(g, {{0.0}, {0.0}, {kSigma}, {kSigma}});
  try {
    evolve_kvn(psi0, PotentialSpec::harmonic(), 0.5, 1, g);
    FAIL("expected a CFL violation");
  } catch (const NumericalError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("CFL") && Catch::Matchers::ContainsSubstring("_1"));
  }
}

TEST_CASE("initial states must decay at the boundary", "[kvn]") {
  const auto g = square_grid(4, 64);
  CHECK_THROWS_AS(evolve_kvn(gaussian_state(g, {{0.0}, {0.0}, {2.0}, {2.0}}), PotentialSpec::harmonic(), 0.01, 1, g),
                  ValidationError);
}

TEST_CASE("second-kind expectations", "[kvn]") {
  const auto g = square_grid(10, 128);
  const auto centred = gaussian_state(g, {{0.0}, {0.0}, {kSigma}, {kSigma}});
  CHECK_THAT(second_kind_expectation(MixedEnsemble::pure(centred), Observable::coordinate(), g), WithinAbs(0.0, 1e-10));
  const auto shifted = gaussian_state(g, {{2.0}, {0.0}, {kSigma}, {kSigma}});
  CHECK_THAT(second_kind_expectation(MixedEnsemble::pure(shifted), Observable::coordinate(), g), WithinAbs(2.0, 1e-6));

  const auto left = gaussian_state(g, {{-2.0}, {0.0}, {kSigma}, {kSigma}});
  const MixedEnsemble mix{{{left, 0.5}, {shifted, 0.5}}};
  CHECK_THAT(second_kind_expectation(mix, Observable::coordinate(), g), WithinAbs(0.0, 1e-6));

  // <H> of the Gaussian: (p0^2 + s_p^2) / 2 + (x0^2 + s_x^2) / 2.
  CHECK_THAT(second_kind_expectation(MixedEnsemble::pure(shifted), Observable::hamiltonian(), g, PotentialSpec::harmonic()),
             WithinAbs(0.25 + 2.25, 1e-6));

  const MixedEnsemble bad{{{left, 0.5}, {shifted, 0.6}}};
  CHECK_THROWS_AS(second_kind_expectation(bad, Observable::coordinate(), g), ValidationError);
}

TEST_CASE("density is nonnegative and integrates to the squared norm", "[kvn]") {
  const auto g = square_grid(10, 64);
  const auto s = gaussian_state(g, {{1.0}, {-1.0}, {kSigma}, {kSigma}});
  const Eigen::ArrayXd rho = s.psi.abs2();
  CHECK(rho.minCoeff() >= 0.0);
  const double n = l2_norm(g.grid(), s.psi);
  CHECK_THAT(integrate(g.grid(), Field(rho.cast<C>())).real(), WithinAbs(n * n, 1e-14));
}

TEST_CASE("leapfrog trajectories", "[kvn]") {
  const auto sho = PotentialSpec::harmonic();
  const std::size_t steps = 6283;
  const auto traj = classical_trajectory({1.0}, {0.0}, sho, 2 * kPi / double(steps), steps);
  CHECK_THAT(traj.x.back()[0], WithinAbs(1.0, 1e-6));
  CHECK_THAT(traj.p.back()[0], WithinAbs(0.0, 1e-6));

  const auto free = classical_trajectory({0.5}, {-2.0}, PotentialSpec::free_particle(1, 4.0), 0.01, 300);
  for (std::size_t k = 0; k < free.t.size(); ++k)
    CHECK_THAT(free.x[k][0], WithinAbs(0.5 - 2.0 * free.t[k] / 4.0, 1e-12));

  const auto long_run = classical_trajectory({1.0}, {0.0}, sho, 1e-4, 100000);
  CHECK(long_run.max_relative_energy_drift() <= 1e-8);
}

TEST_CASE("second-kind Ehrenfest relations", "[kvn]") {
  const auto g = square_grid(10, 128);
  const auto free = evolve_kvn(gaussian_state(g, {{-1.0}, {1.0}, {kSigma}, {kSigma}}), PotentialSpec::free_particle(),
                               1.0 / 512, 512, g, 16);
  const auto rf = ehrenfest_second_kind(free, PotentialSpec::free_particle(), g);
  CHECK(rf.max_x_residual <= 1e-4);
  CHECK(rf.max_p_residual <= 1e-4);

  const double T = 2 * kPi;
  const auto sho = evolve_kvn(gaussian_state(g, {{2.0}, {0.0}, {kSigma}, {kSigma}}), PotentialSpec::harmonic(), T / 2048,
                              2048, g, 32);
  const auto rs = ehrenfest_second_kind(sho, PotentialSpec::harmonic(), g);
  CHECK(rs.max_x_residual <= 1e-3);
  CHECK(rs.max_p_residual <= 1e-3);

  // Stationary uniform amplitude: every mean and derivative vanishes.
  const Field uniform = Field::Constant(Eigen::Index(g.size()), 1.0 / std::sqrt(20.0 * 20.0));
  KvNTrajectory still;
  for (int k = 0; k < 5; ++k) still.frames.push_back({uniform, 0.1 * k});
  const auto ru = ehrenfest_second_kind(still, PotentialSpec::free_particle(), g);
  for (const auto& row : ru.rows) {
    CHECK_THAT(row.dx_dt, WithinAbs(0.0, 1e-12));
    CHECK_THAT(row.p_over_m, WithinAbs(0.0, 1e-12));
    CHECK_THAT(row.dp_dt, WithinAbs(0.0, 1e-12));
    CHECK_THAT(row.minus_grad, WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("oscillator means track the classical orbit", "[kvn]") {
  const auto g = square_grid(10, 128);
  const PhaseSpace space(g);
  const auto spec = PotentialSpec::harmonic();
  const KvNObserver observe(space, spec);
  const double dt = 2 * kPi / 1024;
  std::vector<ObservableSample> samples;
  evolve_kvn(gaussian_state(g, {{2.0}, {0.5}, {kSigma}, {kSigma}}), spec, dt, 1024, space, 64,
             [&](const KvNState& s) { samples.push_back(observe(s)); });
  const auto classical = classical_trajectory({2.0}, {0.5}, spec, dt, 1024);
  for (const auto& s : samples) {
    const auto k = std::size_t(std::llround(s.t / dt));
    CHECK_THAT(s.x_mean[0], WithinAbs(classical.x[k][0], 1e-3));
    CHECK_THAT(s.p_mean[0], WithinAbs(classical.p[k][0], 1e-3));
  }
}
