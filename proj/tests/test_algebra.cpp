#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "omech/algebra.hpp"
#include "omech/spectral.hpp"

using namespace omech;
using Catch::Matchers::WithinAbs;
using C = std::complex<double>;

namespace {

ComplexMatrix<double> random_hermitian(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const auto n = Eigen::Index(d);
  ComplexMatrix<double> a(n, n);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = {g(rng), g(rng)};
  return 0.5 * (a + a.adjoint());
}

double block_max(const ComplexMatrix<double>& m, std::size_t k) {
  return max_abs(m.topLeftCorner(Eigen::Index(k), Eigen::Index(k)));
}

}  // namespace

TEST_CASE("two-level ladder generators", "[algebra]") {
  const auto ctx = make_context(1, 2, 1.0, Representation::Ladder);
  const double s = std::sqrt(0.5);
  ComplexMatrix<double> x(2, 2), p(2, 2);
  x << 0, s, s, 0;
  p << 0, C(0, -s), C(0, s), 0;
  CHECK(max_abs(ctx.X(0).matrix() - x) <= 1e-15);
  CHECK(max_abs(ctx.P(0).matrix() - p) <= 1e-15);

  ComplexMatrix<double> expected = C(0, 1) * ComplexMatrix<double>::Identity(2, 2);
  expected(1, 1) = C(0, -1);  // i (I - 2 diag(0, 1))
  CHECK(max_abs(commutator(ctx.X(0), ctx.P(0)).matrix() - expected) <= 1e-15);
}

TEST_CASE("CCR holds off the corner at N = 64", "[algebra]") {
  const auto ctx = make_context(1, 64, 1.0, Representation::Ladder);
  const ComplexMatrix<double> r = commutator(ctx.X(0), ctx.P(0)).matrix() - ctx.kappa() * ctx.identity().matrix();
  CHECK(block_max(r, 63) <= 1e-12);
  // Everything outside the corner entry vanishes too.
  ComplexMatrix<double> off = r;
  off(63, 63) = 0;
  CHECK(max_abs(off) <= 1e-12);
  CHECK_THAT(r(63, 63).imag(), WithinAbs(-64.0, 1e-12));
}

TEST_CASE("cross-index generators commute exactly", "[algebra]") {
  const auto ctx = make_context(2, 8, 1.0, Representation::Ladder);
  CHECK(max_abs(commutator(ctx.X(0), ctx.P(1)).matrix()) == 0.0);
  CHECK(max_abs(commutator(ctx.X(1), ctx.P(0)).matrix()) == 0.0);
  CHECK(max_abs(commutator(ctx.X(0), ctx.X(1)).matrix()) == 0.0);
  CHECK(max_abs(commutator(ctx.P(0), ctx.P(1)).matrix()) == 0.0);
}

TEST_CASE("context construction rejects bad parameters", "[algebra]") {
  CHECK_THROWS_AS(make_context(0, 8, 1.0, Representation::Ladder), ValidationError);
  CHECK_THROWS_AS(make_context(1, 1, 1.0, Representation::Ladder), ValidationError);
  CHECK_THROWS_AS(make_context(1, 8, 0.0, Representation::Ladder), ValidationError);
  CHECK_THROWS_AS(make_context(1, 8, -1.0, Representation::Ladder), ValidationError);
  CHECK_THROWS_AS(make_context(3, 32, 1.0, Representation::Ladder), ValidationError);  // 32768 > budget
}

TEST_CASE("commutator examples", "[algebra]") {
  const auto ctx = make_context(1, 16, 1.0, Representation::Ladder);
  std::mt19937_64 rng(1);
  const OperatorElement b(random_hermitian(16, rng), true);
  CHECK(max_abs(commutator(ctx.identity(), b).matrix()) == 0.0);

  const auto x2 = ctx.X(0) * ctx.X(0);
  const ComplexMatrix<double> r = commutator(x2, ctx.P(0)).matrix() - C(0, 2) * ctx.X(0).matrix();
  CHECK(block_max(r, 14) <= 1e-12);
}

TEST_CASE("commutator is antisymmetric and bilinear", "[algebra]") {
  std::mt19937_64 rng(2);
  const OperatorElement a(random_hermitian(6, rng)), b(random_hermitian(6, rng)), c(random_hermitian(6, rng));
  CHECK(max_abs((commutator(a, b) + commutator(b, a)).matrix()) == 0.0);
  const auto lhs = commutator(2.0 * a + c, b);
  const auto rhs = 2.0 * commutator(a, b) + commutator(c, b);
  CHECK(max_abs((lhs - rhs).matrix()) <= 1e-12);
}

TEST_CASE("Jacobi identity", "[algebra]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const OperatorElement f(random_hermitian(8, rng)), g(random_hermitian(8, rng)), h(random_hermitian(8, rng));
    const auto lhs = commutator(f, commutator(g, h));
    const auto rhs = commutator(commutator(f, g), h) + commutator(g, commutator(f, h));
    CHECK(max_abs((lhs - rhs).matrix()) <= 1e-12);
  }
}

TEST_CASE("partial derivatives", "[algebra]") {
  const auto ctx = make_context(2, 16, 1.0, Representation::Ladder);
  const auto dxx = nc_partial_derivative(ctx.X(0), 0, Axis::X, ctx);
  CHECK(max_abs(restrict_to_block(dxx, ctx, 1).matrix() - restrict_to_block(ctx.identity(), ctx, 1).matrix()) <= 1e-12);
  CHECK(max_abs(nc_partial_derivative(ctx.P(1), 0, Axis::X, ctx).matrix()) == 0.0);
  CHECK(max_abs(nc_partial_derivative(ctx.P(0), 1, Axis::X, ctx).matrix()) == 0.0);

  const auto one = make_context(1, 16, 1.0, Representation::Ladder);
  const auto d = nc_partial_derivative(one.X(0) * one.X(0), 0, Axis::X, one);
  CHECK(block_max(d.matrix() - 2.0 * one.X(0).matrix(), 14) <= 1e-12);
}

TEST_CASE("Leibniz rule is an exact matrix identity", "[algebra]") {
  const auto ctx = make_context(1, 12, 1.0, Representation::Ladder);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const OperatorElement a(random_hermitian(12, rng), true), b(random_hermitian(12, rng), true);
    for (const auto axis : {Axis::X, Axis::P}) {
      const auto lhs = nc_partial_derivative(a * b, 0, axis, ctx);
      const auto rhs = nc_partial_derivative(a, 0, axis, ctx) * b + a * nc_partial_derivative(b, 0, axis, ctx);
      CHECK(max_abs((lhs - rhs).matrix()) <= 1e-12);
    }
  }
}

TEST_CASE("time derivatives", "[algebra]") {
  const auto ctx = make_context(1, 32, 1.0, Representation::Ladder);
  const auto h = build_hamiltonian(PotentialSpec::free_particle(1, 2.0), ctx);
  CHECK(max_abs(nc_time_derivative(h, h, ctx).matrix()) == 0.0);
  CHECK(max_abs(nc_time_derivative(ctx.identity(), h, ctx).matrix()) == 0.0);
  const auto xdot = nc_time_derivative(ctx.X(0), h, ctx);
  CHECK(block_max(xdot.matrix() - 0.5 * ctx.P(0).matrix(), 30) <= 1e-12);
}

TEST_CASE("Hamiltonians", "[algebra]") {
  const auto free = make_context(1, 8, 1.0, Representation::Ladder);
  const auto h0 = build_hamiltonian(PotentialSpec::free_particle(), free);
  CHECK(max_abs(h0.matrix() - 0.5 * (free.P(0) * free.P(0)).matrix()) <= 1e-15);

  const auto ctx = make_context(1, 64, 1.0, Representation::Ladder);
  const auto h = build_hamiltonian(PotentialSpec::harmonic(), ctx);
  CHECK_THAT(eigenvalues(h).front(), WithinAbs(0.5, 1e-10));

  const auto q = make_context(1, 16, 1.0, Representation::Ladder);
  const auto hq = build_hamiltonian(PotentialSpec::monomial(4, 0.25), q);
  CHECK(hermiticity_defect(hq.matrix()) <= 1e-12);
}

TEST_CASE("potential specs are validated", "[algebra]") {
  CHECK_THROWS_AS(PotentialSpec::monomial(13, 1.0).validate(), ValidationError);
  CHECK_THROWS_AS(PotentialSpec::harmonic(1, 1.0, 0.0).validate(), ValidationError);
  PotentialSpec nan_spec{{{0.0, std::nan("")}}, 1.0};
  CHECK_THROWS_AS(nan_spec.validate(), ValidationError);
}

TEST_CASE("Hamilton and Newton residuals on the block", "[algebra]") {
  const auto ctx = make_context(1, 64, 1.0, Representation::Ladder);
  const auto sho = dynamics_residuals(PotentialSpec::harmonic(), ctx);
  CHECK(sho.find("hamilton_x(i=0)")->block <= 1e-10);
  CHECK(sho.find("hamilton_p(i=0)")->block <= 1e-10);
  CHECK(sho.max_block() <= 1e-10);

  const auto free = dynamics_residuals(PotentialSpec::free_particle(), ctx);
  CHECK(free.find("hamilton_p(i=0)")->full <= 1e-12);
  CHECK(free.max_block() <= 1e-10);

  const auto q = make_context(1, 32, 1.0, Representation::Ladder);
  const auto quartic = dynamics_residuals(PotentialSpec::monomial(4, 0.25), q);
  CHECK(quartic.exclusion_depth == 4);
  CHECK(quartic.find("hamilton_p(i=0)")->block <= 1e-10);
  CHECK(quartic.max_block() <= 1e-10);
}

TEST_CASE("block residuals shrink as the exclusion depth grows", "[algebra]") {
  const auto ctx = make_context(1, 32, 1.0, Representation::Ladder);
  const auto spec = PotentialSpec::monomial(4, 0.25);
  double previous = dynamics_residuals(spec, ctx, 0).max_block();
  for (std::size_t d = 1; d <= 8; ++d) {
    const double r = dynamics_residuals(spec, ctx, d).max_block();
    INFO("depth " << d);
    // Once the truncation leakage is gone only extended-precision roundoff remains.
    CHECK(r <= std::max(previous, 1e-15));
    previous = r;
  }
}

TEST_CASE("canonical structure", "[algebra]") {
  const auto ctx = make_context(2, 8, 1.0, Representation::Ladder);
  const auto report = verify_canonical_structure(ctx);
  CHECK(report.find("omega[1,1](i=0,j=0)")->full == 0.0);
  CHECK(report.find("omega[2,2](i=1,j=1)")->full == 0.0);
  for (const auto& r : report.residuals)
    if (r.name.find("i=0,j=1") != std::string::npos || r.name.find("i=1,j=0") != std::string::npos) {
      INFO(r.name);
      CHECK(r.full == 0.0);
    }

  const auto big = make_context(1, 64, 1.0, Representation::Ladder);
  const auto r64 = verify_canonical_structure(big);
  CHECK(r64.find("omega[1,2](i=0,j=0)")->block <= 1e-12);
  CHECK(r64.defect_rank == 1);
  CHECK_THAT(r64.defect_magnitude, WithinAbs(64.0, 1e-12));
  CHECK(r64.defect_location == std::pair<std::size_t, std::size_t>{63, 63});
}

TEST_CASE("defect is rank one per factor with magnitude N hbar", "[algebra]") {
  const auto ctx = make_context(1, 20, 0.5, Representation::Ladder);
  const auto r = verify_canonical_structure(ctx);
  CHECK(r.defect_rank == 1);
  CHECK_THAT(r.defect_magnitude, WithinAbs(20 * 0.5, 1e-12));
}

TEST_CASE("involution norm", "[algebra]") {
  const auto ctx = make_context(1, 8, 1.0, Representation::Ladder);
  CHECK_THAT(involution_norm({C(1, 0)}, 0, ctx), WithinAbs(1.0, 1e-12));
  CHECK_THAT(involution_norm({C(0, 3)}, 0, ctx), WithinAbs(9.0, 1e-12));
  const auto two = make_context(2, 8, 1.0, Representation::Ladder);
  CHECK_THAT(involution_norm({C(1, 0), C(2, 0)}, 0, two), WithinAbs(5.0, 1e-12));
  CHECK_THROWS_AS(involution_norm({C(0, 0)}, 0, ctx), ValidationError);
}

TEST_CASE("involution norm equals the coefficient norm for random vectors", "[algebra]") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto ctx = make_context(n, 6, 1.0, Representation::Ladder);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<C> k(n);
      double expected = 0;
      for (auto& c : k) {
        c = {g(rng), g(rng)};
        expected += std::norm(c);
      }
      CHECK_THAT(involution_norm(k, 0, ctx), WithinAbs(expected, 1e-12));
    }
  }
}

TEST_CASE("position-grid representation is a coarse cross-check", "[algebra]") {
  const auto ctx = make_context(1, 64, 1.0, Representation::PositionGrid);
  CHECK(hermiticity_defect(ctx.X(0).matrix()) == 0.0);
  CHECK(hermiticity_defect(ctx.P(0).matrix()) <= 1e-12);
  // Plane-wave derivative is exact for resolved modes, so [X, P] ~ kappa on smooth vectors near the centre.
  const auto h = build_hamiltonian(PotentialSpec::harmonic(), ctx);
  CHECK_THAT(eigenvalues(h).front(), WithinAbs(0.5, 1e-3));
}
