// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "omech/omech.hpp"
#include "omech/harness/runner.hpp"

using namespace omech;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("omech-acceptance-" + name);
  fs::remove_all(dir);
  return dir;
}

// ---------------------------------------------------------------------------

Outcome ccr_structure() {
  const auto start = std::chrono::steady_clock::now();
  const auto ctx = make_context(1, 64, 1.0, Representation::Ladder);
  const ComplexMatrix<double> r = commutator(ctx.X(0), ctx.P(0)).matrix() - ctx.kappa() * ctx.identity().matrix();
  const double scale = std::abs(ctx.kappa());
  std::size_t nonzero = 0;
  Eigen::Index row = -1, col = -1;
  double off_corner = 0;
  for (Eigen::Index a = 0; a < r.rows(); ++a)
    for (Eigen::Index b = 0; b < r.cols(); ++b) {
      if (a == 63 && b == 63) continue;
      off_corner = std::max(off_corner, std::abs(r(a, b)));
    }
  for (Eigen::Index a = 0; a < r.rows(); ++a)
    for (Eigen::Index b = 0; b < r.cols(); ++b)
      if (std::abs(r(a, b)) > 1e-12 * scale) {
        ++nonzero;
        row = a;
        col = b;
      }
  const double elapsed = seconds_since(start);

  // Cross-index commutators need two degrees of freedom.
  const auto two = make_context(2, 16, 1.0, Representation::Ladder);
  const double cross = std::max({max_abs(commutator(two.X(0), two.P(1)).matrix()),
                                 max_abs(commutator(two.P(0), two.X(1)).matrix()),
                                 max_abs(commutator(two.X(0), two.X(1)).matrix()),
                                 max_abs(commutator(two.P(0), two.P(1)).matrix())});
  const bool ok = nonzero == 1 && row == 63 && col == 63 && off_corner <= 1e-12 * scale && cross == 0.0 && elapsed < 1.0;
  return {ok, "defect entries " + std::to_string(nonzero) + " at (" + std::to_string(row) + "," + std::to_string(col) +
                  "), off-corner " + num(off_corner) + ", cross-index " + num(cross) + ", " + num(elapsed) + " s"};
}

Outcome operator_dynamics() {
  const auto start = std::chrono::steady_clock::now();
  const auto ctx = make_context(1, 64, 1.0, Representation::Ladder);
  double worst = 0;
  std::string depths;
  for (const auto& spec : {PotentialSpec::free_particle(), PotentialSpec::harmonic(), PotentialSpec::monomial(4, 0.25)}) {
    const auto r = dynamics_residuals(spec, ctx);
    worst = std::max(worst, r.max_block());
    depths += (depths.empty() ? "" : ",") + std::to_string(r.exclusion_depth);
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 5.0,
          "max block residual " + num(worst) + ", depths " + depths + ", " + num(elapsed) + " s"};
}

Outcome first_kind_sweep() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = 0;
  std::size_t evaluated = 0;
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 8}, {1, 32}, {1, 64}, {2, 4}, {2, 8}};
  for (const auto& [n, N] : shapes) {
    const auto ctx = make_context(n, N, 1.0, Representation::Ladder);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> w(n);
      double total = 0;
      for (auto& x : w) total += (x = u(rng));
      for (auto& x : w) x /= total;
      w.back() = 1.0;
      for (std::size_t i = 0; i + 1 < n; ++i) w.back() -= w[i];
      const SpectralWeights weights(w);
      for (const auto g : {Generator::X, Generator::P})
        for (std::size_t i = 0; i < n; ++i) {
          const auto lambda = eigenvalues(g == Generator::X ? ctx.X(i) : ctx.P(i));
          for (std::size_t m = 0; m < ctx.dim(); m += 3) {
            worst = std::max(worst, std::abs(first_kind_expectation(g, i, m, weights, ctx) - w[i] * lambda[m]));
            ++evaluated;
          }
        }
    }
  }
  return {worst <= 1e-12, "max deviation " + num(worst) + " over " + std::to_string(evaluated) + " evaluations"};
}

Outcome involution_positivity() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0;
  std::size_t vectors = 0;
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 16}, {2, 8}, {3, 4}};
  for (const auto& [n, N] : shapes) {
    const auto ctx = make_context(n, N, 1.0, Representation::Ladder);
    const auto modes = ctx.block_indices(2);
    for (int trial = 0; trial < 40; ++trial, ++vectors) {
      std::vector<std::complex<double>> k(n);
      double expected = 0;
      for (auto& c : k) expected += std::norm(c = {g(rng), g(rng)});
      for (std::size_t m = 0; m < std::min<std::size_t>(modes.size(), 3); ++m)
        worst = std::max(worst, std::abs(involution_norm(k, modes[m], ctx) - expected));
    }
  }
  return {worst <= 1e-12 && vectors >= 100, "max deviation " + num(worst) + " over " + std::to_string(vectors) + " vectors"};
}

Outcome large_n_continuum() {
  const auto start = std::chrono::steady_clock::now();
  const auto e = gue_profile(512, 16, 2024);
  const double elapsed = seconds_since(start);
  const auto ladder = continuum_profile(Generator::X, 0, SpectralWeights::uniform(1), {64, 128, 256, 512}, 1.0);
  bool vanishing = true;
  std::string alphas;
  for (std::size_t k = 0; k < ladder.profiles.size(); ++k) {
    if (k > 0 && ladder.profiles[k].alpha >= ladder.profiles[k - 1].alpha) vanishing = false;
    alphas += (alphas.empty() ? "" : ",") + num(ladder.profiles[k].alpha);
  }
  return {e.ks_distance <= 0.05 && vanishing && elapsed < 60.0,
          "GUE KS " + num(e.ks_distance) + " (" + num(elapsed) + " s), ladder support " + alphas};
}

Outcome kvn_conservation() {
  const auto start = std::chrono::steady_clock::now();
  harness::ExperimentConfig cfg;
  cfg.kind = harness::ExperimentKind::EvolveKvN;
  cfg.output_dir = scratch("kvn").string();
  cfg.set("kvn.grid.x_count", 256);
  cfg.set("kvn.grid.p_count", 256);
  cfg.set("kvn.dt", 2 * kPi / 4096);
  cfg.set("kvn.steps", 4096);
  cfg.set("kvn.stride", 64);
  const auto report = harness::run(cfg);
  const double elapsed = seconds_since(start);
  std::string detail;
  bool ok = elapsed < 120.0;
  for (const auto& name : {"norm_drift", "period_return_l2", "ehrenfest_x", "ehrenfest_p"}) {
    bool found = false;
    for (const auto& c : report.checks)
      if (c.name == name) {
        found = true;
        ok = ok && c.passed;
        detail += std::string(name) + " " + num(c.value) + ", ";
      }
    ok = ok && found;
  }
  return {ok, detail + num(elapsed) + " s"};
}

Outcome calops_algebra() {
  const auto grid = make_phase_grid({{-10, 10}}, {{-10, 10}}, {{512, 512}});
  const auto report = calops_check(grid, 1.0, 7, 4);
  std::string detail;
  for (const auto& r : report.relations) detail += r.name + " " + num(r.residual) + ", ";
  detail.resize(detail.size() - 2);
  return {report.relations.size() == 6 && report.max_residual() <= 1e-8, detail};
}

Outcome shifted_potential_rule() {
  bool rule = true;
  for (std::size_t k = 0; k <= 12; ++k) {
    const auto mono = PotentialSpec::monomial(k, 1.0);
    const auto term = coordinate_gradient_term(mono).coefficients[0];
    const auto shifted = shifted_potential(mono).coefficients[0];
    rule = rule && term[k] == double(k) && shifted[k] == double(k) - 1.0;
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const PotentialSpec quad{{{0.0, 0.0, u(rng)}, {0.0, 0.0, u(rng)}}, 1.0};
  const bool fixed = shifted_potential(quad).coefficients == quad.coefficients &&
                     shifted_potential(shifted_potential(quad)).coefficients == quad.coefficients;
  return {rule && fixed, std::string("a_k -> k a_k for k <= 12: ") + (rule ? "exact" : "mismatch") +
                             ", quadratic fixed point: " + (fixed ? "exact" : "mismatch")};
}

Outcome schrodinger_recovery() {
  const ConfigGrid box({{-10, 10}}, 512, Boundary::Dirichlet);
  const double ground = build_hqm(PotentialSpec::harmonic(), quantize_map(box, 1.0)).spectrum().front();

  const ConfigGrid ring({{-12, 12}}, 512, Boundary::Periodic);
  const auto h = build_hqm(PotentialSpec::harmonic(), quantize_map(ring, 1.0));
  double orbit = 0, drift = 0;
  evolve_schrodinger(qm_gaussian(ring, {2.0}, {0.0}, {std::sqrt(0.5)}, 1.0), h, 2 * kPi / 4096, 4096, 16,
                     [&](const QMState& s) {
                       const auto o = observe_qm(s, h);
                       orbit = std::max(orbit, std::abs(o.x_mean[0] - 2 * std::cos(s.t)));
                       drift = std::max(drift, std::abs(o.norm - 1.0));
                     });
  return {std::abs(ground - 0.5) <= 1e-6 && orbit <= 1e-4 && drift <= 1e-10,
          "ground energy error " + num(std::abs(ground - 0.5)) + ", coherent orbit " + num(orbit) + ", norm drift " +
              num(drift)};
}

Outcome kvn_qm_agreement() {
  const auto start = std::chrono::steady_clock::now();
  const auto r = compare_kvn_qm(PotentialSpec::harmonic(), {2.0, 0.0, std::sqrt(0.5)}, 2 * kPi, ComparisonResolution{});
  const double elapsed = seconds_since(start);
  return {r.exact && r.max_gap_x <= 1e-3 && elapsed < 180.0,
          "max |<X>_KvN - <x>_QM| " + num(r.max_gap_x) + ", momentum gap " + num(r.max_gap_p) + ", " + num(elapsed) + " s"};
}

Outcome entanglement_metric() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dims(8, 32), blocks(3, 8);
  std::size_t voi_bad = 0, rajski_bad = 0;
  double worst_slack = 0, rajski_lo = 0, rajski_hi = 1;
  const std::size_t draws = 100;
  for (std::size_t d = 0; d < draws; ++d) {
    const std::size_t N = dims(rng);
    const auto rho = random_density(N, rng);
    const auto parts = random_partition(N, blocks(rng), rng);
    const auto r = build_metric_space(rho, parts);
    worst_slack = std::min(worst_slack, r.voi_triangle.worst_slack);
    rajski_lo = std::min(rajski_lo, r.rajski_min);
    rajski_hi = std::max(rajski_hi, r.rajski_max);
    if (r.voi_triangle.violations > 0) ++voi_bad;
    if (r.rajski_min < -1e-12 || r.rajski_max > 1 + 1e-12) ++rajski_bad;
  }
  double mixed = 0;
  for (std::size_t d = 2; d <= 32; ++d) {
    const OperatorElement rho(ComplexMatrix<double>::Identity(Eigen::Index(d), Eigen::Index(d)) / double(d), true);
    mixed = std::max(mixed, std::abs(entropy(rho) - std::log(double(d))));
  }
  return {voi_bad == 0 && rajski_bad == 0 && mixed <= 1e-10,
          "VoI triangle violated in " + std::to_string(voi_bad) + "/" + std::to_string(draws) + " draws (worst slack " +
              num(worst_slack) + "), Rajski outside [0,1] in " + std::to_string(rajski_bad) + " draws (range " +
              num(rajski_lo) + ".." + num(rajski_hi) + "), mixed entropy error " + num(mixed)};
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// results_digest plus the digest of every data file; report.json carries the wall clock.
std::string fingerprint(const fs::path& dir) {
  const auto manifest = nlohmann::json::parse(read(dir / "manifest.json"));
  std::string out = manifest.at("results_digest").get<std::string>();
  for (const auto& f : manifest.at("files"))
    if (f.at("path") != "report.json") out += " " + f.at("sha256").get<std::string>();
  return out;
}

Outcome determinism() {
  const std::vector<std::string> runs = {
      "entangle-metric --set geometry.source=random --set geometry.partition=random --set geometry.draws=10 --seed 4",
      "evolve-kvn --set kvn.steps=128 --set kvn.write_frames=true",
      "spectrum --set spectral.ensemble=true --set spectral.ensemble_N=64 --set spectral.samples=4 --seed 9",
      "evolve-qm --set qm.steps=512",
  };
  std::size_t same = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::string prints[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = scratch("det-" + std::to_string(k) + "-" + std::to_string(rep));
      const std::string cmd = "OMECH_THREADS=0 " + std::string(OMECH_CLI_PATH) + " " + runs[k] + " --out " +
                              dir.string() + " > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) > 1 || !fs::exists(dir / "manifest.json")) {
        prints[rep] = "run failed " + std::to_string(rep);
        continue;
      }
      prints[rep] = fingerprint(dir);
    }
    if (prints[0] == prints[1]) ++same;
  }
  return {same == runs.size(),
          std::to_string(same) + "/" + std::to_string(runs.size()) + " experiments reproduced identical digests"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {"CCR structure at N=64", ccr_structure},
      {"operator Hamilton and Newton laws", operator_dynamics},
      {"first-kind expectations equal w_i lambda_m", first_kind_sweep},
      {"involution positivity", involution_positivity},
      {"large-N continuum", large_n_continuum},
      {"KvN conservation and Ehrenfest", kvn_conservation},
      {"phase-space operator algebra", calops_algebra},
      {"shifted potential", shifted_potential_rule},
      {"Schrodinger recovery", schrodinger_recovery},
      {"KvN and QM agreement", kvn_qm_agreement},
      {"entanglement metric", entanglement_metric},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.passed) ++failures;
    std::printf("%s %2d %s: %s\n", o.passed ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
