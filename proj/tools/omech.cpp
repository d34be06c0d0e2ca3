#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "omech/harness/config.hpp"
#include "omech/harness/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw omech::IoError("cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  namespace h = omech::harness;

  CLI::App app{"Operator-mechanics experiment runner"};
  std::string kind, config_path, out_dir = "omech-out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool list_keys = false;
  app.add_option("experiment", kind, "VerifyAlgebra, Spectrum, EvolveKvN, EvolveQM, QuantizeCompare, EntangleMetric, "
                                     "EhrenfestSuite (or kebab-case)");
  app.add_option("--config", config_path, "YAML configuration file");
  app.add_option("--set", overrides, "override a key, e.g. --set kvn.dt=1e-3")->allow_extra_args(false);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "master seed");
  app.add_flag("--list-keys", list_keys, "print the configuration schema and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::kExitConfig;
  }

  if (list_keys) {
    for (const auto& k : h::schema())
      std::cout << k.key << " = " << k.fallback.dump() << (k.help.empty() ? "" : "  # " + k.help) << '\n';
    return 0;
  }

  try {
    if (kind.empty()) throw omech::ValidationError("missing experiment kind");
    h::ExperimentConfig cfg;
    cfg.kind = h::parse_experiment(kind);
    cfg.output_dir = out_dir;
    if (!config_path.empty()) h::apply_yaml(cfg, read_file(config_path), config_path);
    for (const auto& o : overrides) h::apply_override(cfg, o);
    if (seed) cfg.set("seed", *seed);

    const auto report = h::run(cfg);
    for (const auto& c : report.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << c.value << "  tol=" << c.tolerance
                << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "results_digest " << report.results_digest << '\n'
              << "report " << (report.output_dir / "report.json").string() << '\n';
    return report.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return h::exit_code_for(e);
  }
}
