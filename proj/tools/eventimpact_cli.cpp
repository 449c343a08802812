// Command-line pipeline driver: config in, staged deterministic outputs and
// manifests out. Exit codes: 0 success, 2 config error, 3 data / missing
// stage error, 4 numerical failure. Errors print one machine-parsable line.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>

#include "eventimpact/config.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/pipeline.hpp"
#include "eventimpact/version.hpp"

namespace {

std::string one_line(std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::replace(msg.begin(), msg.end(), '\r', ' ');
  return msg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-impact analysis of a dated event on daily "
               "electricity demand"};
  app.set_version_flag("--version", eventimpact::kVersion);

  std::string config_path;
  std::string out_dir = "out";
  std::string stage = "all";
  std::uint64_t seed = 0;
  bool emit_template = false;

  app.add_option("--config", config_path,
                 "Run configuration (JSON, // comments allowed)");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "Seed (overrides the config's seed)");
  app.add_option("--out", out_dir, "Output directory")
      ->capture_default_str();
  app.add_option("--stage", stage,
                 "ingest|align|fit|impact|placebo|gmm|seasons|all")
      ->capture_default_str();
  app.add_flag("--template", emit_template,
               "Print a fully commented config template and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "E_CONFIG: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (emit_template) {
      std::cout << eventimpact::config_template();
      return 0;
    }
    if (config_path.empty()) {
      throw eventimpact::ConfigError("--config is required (or use "
                                     "--template to print a starting point)");
    }
    eventimpact::PipelineConfig cfg = eventimpact::load_config(config_path);
    if (seed_opt->count() > 0) {
      cfg.seed = seed;
      cfg.seed_set = true;
    }
    eventimpact::run_stage(cfg, stage, out_dir);
    return 0;
  } catch (const eventimpact::ConfigError& e) {
    std::cerr << "E_CONFIG: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const eventimpact::MissingStageError& e) {
    std::cerr << "E_MISSING_STAGE: " << one_line(e.what()) << "\n";
    return 3;
  } catch (const eventimpact::DataError& e) {
    std::cerr << "E_DATA: " << one_line(e.what()) << "\n";
    return 3;
  } catch (const eventimpact::NumericError& e) {
    std::cerr << "E_NUMERIC: " << one_line(e.what()) << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << one_line(e.what()) << "\n";
    return 4;
  }
}
