// Command line front end: config-driven experiment runs, the fast selftest
// suite and access to the bundled example configs.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mstop/errors.hpp"
#include "mstop/experiment.hpp"
#include "mstop/selftest.hpp"
#include "mstop/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::filesystem::path output_root() {
  if (const char* env = std::getenv("MSTOP_OUTPUT_ROOT")) {
    return std::filesystem::path(env);
  }
  return std::filesystem::path("out");
}

int run_command(const std::string& config_path) {
  const mstop::ExperimentConfig cfg = mstop::load_experiment_config(config_path);
  const std::filesystem::path root = output_root();
  const mstop::ExperimentResult result = mstop::run_experiment(cfg, root);
  std::cout << "artifacts written to " << result.out_dir.string() << "\n";
  return kExitOk;
}

int selftest_command() {
  const auto results = mstop::run_selftest();
  mstop::print_results(results, std::cout);
  if (!mstop::all_passed(results)) {
    std::cerr << "selftest failed\n";
    return kExitNumeric;
  }
  std::cout << "selftest passed (" << results.size() << " checks)\n";
  return kExitOk;
}

int print_config_command(const std::string& name) {
  std::cout << mstop::bundled_config(name);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mstop - multiple optimal stopping via regressed backward induction"};
  app.set_version_flag("--version", std::string("mstop ") + mstop::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "path to a .cfg experiment file")
      ->required();

  auto* selftest = app.add_subcommand(
      "selftest", "run the fast oracle-equivalence and invariant suites");

  std::string bundle_name;
  auto* print_config = app.add_subcommand(
      "print-config", "print a bundled experiment config to stdout");
  std::string names;
  for (const auto& n : mstop::bundled_config_names()) {
    names += names.empty() ? n : (", " + n);
  }
  print_config->add_option("name", bundle_name, "one of: " + names)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path);
    if (selftest->parsed()) return selftest_command();
    if (print_config->parsed()) return print_config_command(bundle_name);
  } catch (const mstop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mstop::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
