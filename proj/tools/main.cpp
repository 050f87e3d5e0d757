#include <cstdio>
#include <exception>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlq/config.hpp"
#include "nlq/report_io.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir,
                bool list_experiments, bool validate_only) {
  nlq::RunConfig config;
  try {
    config = nlq::parse_config(config_path);
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;

  if (list_experiments) {
    for (const auto& e : config.experiments)
      std::cout << e.name << "  (" << nlq::to_string(e.kind) << ")\n";
    return 0;
  }
  if (validate_only) {
    std::cout << "config OK: " << config.experiments.size()
              << " experiment(s)\n";
    return 0;
  }
  if (config.experiments.empty()) {
    std::cerr << "warning: no experiments configured; nothing to run\n";
    return 0;
  }

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory '" << config.output_dir
              << "': " << ec.message() << "\n";
    return 2;
  }

  std::vector<std::future<nlq::Report>> futures;
  for (const auto& e : config.experiments)
    futures.push_back(std::async(std::launch::async,
                                 [&e] { return nlq::run_experiment(e); }));

  bool all_passed = true;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    const auto& e = config.experiments[i];
    nlq::Report report;
    try {
      report = futures[i].get();
    } catch (const std::exception& ex) {
      std::cerr << e.name << ": error: " << ex.what() << "\n";
      all_passed = false;
      failed.push_back(e.name);
      continue;
    }
    const std::filesystem::path base =
        std::filesystem::path(config.output_dir) / e.name;
    nlq::write_report(base.string() + "_report.txt", report, config);
    nlq::write_series_csv(base.string() + "_series.csv", report);
    const bool pass = report.passed();
    std::cout << (pass ? "PASS" : "FAIL") << "  " << e.name << "  ("
              << nlq::to_string(e.kind) << ", "
              << report.wall_seconds << " s)\n";
    if (config.verbosity > 1)
      for (const auto& v : report.verdicts)
        std::cout << "      " << (v.pass ? "pass" : "FAIL") << "  " << v.name
                  << "  value=" << v.value << "  threshold=" << v.threshold
                  << "\n";
    if (!pass) {
      all_passed = false;
      failed.push_back(e.name);
    }
  }

  if (!all_passed) {
    std::cerr << "failed experiments:";
    for (const auto& name : failed) std::cerr << " " << name;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlinear N-particle quantum dynamics simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool list_experiments = false, validate_only = false;

  CLI::App* run = app.add_subcommand("run", "run experiments from a config");
  run->add_option("config", config_path, "config file path")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_flag("--list-experiments", list_experiments,
                "list configured experiments and exit");
  run->add_flag("--validate-only", validate_only,
                "parse and validate the config, run nothing");

  CLI11_PARSE(app, argc, argv);
  return run_command(config_path, out_dir, list_experiments, validate_only);
}
