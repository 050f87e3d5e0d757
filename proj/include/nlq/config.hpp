#pragma once

#include <string>

#include "nlq/harness.hpp"

namespace nlq {

/// A full run: global units, output plumbing, and the experiment list.
struct RunConfig {
  double hbar = 1.0;
  double mass = 1.0;
  std::string output_dir = "out";
  unsigned seed = 1;
  int verbosity = 1;
  std::vector<ExperimentSpec> experiments;
};

/// Parse the flat key=value config format. Sections are [units], [run] and
/// [experiment NAME]; unknown keys are hard errors with line diagnostics.
/// Every experiment is validated before the config is returned (fail-fast).
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<string>");

/// Inverse of parse_config_text: the output re-parses to an equivalent run.
std::string serialize(const RunConfig& config);

bool equivalent(const RunConfig& a, const RunConfig& b);

}  // namespace nlq
