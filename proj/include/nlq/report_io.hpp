#pragma once

#include <string>

#include "nlq/config.hpp"

namespace nlq {

/// CSV with header `t,metric,value`; values at 17 significant digits so the
/// file round-trips bit-exactly.
void write_series_csv(const std::string& path, const Report& report);
std::vector<SeriesPoint> read_series_csv(const std::string& path);

/// Structured text report: verdicts, notes, runtime metadata and a config
/// echo that re-parses to an equivalent RunConfig.
std::string format_report(const Report& report, const RunConfig& config);
void write_report(const std::string& path, const Report& report,
                  const RunConfig& config);

/// Extract the config echo embedded by format_report.
std::string extract_config_echo(const std::string& report_text);

}  // namespace nlq
