#include "nlq/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlq {

namespace {

constexpr const char* kEchoBegin = "--- begin config echo ---";
constexpr const char* kEchoEnd = "--- end config echo ---";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_series_csv(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,metric,value\n";
  for (const SeriesPoint& p : report.series)
    out << fmt(p.t) << "," << p.metric << "," << fmt(p.value) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SeriesPoint> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open series file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,metric,value")
    throw std::runtime_error(path + ": bad series header");
  std::vector<SeriesPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
      throw std::runtime_error(path + ": malformed row: " + line);
    SeriesPoint p;
    p.t = std::stod(line.substr(0, c1));
    p.metric = line.substr(c1 + 1, c2 - c1 - 1);
    p.value = std::stod(line.substr(c2 + 1));
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_report(const Report& report, const RunConfig& config) {
  std::ostringstream out;
  out << "experiment: " << report.experiment << "\n";
  out << "kind: " << to_string(report.kind) << "\n";
  out << "wall_seconds: " << fmt(report.wall_seconds) << "\n";
  out << "floor_activations: " << report.floor_activations << "\n";
  out << "status: " << (report.passed() ? "PASS" : "FAIL") << "\n";
  out << "\nverdicts:\n";
  for (const Verdict& v : report.verdicts)
    out << "  " << (v.pass ? "PASS" : "FAIL") << "  " << v.name
        << "  value=" << fmt(v.value) << "  threshold=" << fmt(v.threshold)
        << "\n";
  if (!report.notes.empty()) {
    out << "\nnotes:\n";
    for (const std::string& n : report.notes) out << "  " << n << "\n";
  }
  out << "\n" << kEchoBegin << "\n" << serialize(config) << kEchoEnd << "\n";
  return out.str();
}

void write_report(const std::string& path, const Report& report,
                  const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << format_report(report, config);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string extract_config_echo(const std::string& report_text) {
  const auto begin = report_text.find(kEchoBegin);
  const auto end = report_text.find(kEchoEnd);
  if (begin == std::string::npos || end == std::string::npos || end < begin)
    throw std::runtime_error("report has no config echo");
  const auto start = begin + std::string(kEchoBegin).size() + 1;
  return report_text.substr(start, end - start);
}

}  // namespace nlq
