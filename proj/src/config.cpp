#include "nlq/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nlq {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& message) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " +
                           message);
}

double parse_double(const std::string& origin, int line,
                    const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(origin, line, "key '" + key + "': not a number: '" + value + "'");
  }
}

long parse_int(const std::string& origin, int line, const std::string& key,
               const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(origin, line, "key '" + key + "': not an integer: '" + value + "'");
  }
}

bool parse_bool(const std::string& origin, int line, const std::string& key,
                const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail(origin, line, "key '" + key + "': expected true or false");
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

struct VariantOverride {
  std::size_t variant = 0;
  std::size_t subsystem = 0;
  std::string field;
  std::string value;
  int line = 0;
};

struct ExperimentDraft {
  ExperimentSpec spec;
  std::vector<VariantOverride> overrides;
  std::map<int, std::pair<std::string, int>> partitions;  // idx -> (text, ln)
  bool state_seed_set = false;
  int header_line = 0;
};

void apply_subsystem_field(const std::string& origin, int line,
                           SubsystemConfig& sub, const std::string& field,
                           const std::string& value,
                           const std::string& full_key) {
  if (field == "potential") {
    sub.potential = value;
  } else if (field == "omega") {
    sub.omega = parse_double(origin, line, full_key, value);
  } else if (field == "nonlinearity") {
    sub.nonlinearity = value;
  } else if (field == "coupling") {
    sub.coupling = parse_double(origin, line, full_key, value);
  } else if (field == "dg") {
    const auto toks = split_ws(value);
    if (toks.size() != 5)
      fail(origin, line, "key '" + full_key + "': expected 5 coefficients");
    for (std::size_t i = 0; i < 5; ++i)
      sub.dg[i] = parse_double(origin, line, full_key, toks[i]);
  } else {
    fail(origin, line, "unknown key '" + full_key + "'");
  }
}

void apply_experiment_key(const std::string& origin, int line,
                          ExperimentDraft& draft, const std::string& key,
                          const std::string& value) {
  ExperimentSpec& e = draft.spec;
  if (key == "kind") {
    const auto k = experiment_kind_from_string(value);
    if (!k) fail(origin, line, "unknown experiment kind '" + value + "'");
    e.kind = *k;
  } else if (key == "n_points") {
    e.n_points = int(parse_int(origin, line, key, value));
  } else if (key == "length") {
    e.length = parse_double(origin, line, key, value);
  } else if (key == "particles") {
    e.n_particles = int(parse_int(origin, line, key, value));
  } else if (key == "dt") {
    e.integrator.dt = parse_double(origin, line, key, value);
  } else if (key == "t_final") {
    e.integrator.t_final = parse_double(origin, line, key, value);
  } else if (key == "stride") {
    e.integrator.observer_stride = int(parse_int(origin, line, key, value));
  } else if (key == "scheme") {
    if (value == "rk4")
      e.integrator.scheme = IntegratorScheme::rk4;
    else if (value == "rk4_step_doubling")
      e.integrator.scheme = IntegratorScheme::rk4_step_doubling;
    else
      fail(origin, line, "unknown integrator scheme '" + value + "'");
  } else if (key == "error_tolerance") {
    e.integrator.error_tolerance = parse_double(origin, line, key, value);
  } else if (key == "dt_min") {
    e.integrator.dt_min = parse_double(origin, line, key, value);
  } else if (key == "threshold") {
    e.threshold_override = parse_double(origin, line, key, value);
  } else if (key == "separation_factor") {
    e.separation_factor = parse_double(origin, line, key, value);
  } else if (key == "expect_violation") {
    e.expect_violation = parse_bool(origin, line, key, value);
  } else if (key == "check_tolerance") {
    e.check_tolerance = parse_double(origin, line, key, value);
  } else if (key == "state") {
    e.state.kind = value;
  } else if (key == "state.width") {
    e.state.width = parse_double(origin, line, key, value);
  } else if (key == "state.separation") {
    e.state.separation = parse_double(origin, line, key, value);
  } else if (key == "state.boost") {
    e.state.boost = parse_double(origin, line, key, value);
  } else if (key == "state.offset") {
    e.state.offset = parse_double(origin, line, key, value);
  } else if (key == "state.seed") {
    e.state.seed = unsigned(parse_int(origin, line, key, value));
    draft.state_seed_set = true;
  } else if (key == "state.rank") {
    e.state.rank = int(parse_int(origin, line, key, value));
  } else if (key == "state.wave_numbers") {
    e.state.wave_numbers.clear();
    for (const auto& tok : split_ws(value))
      e.state.wave_numbers.push_back(int(parse_int(origin, line, key, tok)));
  } else if (key == "state.custom") {
    e.state.custom_amplitudes.clear();
    for (const auto& tok : split_ws(value)) {
      const auto comma = tok.find(',');
      if (comma == std::string::npos)
        fail(origin, line, "key '" + key + "': expected re,im pairs");
      e.state.custom_amplitudes.emplace_back(
          parse_double(origin, line, key, tok.substr(0, comma)),
          parse_double(origin, line, key, tok.substr(comma + 1)));
    }
  } else if (key.rfind("subsystem.", 0) == 0) {
    const std::string rest = key.substr(10);
    const auto dot = rest.find('.');
    if (dot == std::string::npos)
      fail(origin, line, "unknown key '" + key + "'");
    const std::size_t idx =
        std::size_t(parse_int(origin, line, key, rest.substr(0, dot)));
    if (e.subsystems.size() <= idx) e.subsystems.resize(idx + 1);
    apply_subsystem_field(origin, line, e.subsystems[idx],
                          rest.substr(dot + 1), value, key);
  } else if (key.rfind("variant.", 0) == 0) {
    const std::string rest = key.substr(8);
    const auto dot = rest.find('.');
    if (dot == std::string::npos || rest.compare(dot + 1, 10, "subsystem."))
      fail(origin, line, "unknown key '" + key + "'");
    const std::string sub_rest = rest.substr(dot + 11);
    const auto sub_dot = sub_rest.find('.');
    if (sub_dot == std::string::npos)
      fail(origin, line, "unknown key '" + key + "'");
    VariantOverride ov;
    ov.variant =
        std::size_t(parse_int(origin, line, key, rest.substr(0, dot)));
    ov.subsystem = std::size_t(
        parse_int(origin, line, key, sub_rest.substr(0, sub_dot)));
    ov.field = sub_rest.substr(sub_dot + 1);
    ov.value = value;
    ov.line = line;
    draft.overrides.push_back(std::move(ov));
  } else if (key.rfind("partition.", 0) == 0) {
    const int idx = int(parse_int(origin, line, key, key.substr(10)));
    draft.partitions[idx] = {value, line};
  } else {
    fail(origin, line, "unknown key '" + key + "'");
  }
}

ExperimentSpec finish_experiment(const std::string& origin,
                                 ExperimentDraft draft, double hbar,
                                 double mass, unsigned run_seed) {
  ExperimentSpec& e = draft.spec;
  e.hbar = hbar;
  e.mass = mass;
  if (!draft.state_seed_set) e.state.seed = run_seed;
  if (e.n_particles < 1)
    fail(origin, draft.header_line,
         "experiment '" + e.name + "': particles must be >= 1");
  if (e.subsystems.size() > std::size_t(e.n_particles))
    fail(origin, draft.header_line,
         "experiment '" + e.name + "': subsystem index out of range");
  e.subsystems.resize(std::size_t(e.n_particles));

  std::size_t n_variants = 0;
  for (const auto& ov : draft.overrides)
    n_variants = std::max(n_variants, ov.variant + 1);
  e.variants.assign(n_variants, e.subsystems);
  for (const auto& ov : draft.overrides) {
    if (ov.subsystem >= e.variants[ov.variant].size())
      fail(origin, ov.line, "variant subsystem index out of range");
    apply_subsystem_field(origin, ov.line,
                          e.variants[ov.variant][ov.subsystem], ov.field,
                          ov.value, "variant");
  }

  for (const auto& [idx, entry] : draft.partitions) {
    const auto& [text, line] = entry;
    std::vector<std::vector<std::size_t>> partition(1);
    for (const auto& tok : split_ws(text)) {
      if (tok == "|") {
        partition.emplace_back();
      } else {
        partition.back().push_back(
            std::size_t(parse_int(origin, line, "partition", tok)));
      }
    }
    e.partitions.push_back(std::move(partition));
  }

  try {
    validate(e);
  } catch (const std::exception& ex) {
    fail(origin, draft.header_line,
         "experiment '" + e.name + "': " + ex.what());
  }
  return std::move(e);
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig config;
  std::vector<ExperimentDraft> drafts;

  enum class Section { none, units, run, experiment };
  Section section = Section::none;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  unsigned run_seed_default = config.seed;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "unterminated section header");
      const std::string header = trim(s.substr(1, s.size() - 2));
      if (header == "units") {
        section = Section::units;
      } else if (header == "run") {
        section = Section::run;
      } else if (header.rfind("experiment", 0) == 0) {
        const std::string name = trim(header.substr(10));
        if (name.empty())
          fail(origin, line, "experiment section needs a name");
        drafts.emplace_back();
        drafts.back().spec.name = name;
        drafts.back().header_line = line;
        section = Section::experiment;
      } else {
        fail(origin, line, "unknown section '" + header + "'");
      }
      continue;
    }

    const auto eq = s.find('=');
    if (eq == std::string::npos)
      fail(origin, line, "expected key = value, got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(origin, line, "empty key");

    switch (section) {
      case Section::none:
        fail(origin, line, "key '" + key + "' outside any section");
      case Section::units:
        if (key == "hbar")
          config.hbar = parse_double(origin, line, key, value);
        else if (key == "mass")
          config.mass = parse_double(origin, line, key, value);
        else
          fail(origin, line, "unknown key '" + key + "' in [units]");
        break;
      case Section::run:
        if (key == "output_dir") {
          config.output_dir = value;
        } else if (key == "seed") {
          config.seed = unsigned(parse_int(origin, line, key, value));
          run_seed_default = config.seed;
        } else if (key == "verbosity") {
          config.verbosity = int(parse_int(origin, line, key, value));
        } else {
          fail(origin, line, "unknown key '" + key + "' in [run]");
        }
        break;
      case Section::experiment:
        apply_experiment_key(origin, line, drafts.back(), key, value);
        break;
    }
  }

  for (auto& draft : drafts)
    config.experiments.push_back(finish_experiment(
        origin, std::move(draft), config.hbar, config.mass,
        run_seed_default));
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_subsystem(std::ostream& out, const std::string& prefix,
                     const SubsystemConfig& s) {
  out << prefix << ".potential = " << s.potential << "\n";
  out << prefix << ".omega = " << fmt(s.omega) << "\n";
  out << prefix << ".nonlinearity = " << s.nonlinearity << "\n";
  out << prefix << ".coupling = " << fmt(s.coupling) << "\n";
  out << prefix << ".dg =";
  for (double c : s.dg) out << " " << fmt(c);
  out << "\n";
}

}  // namespace

std::string serialize(const RunConfig& config) {
  std::ostringstream out;
  out << "[units]\n";
  out << "hbar = " << fmt(config.hbar) << "\n";
  out << "mass = " << fmt(config.mass) << "\n\n";
  out << "[run]\n";
  out << "output_dir = " << config.output_dir << "\n";
  out << "seed = " << config.seed << "\n";
  out << "verbosity = " << config.verbosity << "\n";

  for (const auto& e : config.experiments) {
    out << "\n[experiment " << e.name << "]\n";
    out << "kind = " << to_string(e.kind) << "\n";
    out << "n_points = " << e.n_points << "\n";
    out << "length = " << fmt(e.length) << "\n";
    out << "particles = " << e.n_particles << "\n";
    out << "dt = " << fmt(e.integrator.dt) << "\n";
    out << "t_final = " << fmt(e.integrator.t_final) << "\n";
    out << "stride = " << e.integrator.observer_stride << "\n";
    out << "scheme = "
        << (e.integrator.scheme == IntegratorScheme::rk4
                ? "rk4"
                : "rk4_step_doubling")
        << "\n";
    out << "error_tolerance = " << fmt(e.integrator.error_tolerance) << "\n";
    out << "dt_min = " << fmt(e.integrator.dt_min) << "\n";
    out << "threshold = " << fmt(e.threshold_override) << "\n";
    out << "separation_factor = " << fmt(e.separation_factor) << "\n";
    out << "expect_violation = " << (e.expect_violation ? "true" : "false")
        << "\n";
    out << "check_tolerance = " << fmt(e.check_tolerance) << "\n";
    out << "state = " << e.state.kind << "\n";
    out << "state.width = " << fmt(e.state.width) << "\n";
    out << "state.separation = " << fmt(e.state.separation) << "\n";
    out << "state.boost = " << fmt(e.state.boost) << "\n";
    out << "state.offset = " << fmt(e.state.offset) << "\n";
    out << "state.seed = " << e.state.seed << "\n";
    out << "state.rank = " << e.state.rank << "\n";
    out << "state.wave_numbers =";
    for (int m : e.state.wave_numbers) out << " " << m;
    out << "\n";
    if (!e.state.custom_amplitudes.empty()) {
      out << "state.custom =";
      for (const Complex& c : e.state.custom_amplitudes)
        out << " " << fmt(c.real()) << "," << fmt(c.imag());
      out << "\n";
    }
    for (std::size_t k = 0; k < e.subsystems.size(); ++k)
      write_subsystem(out, "subsystem." + std::to_string(k),
                      e.subsystems[k]);
    for (std::size_t v = 0; v < e.variants.size(); ++v)
      for (std::size_t k = 0; k < e.variants[v].size(); ++k)
        write_subsystem(out,
                        "variant." + std::to_string(v) + ".subsystem." +
                            std::to_string(k),
                        e.variants[v][k]);
    for (std::size_t p = 0; p < e.partitions.size(); ++p) {
      out << "partition." << p << " =";
      for (std::size_t g = 0; g < e.partitions[p].size(); ++g) {
        if (g) out << " |";
        for (std::size_t k : e.partitions[p][g]) out << " " << k;
      }
      out << "\n";
    }
  }
  return out.str();
}

bool equivalent(const RunConfig& a, const RunConfig& b) {
  return a.hbar == b.hbar && a.mass == b.mass &&
         a.output_dir == b.output_dir && a.seed == b.seed &&
         a.verbosity == b.verbosity && a.experiments == b.experiments;
}

}  // namespace nlq
