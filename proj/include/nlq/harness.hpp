#pragma once

#include <optional>
#include <string>

#include "nlq/dynamics.hpp"

namespace nlq {

enum class ExperimentKind {
  complete_separability,
  no_signaling,
  naive_contrast,
  stage_consistency,
  linear_limit,
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_kind_from_string(
    const std::string& name);

/// One subsystem's Hamiltonian recipe. The kinetic term is always present;
/// `potential` adds a rho-independent diagonal and `nonlinearity` one of the
/// catalogue diagonals with `coupling` as its strength (doebner_goldin takes
/// the five coefficients from `dg` instead).
struct SubsystemConfig {
  std::string potential = "none";     // none | harmonic
  double omega = 1.0;                 // harmonic frequency
  std::string nonlinearity = "none";  // none | haag_bannier | nls | bbm |
                                      // doebner_goldin | twarock
  double coupling = 0.0;
  std::array<double, 5> dg{};

  bool operator==(const SubsystemConfig&) const = default;
};

/// Named initial states. Pure recipes build a wavefunction (projected for
/// density-matrix runs); random_mixed draws a seeded rank-`rank` mixture on
/// the joint space.
struct StateRecipe {
  std::string kind = "product_gaussians";  // product_gaussians |
                                           // schmidt_rank2 |
                                           // plane_wave_mixture |
                                           // random_mixed | custom
  double width = 1.0;
  double separation = 2.0;
  double boost = 0.0;
  double offset = 0.0;  // center displacement from the box midpoint
  std::vector<int> wave_numbers = {1, 2};
  unsigned seed = 1;
  int rank = 3;
  std::vector<Complex> custom_amplitudes;

  bool operator==(const StateRecipe&) const = default;
};

struct ExperimentSpec {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::complete_separability;
  int n_points = 16;
  double length = 8.0;
  int n_particles = 2;
  double hbar = 1.0;
  double mass = 1.0;
  StateRecipe state;
  std::vector<SubsystemConfig> subsystems;  // one per particle
  /// Full per-subsystem configurations for no_signaling / naive_contrast;
  /// each variant must agree with `subsystems` on subsystem 0.
  std::vector<std::vector<SubsystemConfig>> variants;
  IntegratorConfig integrator;
  /// When > 0, replaces the ladder-derived PASS threshold.
  double threshold_override = 0.0;
  double separation_factor = 1e3;  // naive_contrast
  bool expect_violation = true;    // naive_contrast
  double check_tolerance = 1e-4;   // linear_limit
  /// stage_consistency partitions; empty = all two-block partitions plus
  /// the fully split one.
  std::vector<std::vector<std::vector<std::size_t>>> partitions;

  bool operator==(const ExperimentSpec&) const = default;
};

void validate(const ExperimentSpec& spec);

struct SeriesPoint {
  double t = 0.0;
  std::string metric;
  double value = 0.0;
};

struct Verdict {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct Report {
  std::string experiment;
  ExperimentKind kind = ExperimentKind::complete_separability;
  std::vector<SeriesPoint> series;
  std::vector<Verdict> verdicts;
  long floor_activations = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> notes;

  bool passed() const;
};

KernelPtr build_kernel(const Grid& grid, const SubsystemConfig& cfg,
                       double hbar, double mass);
/// Pure recipes only; throws for random_mixed.
WaveFunction build_pure_state(const Grid& grid, const StateRecipe& recipe,
                              int n_particles);
DensityMatrix build_state(const Grid& grid, const StateRecipe& recipe,
                          int n_particles);

Report run_complete_separability(const ExperimentSpec& spec);
Report run_no_signaling(const ExperimentSpec& spec);
Report run_naive_contrast(const ExperimentSpec& spec);
Report run_stage_consistency(const ExperimentSpec& spec);
Report run_linear_limit(const ExperimentSpec& spec);

/// Dispatch on spec.kind.
Report run_experiment(const ExperimentSpec& spec);

}  // namespace nlq
