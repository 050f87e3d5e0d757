#pragma once

#include <string>

#include "nlq/extension.hpp"

namespace nlq {

enum class IntegratorScheme { rk4, rk4_step_doubling };

struct IntegratorConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  IntegratorScheme scheme = IntegratorScheme::rk4;
  double error_tolerance = 1e-9;  // step-doubling only
  int observer_stride = 1;
  double dt_min = 1e-9;

  bool operator==(const IntegratorConfig&) const = default;
};

void validate(const IntegratorConfig& cfg);

/// Diagnostics recorded with each snapshot. No quantity is ever repaired;
/// these are measurements of the raw integrated state.
struct Monitors {
  double trace_error = 0.0;
  double purity = 0.0;
  double hermiticity_residual = 0.0;
  double norm_error = 0.0;  // pure-state runs
  long floor_activations = 0;  // cumulative over the run so far
};

struct DensityTrajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> snapshots;
  std::vector<Monitors> monitors;
  bool aborted = false;
  double abort_time = 0.0;
  std::string abort_reason;
};

struct WaveTrajectory {
  std::vector<double> times;
  std::vector<WaveFunction> snapshots;
  std::vector<Monitors> monitors;
  bool aborted = false;
  double abort_time = 0.0;
  std::string abort_reason;
};

/// d(rho)/dt = (H(rho) rho - rho H(rho)) / (i hbar), H built per `spec`.
Mat lvn_rhs(const DensityMatrix& rho, const ExtensionSpec& spec, double hbar,
            long* floor_activations = nullptr);

/// d(psi)/dt = H psi / (i hbar); H from the marginals of |psi><psi|
/// (mode=correct) or from the joint-coordinate recipe (mode=naive).
Vec schrodinger_rhs(const WaveFunction& psi, const ExtensionSpec& spec,
                    double hbar, long* floor_activations = nullptr);

DensityTrajectory evolve(const DensityMatrix& rho0, const ExtensionSpec& spec,
                         const IntegratorConfig& cfg, double hbar = 1.0);

WaveTrajectory evolve(const WaveFunction& psi0, const ExtensionSpec& spec,
                      const IntegratorConfig& cfg, double hbar = 1.0);

}  // namespace nlq
