#pragma once

#include <cstddef>
#include <vector>

#include "nlq/lattice.hpp"

namespace nlq {

/// Ordered list of factor grids; joint indices are row-major over the
/// factors (factor 0 is the slowest index).
struct CompositeLayout {
  std::vector<Grid> factors;

  std::size_t n_factors() const { return factors.size(); }
  int dim(std::size_t k) const { return factors[k].n_points; }
  int total_dim() const;
  int stride(std::size_t k) const;
  /// Product of factor spacings: the joint measure weight of one site.
  double measure() const;

  bool operator==(const CompositeLayout&) const = default;
};

CompositeLayout single_layout(const Grid& g);
CompositeLayout uniform_layout(const Grid& g, int n_particles);

/// Complex amplitudes over a (possibly composite) grid. Stored entries are
/// continuum samples: norm^2 = sum |psi|^2 * measure.
struct WaveFunction {
  CompositeLayout layout;
  Vec amplitudes;

  double norm() const;
};

WaveFunction make_wavefunction(CompositeLayout layout, Vec amplitudes,
                               bool normalize = true);

/// rho(a,a') as continuum-kernel samples; trace = sum_a rho(a,a) * measure.
struct DensityMatrix {
  CompositeLayout layout;
  Mat matrix;

  double trace() const;
  /// Tr(rho^2) * measure^2, in [0,1] for a physical state.
  double purity() const;
};

enum class DistanceMetric { frobenius, trace_norm };

struct StateDiagnostics {
  double trace_error = 0.0;
  double hermiticity_residual = 0.0;
  double min_eigenvalue = 0.0;
  double purity = 0.0;
};

DensityMatrix pure_projector(const WaveFunction& psi);

DensityMatrix tensor_product(const std::vector<DensityMatrix>& parts);

/// Reduce onto the factors listed in `keep` (ascending, duplicates rejected);
/// the traced indices are summed with their grid measure.
DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<std::size_t>& keep);

/// Marginal of a pure joint state without forming the joint projector.
DensityMatrix pure_marginal(const WaveFunction& psi, std::size_t k);

double distance(const DensityMatrix& rho, const DensityMatrix& sigma,
                DistanceMetric metric);

StateDiagnostics diagnostics(const DensityMatrix& rho);

}  // namespace nlq
