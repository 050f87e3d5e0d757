#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "nlq/states.hpp"

namespace nlq {

/// Diagonal data a nonlinearity is built from. For a 1-particle density
/// matrix: f = diag(rho), c[m] = diag(D^m rho), df = D f, d2f = L f.
/// For the naive joint-coordinate recipe the same fields are computed from
/// the joint wavefunction with the derivative acting on one factor index,
/// and `site` maps each entry to its coordinate index on that factor.
struct DiagonalData {
  RealVec f;
  RealVec df;
  RealVec d2f;
  std::map<int, Vec> c;  // derivative order -> contraction
  Eigen::VectorXi site;
  double f_max = 0.0;

  const Vec& grad() const { return c.at(1); }
  const Vec& lap() const { return c.at(2); }
};

struct KernelEval {
  Mat op;
  long floor_activations = 0;
};

/// Rule rho -> Hermitian operator on one grid. Immutable; evaluation is pure.
/// Every kernel splits into a rho-independent matrix part and a real
/// diagonal built from DiagonalData; evaluate() assembles both. The naive
/// N-particle recipe reuses nonlinear_diagonal() with joint-coordinate data.
class NonlinearKernel {
 public:
  explicit NonlinearKernel(const Grid& grid, DerivativeScheme scheme);
  virtual ~NonlinearKernel() = default;

  const Grid& grid() const { return grid_; }
  DerivativeScheme scheme() const { return scheme_; }
  const Mat& d1() const { return d1_; }
  const Mat& d2() const { return d2_; }

  virtual Mat linear_part() const;
  virtual RealVec nonlinear_diagonal(const DiagonalData& data,
                                     long& floor_activations) const;
  /// Contraction orders beyond {1,2} the diagonal rule needs.
  virtual std::vector<int> extra_contraction_orders() const { return {}; }

  KernelEval evaluate(const DensityMatrix& rho) const;

  DiagonalData data_from_density(const DensityMatrix& rho) const;

 protected:
  Grid grid_;
  DerivativeScheme scheme_;
  Mat d1_, d2_;
};

using KernelPtr = std::shared_ptr<const NonlinearKernel>;

struct KernelOptions {
  DerivativeScheme scheme = DerivativeScheme::spectral;
  bool scheme_set = false;  // when false, default_scheme(grid) applies
  double eps_rel = 1e-12;   // floor: f -> max(f, eps_rel * max f)
};

/// j(x) = Im diag(D rho); equals Im(conj(psi) D psi) on pure states.
RealVec current_density(const DensityMatrix& rho, const Grid& grid,
                        const KernelOptions& opts = {});

KernelPtr kinetic_kernel(const Grid& grid, double mass, double hbar,
                         const KernelOptions& opts = {});
KernelPtr potential_kernel(const Grid& grid, const RealVec& v);
KernelPtr haag_bannier_kernel(const Grid& grid, const RealVec& a,
                              const KernelOptions& opts = {});
KernelPtr nls_kernel(const Grid& grid, double g);
KernelPtr bbm_kernel(const Grid& grid, double b,
                     const KernelOptions& opts = {});
KernelPtr doebner_goldin_kernel(const Grid& grid,
                                const std::array<double, 5>& c,
                                const KernelOptions& opts = {});
KernelPtr twarock_kernel(const Grid& grid, double coupling = 1.0,
                         const KernelOptions& opts = {});

/// F maps the contractions diag(D^m rho), m in `orders`, to a complex value
/// of joint degree n; output = Re F / f^n after an imaginary-part check.
using HomogeneousFunctional =
    std::function<Complex(std::span<const Complex>)>;
KernelPtr homogeneous_kernel(const Grid& grid, HomogeneousFunctional f,
                             std::vector<int> orders, int n,
                             const KernelOptions& opts = {});

KernelPtr compose_kernels(const Grid& grid, std::vector<KernelPtr> parts);

}  // namespace nlq
