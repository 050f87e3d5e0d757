#pragma once

#include <complex>

#include <Eigen/Dense>

namespace nlq {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using Mat = Eigen::MatrixXcd;

enum class DerivativeScheme { spectral, central_difference };

/// Uniform 1-D lattice with x_j = j * spacing. Immutable after construction.
struct Grid {
  int n_points = 0;
  double length = 0.0;
  double spacing = 0.0;
  bool periodic = true;

  double point(int j) const { return j * spacing; }
  bool operator==(const Grid&) const = default;
};

Grid make_grid(int n_points, double length, bool periodic);

/// Riemann sum: sum_j f(x_j) * spacing.
Complex integrate(const Grid& grid, const Vec& samples);
double integrate(const Grid& grid, const RealVec& samples);

/// Dense matrix acting on grid samples by plain matrix-vector product.
/// The continuum contraction "integral dy K(x,y) f(y)" is already folded
/// into the entries, so application carries no extra measure factor.
struct DiscreteOperator {
  Grid grid;
  Mat matrix;
};

/// order = 1 or 2. Spectral requires a periodic grid; the returned matrix
/// is anti-Hermitian for order 1 and Hermitian for order 2 (periodic case).
DiscreteOperator derivative_operator(const Grid& grid, int order,
                                     DerivativeScheme scheme);

/// scheme a kernel should default to on this grid.
inline DerivativeScheme default_scheme(const Grid& g) {
  return g.periodic ? DerivativeScheme::spectral
                    : DerivativeScheme::central_difference;
}

}  // namespace nlq
