#include "nlq/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nlq {

Grid make_grid(int n_points, double length, bool periodic) {
  if (n_points < 4)
    throw std::invalid_argument("make_grid: n_points must be >= 4");
  if (!(length > 0.0))
    throw std::invalid_argument("make_grid: length must be positive");
  Grid g;
  g.n_points = n_points;
  g.length = length;
  g.spacing = length / n_points;
  g.periodic = periodic;
  return g;
}

Complex integrate(const Grid& grid, const Vec& samples) {
  if (samples.size() != grid.n_points)
    throw std::invalid_argument("integrate: sample length mismatch");
  return samples.sum() * grid.spacing;
}

double integrate(const Grid& grid, const RealVec& samples) {
  if (samples.size() != grid.n_points)
    throw std::invalid_argument("integrate: sample length mismatch");
  return samples.sum() * grid.spacing;
}

namespace {

// D = U diag(symbol) U^dagger with U the unitary DFT. For order 1 the
// Nyquist mode gets symbol 0 (keeps the matrix anti-Hermitian and real
// derivatives real); for order 2 it gets -k_nyq^2.
Mat spectral_matrix(const Grid& g, int order) {
  const int n = g.n_points;
  const double two_pi = 2.0 * std::numbers::pi;
  Vec symbol(n);
  for (int m = 0; m < n; ++m) {
    int mm = (m <= n / 2) ? m : m - n;
    double k = two_pi * mm / g.length;
    if (order == 1) {
      if (2 * m == n) k = 0.0;
      symbol(m) = Complex(0.0, k);
    } else {
      if (2 * m == n) k = two_pi * (n / 2) / g.length;
      symbol(m) = Complex(-k * k, 0.0);
    }
  }
  Mat u(n, n);
  const double norm = 1.0 / std::sqrt(double(n));
  for (int j = 0; j < n; ++j)
    for (int m = 0; m < n; ++m)
      u(j, m) = std::polar(norm, two_pi * j * m / n);
  return u * symbol.asDiagonal() * u.adjoint();
}

Mat central_matrix(const Grid& g, int order) {
  const int n = g.n_points;
  const double h = g.spacing;
  Mat d = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const int jp = j + 1, jm = j - 1;
    const bool has_p = g.periodic || jp < n;
    const bool has_m = g.periodic || jm >= 0;
    const int p = (jp + n) % n, m = (jm + n) % n;
    if (order == 1) {
      if (has_p) d(j, p) += 0.5 / h;
      if (has_m) d(j, m) -= 0.5 / h;
    } else {
      d(j, j) -= 2.0 / (h * h);
      if (has_p) d(j, p) += 1.0 / (h * h);
      if (has_m) d(j, m) += 1.0 / (h * h);
    }
  }
  return d;
}

}  // namespace

DiscreteOperator derivative_operator(const Grid& grid, int order,
                                     DerivativeScheme scheme) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("derivative_operator: order must be 1 or 2");
  if (scheme == DerivativeScheme::spectral && !grid.periodic)
    throw std::invalid_argument(
        "derivative_operator: spectral scheme requires a periodic grid");
  Mat m = (scheme == DerivativeScheme::spectral) ? spectral_matrix(grid, order)
                                                 : central_matrix(grid, order);
  return DiscreteOperator{grid, std::move(m)};
}

}  // namespace nlq
