#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "nlq/states.hpp"

namespace nlq::testutil {

inline double wavenumber(const Grid& g, int mode) {
  return 2.0 * std::numbers::pi * mode / g.length;
}

inline WaveFunction plane_wave(const Grid& g, int mode) {
  Vec amp(g.n_points);
  const double k = wavenumber(g, mode);
  for (int j = 0; j < g.n_points; ++j)
    amp(j) = std::polar(1.0 / std::sqrt(g.length), k * g.point(j));
  return WaveFunction{single_layout(g), amp};
}

inline WaveFunction gaussian(const Grid& g, double center, double width,
                             double boost = 0.0) {
  Vec amp(g.n_points);
  for (int j = 0; j < g.n_points; ++j) {
    const double x = g.point(j) - center;
    amp(j) = std::polar(std::exp(-x * x / (4.0 * width * width)),
                        boost * g.point(j));
  }
  return make_wavefunction(single_layout(g), amp);
}

inline WaveFunction random_state(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Vec amp(g.n_points);
  for (int j = 0; j < g.n_points; ++j) amp(j) = Complex(dist(rng), dist(rng));
  return make_wavefunction(single_layout(g), amp);
}

/// Random mixed state with strictly positive diagonal (generically).
inline DensityMatrix random_mixed(const Grid& g, unsigned seed, int rank = 3) {
  Mat m = Mat::Zero(g.n_points, g.n_points);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> wdist(0.2, 1.0);
  double wsum = 0.0;
  for (int r = 0; r < rank; ++r) {
    const WaveFunction psi = random_state(g, seed + 1000 * (r + 1));
    const double w = wdist(rng);
    m += w * (psi.amplitudes * psi.amplitudes.adjoint());
    wsum += w;
  }
  return DensityMatrix{single_layout(g), m / wsum};
}

/// Two orthonormal modes: Gram-Schmidt on displaced (optionally boosted)
/// Gaussians centered at c -/+ separation/2.
inline std::pair<WaveFunction, WaveFunction> orthonormal_gaussians(
    const Grid& g, double separation, double width, double boost = 0.0) {
  const double c = g.length / 2.0;
  WaveFunction a = gaussian(g, c - separation / 2.0, width, boost);
  WaveFunction b = gaussian(g, c + separation / 2.0, width, -boost);
  const Complex overlap =
      integrate(g, Vec(a.amplitudes.conjugate().cwiseProduct(b.amplitudes)));
  Vec bb = b.amplitudes - overlap * a.amplitudes;
  return {a, make_wavefunction(single_layout(g), bb)};
}

/// (phi0 x phi0 + phi1 x phi1)/sqrt(2) on a 2-particle layout.
inline WaveFunction schmidt_rank2(const Grid& g, double separation,
                                  double width, double boost = 0.0) {
  auto [p0, p1] = orthonormal_gaussians(g, separation, width, boost);
  const int n = g.n_points;
  Vec amp(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      amp(i * n + j) = (p0.amplitudes(i) * p0.amplitudes(j) +
                        p1.amplitudes(i) * p1.amplitudes(j)) /
                       std::sqrt(2.0);
  return WaveFunction{uniform_layout(g, 2), amp};
}

}  // namespace nlq::testutil
