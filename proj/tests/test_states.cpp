#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlq/states.hpp"
#include "test_util.hpp"

using namespace nlq;
namespace tu = nlq::testutil;

namespace {

const Grid kGrid = make_grid(8, 4.0, true);

WaveFunction uniform_state(const Grid& g) {
  return WaveFunction{single_layout(g),
                      Vec::Constant(g.n_points, 1.0 / std::sqrt(g.length))};
}

}  // namespace

TEST_CASE("pure_projector of the uniform state is 1/L everywhere") {
  const DensityMatrix rho = pure_projector(uniform_state(kGrid));
  CHECK((rho.matrix.array() - 1.0 / kGrid.length).abs().maxCoeff() < 1e-14);
  CHECK(rho.trace() == doctest::Approx(1.0));
  CHECK(rho.purity() == doctest::Approx(1.0));
}

TEST_CASE("pure_projector of a grid delta is a single diagonal entry") {
  Vec amp = Vec::Zero(kGrid.n_points);
  amp(3) = 1.0 / std::sqrt(kGrid.spacing);
  const DensityMatrix rho =
      pure_projector(WaveFunction{single_layout(kGrid), amp});
  CHECK(rho.trace() == doctest::Approx(1.0));
  for (int i = 0; i < kGrid.n_points; ++i)
    for (int j = 0; j < kGrid.n_points; ++j)
      if (i != 3 || j != 3) CHECK(std::abs(rho.matrix(i, j)) == 0.0);
}

TEST_CASE("pure_projector rejects unnormalized input") {
  WaveFunction psi = uniform_state(kGrid);
  psi.amplitudes *= 2.0;
  CHECK_THROWS_AS(pure_projector(psi), std::invalid_argument);
}

TEST_CASE("tensor_product: trace and purity are multiplicative") {
  const DensityMatrix r1 = tu::random_mixed(kGrid, 7);
  const DensityMatrix r2 = tu::random_mixed(kGrid, 9);
  const DensityMatrix r12 = tensor_product({r1, r2});
  CHECK(r12.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r12.purity() == doctest::Approx(r1.purity() * r2.purity()));
  CHECK(r12.layout.n_factors() == 2);
}

TEST_CASE("partial_trace recovers factors of a product state exactly") {
  const DensityMatrix r1 = tu::random_mixed(kGrid, 3);
  const DensityMatrix r2 = tu::random_mixed(kGrid, 5);
  const DensityMatrix r12 = tensor_product({r1, r2});
  const DensityMatrix back1 = partial_trace(r12, {0});
  const DensityMatrix back2 = partial_trace(r12, {1});
  CHECK((back1.matrix - r1.matrix).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((back2.matrix - r2.matrix).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("partial_trace with keep=all is the identity map") {
  const DensityMatrix r12 =
      tensor_product({tu::random_mixed(kGrid, 1), tu::random_mixed(kGrid, 2)});
  const DensityMatrix same = partial_trace(r12, {0, 1});
  CHECK((same.matrix - r12.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partial_trace of a Schmidt-rank-2 state gives purity 1/2") {
  const DensityMatrix joint =
      pure_projector(tu::schmidt_rank2(kGrid, 1.6, 0.5));
  for (std::size_t keep : {std::size_t(0), std::size_t(1)}) {
    const DensityMatrix red = partial_trace(joint, {keep});
    CHECK(red.trace() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(red.purity() == doctest::Approx(0.5).epsilon(1e-10));
    CHECK((red.matrix - red.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("partial traces over disjoint factors commute") {
  const DensityMatrix r3 = tensor_product({tu::random_mixed(kGrid, 1),
                                           tu::random_mixed(kGrid, 2),
                                           tu::random_mixed(kGrid, 3)});
  // trace out factor 2, then 1 == keep {0} directly
  const DensityMatrix a = partial_trace(partial_trace(r3, {0, 1}), {0});
  const DensityMatrix b = partial_trace(partial_trace(r3, {0, 2}), {0});
  CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("partial_trace rejects bad keep sets") {
  const DensityMatrix r12 =
      tensor_product({tu::random_mixed(kGrid, 1), tu::random_mixed(kGrid, 2)});
  CHECK_THROWS_AS(partial_trace(r12, {}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(r12, {2}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(r12, {0, 0}), std::invalid_argument);
}

TEST_CASE("pure_marginal matches partial_trace of the projector") {
  const WaveFunction psi = tu::schmidt_rank2(kGrid, 1.2, 0.6, 0.8);
  const DensityMatrix joint = pure_projector(psi);
  for (std::size_t k : {std::size_t(0), std::size_t(1)}) {
    const DensityMatrix a = pure_marginal(psi, k);
    const DensityMatrix b = partial_trace(joint, {k});
    CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("distance basics") {
  const DensityMatrix r = tu::random_mixed(kGrid, 21);
  const DensityMatrix s = tu::random_mixed(kGrid, 22);
  CHECK(distance(r, r, DistanceMetric::frobenius) == 0.0);
  CHECK(distance(r, s, DistanceMetric::frobenius) ==
        doctest::Approx(distance(s, r, DistanceMetric::frobenius)));
  CHECK(distance(r, s, DistanceMetric::trace_norm) ==
        doctest::Approx(distance(s, r, DistanceMetric::trace_norm)));

  const DensityMatrix other{uniform_layout(kGrid, 2),
                            Mat::Zero(64, 64)};
  CHECK_THROWS_AS(distance(r, other, DistanceMetric::frobenius),
                  std::invalid_argument);
}

TEST_CASE("trace-norm distance of orthogonal unit-trace projectors is 2") {
  auto [p0, p1] = tu::orthonormal_gaussians(kGrid, 1.8, 0.5);
  const DensityMatrix a = pure_projector(p0);
  const DensityMatrix b = pure_projector(p1);
  CHECK(distance(a, b, DistanceMetric::trace_norm) ==
        doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("diagnostics: purity, hermiticity, maximally mixed") {
  const DensityMatrix pure = pure_projector(tu::random_state(kGrid, 4));
  CHECK(diagnostics(pure).purity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(diagnostics(pure).hermiticity_residual < 1e-14);
  CHECK(diagnostics(pure).trace_error < 1e-12);

  const int d = kGrid.n_points;
  Mat mm = Mat::Identity(d, d) / (d * kGrid.spacing);
  const DensityMatrix mixed{single_layout(kGrid), mm};
  CHECK(diagnostics(mixed).purity == doctest::Approx(1.0 / d));
  CHECK(diagnostics(mixed).min_eigenvalue == doctest::Approx(1.0 / d));
}

TEST_CASE("Schmidt property: both reductions of a pure state share spectra") {
  const Grid g = make_grid(12, 6.0, true);
  for (unsigned seed : {1u, 2u, 3u}) {
    Vec amp(g.n_points * g.n_points);
    std::mt19937 rng(seed + 100);
    std::normal_distribution<double> dist;
    for (int i = 0; i < amp.size(); ++i) amp(i) = Complex(dist(rng), dist(rng));
    const WaveFunction psi =
        make_wavefunction(uniform_layout(g, 2), amp);
    const DensityMatrix r1 = pure_marginal(psi, 0);
    const DensityMatrix r2 = pure_marginal(psi, 1);
    Eigen::SelfAdjointEigenSolver<Mat> e1(r1.matrix), e2(r2.matrix);
    const RealVec s1 = e1.eigenvalues() * g.spacing;
    const RealVec s2 = e2.eigenvalues() * g.spacing;
    CHECK((s1 - s2).cwiseAbs().maxCoeff() < 1e-10);
  }
}
