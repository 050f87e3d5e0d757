#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlq/extension.hpp"
#include "test_util.hpp"

using namespace nlq;
namespace tu = nlq::testutil;

namespace {

const Grid kGrid = make_grid(8, 8.0, true);

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ExtensionSpec two_particle_spec(KernelPtr k1, KernelPtr k2,
                                ExtensionMode mode = ExtensionMode::correct) {
  ExtensionSpec spec;
  spec.layout = uniform_layout(kGrid, 2);
  spec.assignments = {{0, std::move(k1)}, {1, std::move(k2)}};
  spec.mode = mode;
  return spec;
}

KernelPtr hb_with_kinetic(double a) {
  return compose_kernels(
      kGrid, {kinetic_kernel(kGrid, 1.0, 1.0),
              haag_bannier_kernel(kGrid, RealVec::Constant(8, a))});
}

}  // namespace

TEST_CASE("embed_single matches the Kronecker product") {
  const CompositeLayout layout = uniform_layout(kGrid, 2);
  const Mat h = tu::random_mixed(kGrid, 1).matrix;
  const Mat id = Mat::Identity(8, 8);
  CHECK((embed_single(layout, 0, h) - kron(h, id)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((embed_single(layout, 1, h) - kron(id, h)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("factor application agrees with the embedded matrix") {
  const CompositeLayout layout = uniform_layout(kGrid, 3);
  const Mat h = tu::random_mixed(kGrid, 4).matrix;
  const DensityMatrix rho = tensor_product({tu::random_mixed(kGrid, 5),
                                            tu::random_mixed(kGrid, 6),
                                            tu::random_mixed(kGrid, 7)});
  for (std::size_t k = 0; k < 3; ++k) {
    const Mat emb = embed_single(layout, k, h);
    Mat left = Mat::Zero(512, 512), right = Mat::Zero(512, 512);
    accumulate_factor_left(left, h, k, layout, rho.matrix);
    accumulate_factor_right(right, h, k, layout, rho.matrix);
    CHECK((left - emb * rho.matrix).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((right - rho.matrix * emb).cwiseAbs().maxCoeff() < 1e-12);

    const Vec v = rho.matrix.col(3);
    CHECK((apply_factor(h, k, layout, v) - emb * v).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("extend on a product state evaluates kernels on exact marginals") {
  const DensityMatrix r1 = tu::random_mixed(kGrid, 11);
  const DensityMatrix r2 = tu::random_mixed(kGrid, 12);
  const DensityMatrix joint = tensor_product({r1, r2});
  const KernelPtr k1 = hb_with_kinetic(0.7);
  const KernelPtr k2 = hb_with_kinetic(-0.4);
  const ExtensionSpec spec = two_particle_spec(k1, k2);

  const Mat h = extend(joint, spec).op;
  const Mat id = Mat::Identity(8, 8);
  const Mat expected =
      kron(k1->evaluate(r1).op, id) + kron(id, k2->evaluate(r2).op);
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("linear kernels recover the ordinary tensor recipe") {
  const KernelPtr k1 = compose_kernels(
      kGrid, {kinetic_kernel(kGrid, 1.0, 1.0),
              potential_kernel(kGrid, RealVec::LinSpaced(8, 0.0, 1.0))});
  const KernelPtr k2 = kinetic_kernel(kGrid, 2.0, 1.0);
  const ExtensionSpec spec = two_particle_spec(k1, k2);

  // rho-independence: two very different joint states, same operator
  const DensityMatrix a = tensor_product({tu::random_mixed(kGrid, 1),
                                          tu::random_mixed(kGrid, 2)});
  const DensityMatrix b =
      pure_projector(tu::schmidt_rank2(kGrid, 2.0, 0.7, 0.5));
  CHECK((extend(a, spec).op - extend(b, spec).op).cwiseAbs().maxCoeff() <
        1e-11);
}

TEST_CASE("extend on an entangled state uses the mixed marginal") {
  const WaveFunction psi = tu::schmidt_rank2(kGrid, 2.0, 0.7, 0.6);
  const DensityMatrix joint = pure_projector(psi);
  const KernelPtr k1 = hb_with_kinetic(0.9);
  const KernelPtr k2 = hb_with_kinetic(0.3);
  const ExtensionSpec spec = two_particle_spec(k1, k2);

  const Mat h = extend(joint, spec).op;
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-11);

  // oracle: evaluate each kernel directly on the independently computed
  // purity-1/2 marginal and compare factor blocks
  const DensityMatrix m1 = pure_marginal(psi, 0);
  const DensityMatrix m2 = pure_marginal(psi, 1);
  CHECK(m1.purity() == doctest::Approx(0.5).epsilon(1e-9));
  const Mat id = Mat::Identity(8, 8);
  const Mat expected =
      kron(k1->evaluate(m1).op, id) + kron(id, k2->evaluate(m2).op);
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("marginal dependence only: equal marginals give equal operators") {
  auto [p0, p1] = tu::orthonormal_gaussians(kGrid, 2.2, 0.6, 0.4);
  const DensityMatrix q0 = pure_projector(p0);
  const DensityMatrix q1 = pure_projector(p1);
  // classically correlated state vs product of its marginals
  DensityMatrix corr = tensor_product({q0, q0});
  corr.matrix = 0.5 * (corr.matrix + tensor_product({q1, q1}).matrix);
  DensityMatrix half{single_layout(kGrid), 0.5 * (q0.matrix + q1.matrix)};
  const DensityMatrix prod = tensor_product({half, half});
  CHECK(distance(corr, prod, DistanceMetric::frobenius) > 1e-3);

  const ExtensionSpec spec =
      two_particle_spec(hb_with_kinetic(0.8), hb_with_kinetic(-0.5));
  CHECK((extend(corr, spec).op - extend(prod, spec).op).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("naive and correct extensions agree on product pure states") {
  // widths chosen so the joint density stays above the relative floor:
  // agreement between the two recipes is exact only where no flooring occurs
  const WaveFunction f1 = tu::gaussian(kGrid, 4.0, 1.0, 0.7);
  const WaveFunction f2 = tu::gaussian(kGrid, 4.0, 1.2, -0.4);
  Vec amp(64);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      amp(i * 8 + j) = f1.amplitudes(i) * f2.amplitudes(j);
  const WaveFunction psi{uniform_layout(kGrid, 2), amp};

  const KernelPtr k1 = hb_with_kinetic(0.7);
  const KernelPtr k2 = hb_with_kinetic(-0.4);
  const Mat hc = extend(pure_projector(psi), two_particle_spec(k1, k2)).op;
  const Mat hn =
      naive_extend(psi, two_particle_spec(k1, k2, ExtensionMode::naive)).op;
  CHECK((hc - hn).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("naive and correct extensions differ on entangled states") {
  const WaveFunction psi = tu::schmidt_rank2(kGrid, 2.0, 0.7, 0.8);
  const KernelPtr k1 = hb_with_kinetic(0.9);
  const KernelPtr k2 = hb_with_kinetic(0.9);
  const Mat hc = extend(pure_projector(psi), two_particle_spec(k1, k2)).op;
  const Mat hn =
      naive_extend(psi, two_particle_spec(k1, k2, ExtensionMode::naive)).op;
  CHECK((hc - hn).norm() > 1e-4);
}

TEST_CASE("naive equals correct exactly for purely linear kernels") {
  const WaveFunction psi = tu::schmidt_rank2(kGrid, 2.0, 0.7, 0.8);
  const KernelPtr lin = compose_kernels(
      kGrid, {kinetic_kernel(kGrid, 1.0, 1.0),
              potential_kernel(kGrid, RealVec::LinSpaced(8, 0.0, 0.5))});
  const Mat hc = extend(pure_projector(psi), two_particle_spec(lin, lin)).op;
  const Mat hn =
      naive_extend(psi, two_particle_spec(lin, lin, ExtensionMode::naive)).op;
  CHECK((hc - hn).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("staged extension equals direct extension") {
  // 3-particle mixed state with correlations
  DensityMatrix joint = tensor_product({tu::random_mixed(kGrid, 21),
                                        tu::random_mixed(kGrid, 22),
                                        tu::random_mixed(kGrid, 23)});
  const DensityMatrix other = tensor_product({tu::random_mixed(kGrid, 24),
                                              tu::random_mixed(kGrid, 25),
                                              tu::random_mixed(kGrid, 26)});
  joint.matrix = 0.5 * (joint.matrix + other.matrix);

  ExtensionSpec spec;
  spec.layout = uniform_layout(kGrid, 3);
  spec.assignments = {{0, hb_with_kinetic(0.6)},
                      {1, hb_with_kinetic(-0.3)},
                      {2, hb_with_kinetic(0.2)}};

  const Mat direct = extend(joint, spec).op;
  const std::vector<std::vector<std::vector<std::size_t>>> groupings = {
      {{0, 1}, {2}}, {{0}, {1, 2}}, {{0, 2}, {1}},
      {{0}, {1}, {2}}, {{0, 1, 2}}};
  for (const auto& groups : groupings) {
    const Mat staged = staged_extend(joint, spec, groups).op;
    CHECK((staged - direct).norm() * spec.layout.measure() < 1e-12);
  }
}

TEST_CASE("staged extension rejects bad partitions") {
  ExtensionSpec spec;
  spec.layout = uniform_layout(kGrid, 3);
  spec.assignments = {{0, hb_with_kinetic(0.6)}};
  const DensityMatrix joint = tensor_product({tu::random_mixed(kGrid, 1),
                                              tu::random_mixed(kGrid, 2),
                                              tu::random_mixed(kGrid, 3)});
  CHECK_THROWS_AS(staged_extend(joint, spec, {{0, 1}, {1, 2}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(staged_extend(joint, spec, {{0}, {1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(staged_extend(joint, spec, {{0}, {1}, {2}, {3}}),
                  std::invalid_argument);
}

TEST_CASE("extension spec validation") {
  ExtensionSpec spec;
  spec.layout = uniform_layout(kGrid, 2);
  spec.assignments = {{0, hb_with_kinetic(1.0)}, {0, hb_with_kinetic(1.0)}};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec.assignments = {{5, hb_with_kinetic(1.0)}};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);

  const Grid other = make_grid(16, 8.0, true);
  spec.assignments = {{0, kinetic_kernel(other, 1.0, 1.0)}};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}
