#include "nlq/states.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlq {

int CompositeLayout::total_dim() const {
  int d = 1;
  for (const auto& g : factors) d *= g.n_points;
  return d;
}

int CompositeLayout::stride(std::size_t k) const {
  int s = 1;
  for (std::size_t j = k + 1; j < factors.size(); ++j) s *= factors[j].n_points;
  return s;
}

double CompositeLayout::measure() const {
  double m = 1.0;
  for (const auto& g : factors) m *= g.spacing;
  return m;
}

CompositeLayout single_layout(const Grid& g) { return CompositeLayout{{g}}; }

CompositeLayout uniform_layout(const Grid& g, int n_particles) {
  if (n_particles < 1)
    throw std::invalid_argument("uniform_layout: need at least one particle");
  return CompositeLayout{std::vector<Grid>(n_particles, g)};
}

double WaveFunction::norm() const {
  return std::sqrt(amplitudes.squaredNorm() * layout.measure());
}

WaveFunction make_wavefunction(CompositeLayout layout, Vec amplitudes,
                               bool normalize) {
  if (layout.factors.empty())
    throw std::invalid_argument("make_wavefunction: empty layout");
  if (amplitudes.size() != layout.total_dim())
    throw std::invalid_argument("make_wavefunction: amplitude length mismatch");
  WaveFunction psi{std::move(layout), std::move(amplitudes)};
  const double n = psi.norm();
  if (normalize) {
    if (n == 0.0)
      throw std::invalid_argument("make_wavefunction: zero amplitudes");
    psi.amplitudes /= n;
  } else if (std::abs(n - 1.0) > 1e-8) {
    throw std::invalid_argument("make_wavefunction: state is not normalized");
  }
  return psi;
}

double DensityMatrix::trace() const {
  return matrix.diagonal().real().sum() * layout.measure();
}

double DensityMatrix::purity() const {
  const double m = layout.measure();
  return (matrix * matrix).diagonal().real().sum() * m * m;
}

DensityMatrix pure_projector(const WaveFunction& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("pure_projector: psi is not normalized");
  return DensityMatrix{psi.layout,
                       psi.amplitudes * psi.amplitudes.adjoint()};
}

DensityMatrix tensor_product(const std::vector<DensityMatrix>& parts) {
  if (parts.empty())
    throw std::invalid_argument("tensor_product: empty part list");
  DensityMatrix out = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Mat& a = out.matrix;
    const Mat& b = parts[p].matrix;
    Mat kron(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        kron.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
            a(i, j) * b;
    out.matrix = std::move(kron);
    for (const auto& g : parts[p].layout.factors)
      out.layout.factors.push_back(g);
  }
  return out;
}

namespace {

void check_keep(const CompositeLayout& layout,
                const std::vector<std::size_t>& keep) {
  if (keep.empty())
    throw std::invalid_argument("partial_trace: empty keep set");
  for (std::size_t k : keep)
    if (k >= layout.n_factors())
      throw std::invalid_argument("partial_trace: subsystem index out of range");
  auto sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("partial_trace: duplicate subsystem index");
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<std::size_t>& keep) {
  const CompositeLayout& layout = rho.layout;
  check_keep(layout, keep);

  std::vector<std::size_t> kept = keep;
  std::sort(kept.begin(), kept.end());
  if (kept.size() == layout.n_factors()) return rho;

  std::vector<bool> is_kept(layout.n_factors(), false);
  for (std::size_t k : kept) is_kept[k] = true;

  CompositeLayout out_layout;
  double traced_measure = 1.0;
  for (std::size_t k = 0; k < layout.n_factors(); ++k) {
    if (is_kept[k])
      out_layout.factors.push_back(layout.factors[k]);
    else
      traced_measure *= layout.factors[k].spacing;
  }

  const int n = layout.total_dim();
  // Per joint index: its row-major index within the kept and traced groups.
  std::vector<int> kept_idx(n), traced_idx(n);
  for (int r = 0; r < n; ++r) {
    int kv = 0, tv = 0, rest = r;
    for (std::size_t k = 0; k < layout.n_factors(); ++k) {
      const int s = layout.stride(k);
      const int digit = rest / s;
      rest -= digit * s;
      if (is_kept[k])
        kv = kv * layout.dim(k) + digit;
      else
        tv = tv * layout.dim(k) + digit;
    }
    kept_idx[r] = kv;
    traced_idx[r] = tv;
  }

  const int m = out_layout.total_dim();
  const int t = n / m;
  // Bucket joint indices by traced index so the inner loop is contiguous.
  std::vector<int> by_traced(n);
  {
    std::vector<int> pos(t, 0);
    for (int r = 0; r < n; ++r) pos[traced_idx[r]]++;
    std::vector<int> start(t, 0);
    for (int i = 1; i < t; ++i) start[i] = start[i - 1] + pos[i - 1];
    std::vector<int> cur = start;
    for (int r = 0; r < n; ++r) by_traced[cur[traced_idx[r]]++] = r;
  }

  Mat out = Mat::Zero(m, m);
  for (int b = 0; b < t; ++b) {
    for (int i = 0; i < m; ++i) {
      const int r = by_traced[b * m + i];
      for (int j = 0; j < m; ++j) {
        const int c = by_traced[b * m + j];
        out(kept_idx[r], kept_idx[c]) += rho.matrix(r, c);
      }
    }
  }
  out *= traced_measure;
  return DensityMatrix{std::move(out_layout), std::move(out)};
}

DensityMatrix pure_marginal(const WaveFunction& psi, std::size_t k) {
  const CompositeLayout& layout = psi.layout;
  if (k >= layout.n_factors())
    throw std::invalid_argument("pure_marginal: subsystem index out of range");
  const int nk = layout.dim(k);
  const int s = layout.stride(k);
  const int n = layout.total_dim();
  const int outer = n / (nk * s);
  const double w = layout.measure() / layout.factors[k].spacing;

  Mat out = Mat::Zero(nk, nk);
  for (int o = 0; o < outer; ++o) {
    for (int a = 0; a < nk; ++a) {
      for (int b = 0; b < nk; ++b) {
        Complex acc = 0.0;
        const Complex* pa = psi.amplitudes.data() + (o * nk + a) * s;
        const Complex* pb = psi.amplitudes.data() + (o * nk + b) * s;
        for (int i = 0; i < s; ++i) acc += pa[i] * std::conj(pb[i]);
        out(a, b) += acc;
      }
    }
  }
  out *= w;
  return DensityMatrix{single_layout(layout.factors[k]), std::move(out)};
}

double distance(const DensityMatrix& rho, const DensityMatrix& sigma,
                DistanceMetric metric) {
  if (rho.layout != sigma.layout)
    throw std::invalid_argument("distance: layout mismatch");
  const Mat diff = rho.matrix - sigma.matrix;
  const double m = rho.layout.measure();
  if (metric == DistanceMetric::frobenius) return diff.norm() * m;
  Eigen::JacobiSVD<Mat> svd(diff);
  return svd.singularValues().sum() * m;
}

StateDiagnostics diagnostics(const DensityMatrix& rho) {
  StateDiagnostics d;
  const double m = rho.layout.measure();
  d.trace_error = std::abs(rho.trace() - 1.0);
  d.hermiticity_residual = (rho.matrix - rho.matrix.adjoint()).norm() * m;
  d.purity = rho.purity();
  Eigen::SelfAdjointEigenSolver<Mat> es(
      0.5 * (rho.matrix + rho.matrix.adjoint()), Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff() * m;
  return d;
}

}  // namespace nlq
