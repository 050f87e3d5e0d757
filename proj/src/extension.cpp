#include "nlq/extension.hpp"

#include <algorithm>
#include <stdexcept>

namespace nlq {

void validate(const ExtensionSpec& spec) {
  if (spec.layout.factors.empty())
    throw std::invalid_argument("extension: empty layout");
  std::vector<bool> seen(spec.layout.n_factors(), false);
  for (const auto& a : spec.assignments) {
    if (a.subsystem >= spec.layout.n_factors())
      throw std::invalid_argument("extension: subsystem index out of range");
    if (seen[a.subsystem])
      throw std::invalid_argument("extension: subsystem assigned twice");
    seen[a.subsystem] = true;
    if (!a.kernel)
      throw std::invalid_argument("extension: null kernel");
    if (a.kernel->grid() != spec.layout.factors[a.subsystem])
      throw std::invalid_argument("extension: kernel grid mismatch");
  }
}

namespace {

// Per joint index: row-major index within `group` (in the given order) and
// within the complementary factors.
struct GroupIndexing {
  std::vector<int> group_idx, comp_idx;
  int group_dim = 1, comp_dim = 1;
};

GroupIndexing index_group(const CompositeLayout& layout,
                          const std::vector<std::size_t>& group) {
  const int n = layout.total_dim();
  GroupIndexing gi;
  gi.group_idx.resize(n);
  gi.comp_idx.resize(n);
  std::vector<int> in_group(layout.n_factors(), -1);
  for (std::size_t p = 0; p < group.size(); ++p) {
    in_group[group[p]] = int(p);
    gi.group_dim *= layout.dim(group[p]);
  }
  gi.comp_dim = n / gi.group_dim;
  for (int r = 0; r < n; ++r) {
    std::vector<int> gdigits(group.size(), 0);
    int cv = 0, rest = r;
    for (std::size_t k = 0; k < layout.n_factors(); ++k) {
      const int s = layout.stride(k);
      const int digit = rest / s;
      rest -= digit * s;
      if (in_group[k] >= 0)
        gdigits[in_group[k]] = digit;
      else
        cv = cv * layout.dim(k) + digit;
    }
    int gv = 0;
    for (std::size_t p = 0; p < group.size(); ++p)
      gv = gv * layout.dim(group[p]) + gdigits[p];
    gi.group_idx[r] = gv;
    gi.comp_idx[r] = cv;
  }
  return gi;
}

}  // namespace

Mat embed_group(const CompositeLayout& layout,
                const std::vector<std::size_t>& group, const Mat& op) {
  const GroupIndexing gi = index_group(layout, group);
  if (op.rows() != gi.group_dim || op.cols() != gi.group_dim)
    throw std::invalid_argument("embed_group: operator dimension mismatch");
  const int n = layout.total_dim();

  std::vector<std::vector<int>> by_comp(gi.comp_dim);
  for (int r = 0; r < n; ++r) by_comp[gi.comp_idx[r]].push_back(r);

  Mat out = Mat::Zero(n, n);
  for (const auto& bucket : by_comp)
    for (int r : bucket)
      for (int c : bucket) out(r, c) = op(gi.group_idx[r], gi.group_idx[c]);
  return out;
}

Mat embed_single(const CompositeLayout& layout, std::size_t k, const Mat& op) {
  return embed_group(layout, {k}, op);
}

void accumulate_factor_left(Mat& acc, const Mat& h, std::size_t k,
                            const CompositeLayout& layout, const Mat& m) {
  const int nk = layout.dim(k);
  const int s = layout.stride(k);
  const int n = layout.total_dim();
  const int outer = n / (nk * s);
  Mat block(nk, m.cols());
  for (int o = 0; o < outer; ++o) {
    for (int i = 0; i < s; ++i) {
      const int base = o * nk * s + i;
      for (int a = 0; a < nk; ++a) block.row(a) = m.row(base + a * s);
      block = (h * block).eval();
      for (int a = 0; a < nk; ++a) acc.row(base + a * s) += block.row(a);
    }
  }
}

void accumulate_factor_right(Mat& acc, const Mat& h, std::size_t k,
                             const CompositeLayout& layout, const Mat& m) {
  const int nk = layout.dim(k);
  const int s = layout.stride(k);
  const int n = layout.total_dim();
  const int outer = n / (nk * s);
  Mat block(m.rows(), nk);
  for (int o = 0; o < outer; ++o) {
    for (int i = 0; i < s; ++i) {
      const int base = o * nk * s + i;
      for (int a = 0; a < nk; ++a) block.col(a) = m.col(base + a * s);
      block = (block * h).eval();
      for (int a = 0; a < nk; ++a) acc.col(base + a * s) += block.col(a);
    }
  }
}

Vec apply_factor(const Mat& h, std::size_t k, const CompositeLayout& layout,
                 const Vec& v) {
  const int nk = layout.dim(k);
  const int s = layout.stride(k);
  const int n = layout.total_dim();
  const int outer = n / (nk * s);
  Vec out = Vec::Zero(n);
  Vec x(nk);
  for (int o = 0; o < outer; ++o) {
    for (int i = 0; i < s; ++i) {
      const int base = o * nk * s + i;
      for (int a = 0; a < nk; ++a) x(a) = v(base + a * s);
      x = (h * x).eval();
      for (int a = 0; a < nk; ++a) out(base + a * s) = x(a);
    }
  }
  return out;
}

OperatorEval extend(const DensityMatrix& rho_joint, const ExtensionSpec& spec) {
  validate(spec);
  if (spec.mode != ExtensionMode::correct)
    throw std::invalid_argument("extend: spec mode must be 'correct'");
  if (rho_joint.layout != spec.layout)
    throw std::invalid_argument("extend: state layout mismatch");

  const int n = spec.layout.total_dim();
  OperatorEval out{Mat::Zero(n, n), 0};
  for (const auto& a : spec.assignments) {
    const DensityMatrix marginal = partial_trace(rho_joint, {a.subsystem});
    KernelEval ke = a.kernel->evaluate(marginal);
    out.floor_activations += ke.floor_activations;
    out.op += embed_single(spec.layout, a.subsystem, ke.op);
  }
  return out;
}

namespace {

// Joint-coordinate DiagonalData for the naive recipe: derivatives act on
// factor k of the joint wavefunction, densities stay pointwise.
DiagonalData joint_data(const WaveFunction& psi, std::size_t k,
                        const NonlinearKernel& kernel) {
  const CompositeLayout& layout = psi.layout;
  const int n = layout.total_dim();
  DiagonalData d;
  d.f = psi.amplitudes.cwiseAbs2();
  d.f_max = d.f.maxCoeff();
  const Vec fc = d.f.cast<Complex>();
  d.df = apply_factor(kernel.d1(), k, layout, fc).real();
  d.d2f = apply_factor(kernel.d2(), k, layout, fc).real();
  d.c[1] = psi.amplitudes.conjugate().cwiseProduct(
      apply_factor(kernel.d1(), k, layout, psi.amplitudes));
  d.c[2] = psi.amplitudes.conjugate().cwiseProduct(
      apply_factor(kernel.d2(), k, layout, psi.amplitudes));
  for (int m : kernel.extra_contraction_orders()) {
    if (d.c.count(m)) continue;
    Vec v = psi.amplitudes;
    for (int i = 0; i < m; ++i) v = apply_factor(kernel.d1(), k, layout, v);
    d.c[m] = psi.amplitudes.conjugate().cwiseProduct(v);
  }
  const int s = layout.stride(k);
  const int nk = layout.dim(k);
  d.site.resize(n);
  for (int r = 0; r < n; ++r) d.site(r) = (r / s) % nk;
  return d;
}

}  // namespace

OperatorEval naive_extend(const WaveFunction& psi_joint,
                          const ExtensionSpec& spec) {
  validate(spec);
  if (spec.mode != ExtensionMode::naive)
    throw std::invalid_argument("naive_extend: spec mode must be 'naive'");
  if (psi_joint.layout != spec.layout)
    throw std::invalid_argument("naive_extend: state layout mismatch");

  const int n = spec.layout.total_dim();
  OperatorEval out{Mat::Zero(n, n), 0};
  for (const auto& a : spec.assignments) {
    out.op += embed_single(spec.layout, a.subsystem, a.kernel->linear_part());
    const DiagonalData d = joint_data(psi_joint, a.subsystem, *a.kernel);
    out.op.diagonal() +=
        a.kernel->nonlinear_diagonal(d, out.floor_activations)
            .cast<Complex>();
  }
  return out;
}

OperatorEval staged_extend(
    const DensityMatrix& rho_joint, const ExtensionSpec& spec,
    const std::vector<std::vector<std::size_t>>& groups) {
  validate(spec);
  if (spec.mode != ExtensionMode::correct)
    throw std::invalid_argument("staged_extend: spec mode must be 'correct'");
  if (rho_joint.layout != spec.layout)
    throw std::invalid_argument("staged_extend: state layout mismatch");

  std::vector<bool> covered(spec.layout.n_factors(), false);
  for (const auto& g : groups) {
    if (g.empty())
      throw std::invalid_argument("staged_extend: empty group");
    for (std::size_t k : g) {
      if (k >= spec.layout.n_factors())
        throw std::invalid_argument("staged_extend: group index out of range");
      if (covered[k])
        throw std::invalid_argument("staged_extend: overlapping groups");
      covered[k] = true;
    }
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end())
    throw std::invalid_argument("staged_extend: groups do not cover layout");

  const int n = spec.layout.total_dim();
  OperatorEval out{Mat::Zero(n, n), 0};
  for (const auto& g : groups) {
    std::vector<std::size_t> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    const DensityMatrix marginal = partial_trace(rho_joint, sorted);

    ExtensionSpec sub;
    sub.mode = ExtensionMode::correct;
    for (std::size_t k : sorted)
      sub.layout.factors.push_back(spec.layout.factors[k]);
    for (const auto& a : spec.assignments) {
      auto it = std::find(sorted.begin(), sorted.end(), a.subsystem);
      if (it != sorted.end())
        sub.assignments.push_back(
            {std::size_t(it - sorted.begin()), a.kernel});
    }
    OperatorEval ge = extend(marginal, sub);
    out.floor_activations += ge.floor_activations;
    out.op += embed_group(spec.layout, sorted, ge.op);
  }
  return out;
}

}  // namespace nlq
