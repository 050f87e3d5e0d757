#include "nlq/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace nlq {

namespace {

DerivativeScheme pick_scheme(const Grid& g, const KernelOptions& opts) {
  return opts.scheme_set ? opts.scheme : default_scheme(g);
}

// max(f, eps_rel * max f), counting entries where the floor took over.
RealVec floored_density(const RealVec& f, double f_max, double eps_rel,
                        long& activations) {
  const double floor = eps_rel * f_max;
  RealVec out(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f(i) < floor) {
      out(i) = floor;
      ++activations;
    } else {
      out(i) = f(i);
    }
  }
  return out;
}

}  // namespace

NonlinearKernel::NonlinearKernel(const Grid& grid, DerivativeScheme scheme)
    : grid_(grid), scheme_(scheme) {
  d1_ = derivative_operator(grid, 1, scheme).matrix;
  d2_ = derivative_operator(grid, 2, scheme).matrix;
}

Mat NonlinearKernel::linear_part() const {
  return Mat::Zero(grid_.n_points, grid_.n_points);
}

RealVec NonlinearKernel::nonlinear_diagonal(const DiagonalData& d,
                                            long&) const {
  return RealVec::Zero(d.f.size());
}

DiagonalData NonlinearKernel::data_from_density(
    const DensityMatrix& rho) const {
  if (rho.layout.n_factors() != 1 || rho.layout.factors[0] != grid_)
    throw std::invalid_argument("kernel: density matrix grid mismatch");
  const int n = grid_.n_points;
  DiagonalData d;
  d.f = rho.matrix.diagonal().real();
  d.c[1] = (d1_ * rho.matrix).diagonal();
  d.c[2] = (d2_ * rho.matrix).diagonal();
  for (int m : extra_contraction_orders()) {
    if (!d.c.count(m)) {
      Mat dm = Mat::Identity(n, n);
      for (int i = 0; i < m; ++i) dm = d1_ * dm;
      d.c[m] = (dm * rho.matrix).diagonal();
    }
  }
  d.df = (d1_ * d.f.cast<Complex>()).real();
  d.d2f = (d2_ * d.f.cast<Complex>()).real();
  d.site = Eigen::VectorXi::LinSpaced(n, 0, n - 1);
  d.f_max = d.f.maxCoeff();
  return d;
}

KernelEval NonlinearKernel::evaluate(const DensityMatrix& rho) const {
  KernelEval out;
  out.op = linear_part();
  DiagonalData data = data_from_density(rho);
  RealVec diag = nonlinear_diagonal(data, out.floor_activations);
  out.op.diagonal() += diag.cast<Complex>();
  return out;
}

RealVec current_density(const DensityMatrix& rho, const Grid& grid,
                        const KernelOptions& opts) {
  if (rho.layout.n_factors() != 1 || rho.layout.factors[0] != grid)
    throw std::invalid_argument("current_density: grid mismatch");
  const Mat d1 = derivative_operator(grid, 1, pick_scheme(grid, opts)).matrix;
  return (d1 * rho.matrix).diagonal().imag();
}

namespace {

class KineticKernel final : public NonlinearKernel {
 public:
  KineticKernel(const Grid& g, double mass, double hbar,
                const KernelOptions& o)
      : NonlinearKernel(g, pick_scheme(g, o)) {
    if (!(mass > 0.0))
      throw std::invalid_argument("kinetic_kernel: mass must be positive");
    h_ = -(hbar * hbar) / (2.0 * mass) * d2_;
  }
  Mat linear_part() const override { return h_; }

 private:
  Mat h_;
};

class PotentialKernel final : public NonlinearKernel {
 public:
  PotentialKernel(const Grid& g, const RealVec& v)
      : NonlinearKernel(g, default_scheme(g)) {
    if (v.size() != g.n_points)
      throw std::invalid_argument("potential_kernel: V length mismatch");
    if (!v.allFinite())
      throw std::invalid_argument("potential_kernel: V must be finite");
    h_ = Mat::Zero(g.n_points, g.n_points);
    h_.diagonal() = v.cast<Complex>();
  }
  Mat linear_part() const override { return h_; }

 private:
  Mat h_;
};

class HaagBannierKernel final : public NonlinearKernel {
 public:
  HaagBannierKernel(const Grid& g, const RealVec& a, const KernelOptions& o)
      : NonlinearKernel(g, pick_scheme(g, o)), a_(a), eps_(o.eps_rel) {
    if (a.size() != g.n_points)
      throw std::invalid_argument("haag_bannier_kernel: A length mismatch");
  }
  RealVec nonlinear_diagonal(const DiagonalData& d,
                             long& floors) const override {
    const RealVec j = d.grad().imag();
    const RealVec fr = floored_density(d.f, d.f_max, eps_, floors);
    RealVec out(d.f.size());
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) = a_(d.site(i)) * j(i) / fr(i);
    return out;
  }

 private:
  RealVec a_;
  double eps_;
};

class NlsKernel final : public NonlinearKernel {
 public:
  NlsKernel(const Grid& g, double coupling)
      : NonlinearKernel(g, default_scheme(g)), g_(coupling) {}
  RealVec nonlinear_diagonal(const DiagonalData& d, long&) const override {
    return g_ * d.f;
  }

 private:
  double g_;
};

class BbmKernel final : public NonlinearKernel {
 public:
  BbmKernel(const Grid& g, double b, const KernelOptions& o)
      : NonlinearKernel(g, default_scheme(g)), b_(b), eps_(o.eps_rel) {}
  RealVec nonlinear_diagonal(const DiagonalData& d,
                             long& floors) const override {
    const RealVec fr = floored_density(d.f, d.f_max, eps_, floors);
    return b_ * fr.array().log().matrix();
  }

 private:
  double b_;
  double eps_;
};

class DoebnerGoldinKernel final : public NonlinearKernel {
 public:
  DoebnerGoldinKernel(const Grid& g, const std::array<double, 5>& c,
                      const KernelOptions& o)
      : NonlinearKernel(g, pick_scheme(g, o)), c_(c), eps_(o.eps_rel) {}
  RealVec nonlinear_diagonal(const DiagonalData& d,
                             long& floors) const override {
    const RealVec fr = floored_density(d.f, d.f_max, eps_, floors);
    const RealVec j = d.grad().imag();
    const RealVec r1 = d.lap().imag().cwiseQuotient(fr);
    const RealVec r2 = d.d2f.cwiseQuotient(fr);
    const RealVec fr2 = fr.cwiseProduct(fr);
    const RealVec r3 = j.cwiseProduct(j).cwiseQuotient(fr2);
    const RealVec r4 = j.cwiseProduct(d.df).cwiseQuotient(fr2);
    const RealVec r5 = d.df.cwiseProduct(d.df).cwiseQuotient(fr2);
    return c_[0] * r1 + c_[1] * r2 + c_[2] * r3 + c_[3] * r4 + c_[4] * r5;
  }

 private:
  std::array<double, 5> c_;
  double eps_;
};

// Im(u conj(v)) / (f j), with u = diag(L rho), v = diag(D rho), j = Im v.
// Equals (psi'' conj(psi') - c.c.) / (psi conj(psi') - c.c.) on pure states;
// the denominator vanishes identically for real psi, hence the floor.
class TwarockKernel final : public NonlinearKernel {
 public:
  TwarockKernel(const Grid& g, double coupling, const KernelOptions& o)
      : NonlinearKernel(g, pick_scheme(g, o)), c_(coupling), eps_(o.eps_rel) {
    if (!g.periodic)
      throw std::invalid_argument("twarock_kernel: requires a periodic grid");
  }
  RealVec nonlinear_diagonal(const DiagonalData& d,
                             long& floors) const override {
    const Vec& u = d.lap();
    const Vec& v = d.grad();
    const RealVec num =
        (u.array() * v.conjugate().array()).imag().matrix();
    RealVec den = d.f.cwiseProduct(v.imag());
    const double den_max = den.cwiseAbs().maxCoeff();
    const double floor = eps_ * std::max(den_max, d.f_max * d.f_max);
    RealVec out(den.size());
    for (Eigen::Index i = 0; i < den.size(); ++i) {
      double dv = den(i);
      if (std::abs(dv) < floor) {
        dv = (dv < 0.0 ? -1.0 : 1.0) * floor;
        ++floors;
      }
      out(i) = (dv == 0.0) ? 0.0 : c_ * num(i) / dv;
    }
    return out;
  }

 private:
  double c_;
  double eps_;
};

class HomogeneousKernel final : public NonlinearKernel {
 public:
  HomogeneousKernel(const Grid& g, HomogeneousFunctional f,
                    std::vector<int> orders, int n, const KernelOptions& o)
      : NonlinearKernel(g, pick_scheme(g, o)),
        f_(std::move(f)),
        orders_(std::move(orders)),
        n_(n),
        eps_(o.eps_rel) {
    if (n_ < 1)
      throw std::invalid_argument("homogeneous_kernel: n must be positive");
    for (int m : orders_)
      if (m < 1)
        throw std::invalid_argument(
            "homogeneous_kernel: derivative orders must be positive");
  }
  std::vector<int> extra_contraction_orders() const override {
    return orders_;
  }
  RealVec nonlinear_diagonal(const DiagonalData& d,
                             long& floors) const override {
    const RealVec fr = floored_density(d.f, d.f_max, eps_, floors);
    std::vector<Complex> args(orders_.size());
    RealVec out(d.f.size());
    double max_abs = 0.0, max_imag = 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      for (std::size_t m = 0; m < orders_.size(); ++m)
        args[m] = d.c.at(orders_[m])(i);
      const Complex val = f_(std::span<const Complex>(args));
      max_abs = std::max(max_abs, std::abs(val));
      max_imag = std::max(max_imag, std::abs(val.imag()));
      out(i) = val.real() / std::pow(fr(i), n_);
    }
    if (max_imag > 1e-9 * std::max(max_abs, 1e-300))
      throw std::runtime_error(
          "homogeneous_kernel: functional output is not real");
    return out;
  }

 private:
  HomogeneousFunctional f_;
  std::vector<int> orders_;
  int n_;
  double eps_;
};

class ComposedKernel final : public NonlinearKernel {
 public:
  ComposedKernel(const Grid& g, std::vector<KernelPtr> parts)
      : NonlinearKernel(g, default_scheme(g)), parts_(std::move(parts)) {
    for (const auto& p : parts_)
      if (p->grid() != g)
        throw std::invalid_argument("compose_kernels: grid mismatch");
  }
  Mat linear_part() const override {
    Mat h = Mat::Zero(grid_.n_points, grid_.n_points);
    for (const auto& p : parts_) h += p->linear_part();
    return h;
  }
  RealVec nonlinear_diagonal(const DiagonalData& d,
                             long& floors) const override {
    RealVec out = RealVec::Zero(d.f.size());
    for (const auto& p : parts_) out += p->nonlinear_diagonal(d, floors);
    return out;
  }
  std::vector<int> extra_contraction_orders() const override {
    std::vector<int> all;
    for (const auto& p : parts_)
      for (int m : p->extra_contraction_orders()) all.push_back(m);
    return all;
  }

 private:
  std::vector<KernelPtr> parts_;
};

}  // namespace

KernelPtr kinetic_kernel(const Grid& grid, double mass, double hbar,
                         const KernelOptions& opts) {
  return std::make_shared<KineticKernel>(grid, mass, hbar, opts);
}

KernelPtr potential_kernel(const Grid& grid, const RealVec& v) {
  return std::make_shared<PotentialKernel>(grid, v);
}

KernelPtr haag_bannier_kernel(const Grid& grid, const RealVec& a,
                              const KernelOptions& opts) {
  return std::make_shared<HaagBannierKernel>(grid, a, opts);
}

KernelPtr nls_kernel(const Grid& grid, double g) {
  return std::make_shared<NlsKernel>(grid, g);
}

KernelPtr bbm_kernel(const Grid& grid, double b, const KernelOptions& opts) {
  return std::make_shared<BbmKernel>(grid, b, opts);
}

KernelPtr doebner_goldin_kernel(const Grid& grid,
                                const std::array<double, 5>& c,
                                const KernelOptions& opts) {
  return std::make_shared<DoebnerGoldinKernel>(grid, c, opts);
}

KernelPtr twarock_kernel(const Grid& grid, double coupling,
                         const KernelOptions& opts) {
  return std::make_shared<TwarockKernel>(grid, coupling, opts);
}

KernelPtr homogeneous_kernel(const Grid& grid, HomogeneousFunctional f,
                             std::vector<int> orders, int n,
                             const KernelOptions& opts) {
  return std::make_shared<HomogeneousKernel>(grid, std::move(f),
                                             std::move(orders), n, opts);
}

KernelPtr compose_kernels(const Grid& grid, std::vector<KernelPtr> parts) {
  return std::make_shared<ComposedKernel>(grid, std::move(parts));
}

}  // namespace nlq
