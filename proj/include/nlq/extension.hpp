#pragma once

#include <cstddef>
#include <vector>

#include "nlq/kernels.hpp"

namespace nlq {

enum class ExtensionMode { correct, naive };

struct KernelAssignment {
  std::size_t subsystem = 0;
  KernelPtr kernel;
};

/// Which 1-particle kernel acts on which factor of the joint space.
/// Subsystems without an assignment contribute nothing.
struct ExtensionSpec {
  CompositeLayout layout;
  std::vector<KernelAssignment> assignments;
  ExtensionMode mode = ExtensionMode::correct;
};

void validate(const ExtensionSpec& spec);

struct OperatorEval {
  Mat op;  // on the joint space
  long floor_activations = 0;
};

/// H = sum_k I x ... x H_k(Tr_rest rho) x ... x I (mode=correct).
OperatorEval extend(const DensityMatrix& rho_joint, const ExtensionSpec& spec);

/// Joint-coordinate (pointwise) recipe on a pure state: linear parts are
/// tensored as usual, nonlinear diagonals are built from |Psi|^2 and
/// joint-coordinate currents instead of marginal quantities (mode=naive).
OperatorEval naive_extend(const WaveFunction& psi_joint,
                          const ExtensionSpec& spec);

/// Group-wise assembly: each group's composite Hamiltonian is built on the
/// group marginal, then embedded with identities. The groups must partition
/// the layout's subsystems.
OperatorEval staged_extend(const DensityMatrix& rho_joint,
                           const ExtensionSpec& spec,
                           const std::vector<std::vector<std::size_t>>& groups);

/// Embed a one-factor operator as I x ... x op x ... x I.
Mat embed_single(const CompositeLayout& layout, std::size_t k, const Mat& op);

/// Embed an operator living on an ordered factor subset.
Mat embed_group(const CompositeLayout& layout,
                const std::vector<std::size_t>& group, const Mat& op);

/// acc += (I x ... x h x ... x I) * m, without forming the embedding.
void accumulate_factor_left(Mat& acc, const Mat& h, std::size_t k,
                            const CompositeLayout& layout, const Mat& m);

/// acc += m * (I x ... x h x ... x I).
void accumulate_factor_right(Mat& acc, const Mat& h, std::size_t k,
                             const CompositeLayout& layout, const Mat& m);

/// (I x ... x h x ... x I) * v.
Vec apply_factor(const Mat& h, std::size_t k, const CompositeLayout& layout,
                 const Vec& v);

}  // namespace nlq
