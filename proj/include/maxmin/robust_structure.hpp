#ifndef MAXMIN_ROBUST_STRUCTURE_HPP
#define MAXMIN_ROBUST_STRUCTURE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maxmin/geometry.hpp"
#include "maxmin/market.hpp"

namespace maxmin {

/// Per-node support geometry: increments charged under the priors and
/// under one kernel, their affine hulls, and the relative-interior gate.
struct NodeSupport {
  std::vector<VecD> d_points;
  std::vector<VecD> d_p_points;
  AffineSubspace aff_d;
  AffineSubspace aff_d_p;
  bool zero_in_ri_d_p = false;
  bool aff_equal = false;
  bool in_h() const { return zero_in_ri_d_p && aff_equal; }
};

/// Price increments charged with positive probability by at least one
/// prior vertex at the node (duplicates removed).
std::vector<VecD> conditional_support(const ScenarioTree& tree, const PriorSet& priors, int node);

/// Increments charged by the given one-step distribution over children.
std::vector<VecD> kernel_support(const ScenarioTree& tree, const VecD& q, int node);

NodeSupport support_report(const ScenarioTree& tree, const PriorSet& priors, const VecD& q,
                           int node);

struct HCheckResult {
  bool ok = false;
  std::vector<int> failing_nodes;
  std::map<int, NodeSupport> per_node;  // reachable non-terminal nodes
};

/// Kernel membership in the quantitatively arbitrage-free family: at
/// every reachable non-terminal node, 0 in ri(conv(D_P)) and
/// Aff(D_P) = Aff(D), both exact.
HCheckResult check_h_membership(const ScenarioTree& tree, const PriorSet& priors,
                                const Kernel& kernel);

struct HSearchResult {
  std::optional<Kernel> kernel;
  std::vector<int> failing_nodes;  // nodes where no candidate passed
};

/// Per-node search over the candidate family (each vertex, then the
/// uniform mixture of all vertices).
HSearchResult find_h_kernel(const Market& market);

struct AlphaOptions {
  int sweep_samples = 10000;  // falsification sweep (dim >= 2)
  int bisect_iters = 40;
  std::uint64_t seed = 0x5eed5eed1234abcdULL;
};

struct AlphaResult {
  double alpha = 0;        // certified: q(h dS < -alpha |h|) >= alpha for all
                           // nonzero h in Aff(D)
  bool exact = false;      // dim <= 1: exact crossing; else LP-certified bound
  double empirical = 0;    // sampled upper bound on the supremum
};

/// Quantitative no-arbitrage level at a node for the given kernel.
/// dim Aff(D) <= 1 is computed exactly; higher dimensions bisect with an
/// exact-rational LP certificate (1-norm surrogate, valid for the
/// Euclidean statement). Throws if the node fails the local H condition.
AlphaResult alpha_qna(const ScenarioTree& tree, const PriorSet& priors, const Kernel& kernel,
                      int node, const AlphaOptions& opt = {});

}  // namespace maxmin

#endif  // MAXMIN_ROBUST_STRUCTURE_HPP
