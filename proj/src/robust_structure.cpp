#include "maxmin/robust_structure.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace maxmin {

namespace {

std::vector<VecD> dedupe(std::vector<VecD> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<VecQ> to_rational(const std::vector<VecD>& pts) {
  std::vector<VecQ> out;
  out.reserve(pts.size());
  for (const VecD& p : pts) out.push_back(vecq_from_doubles(p));
  return out;
}

}  // namespace

std::vector<VecD> conditional_support(const ScenarioTree& tree, const PriorSet& priors, int node) {
  if (tree.is_terminal(node)) throw SchemaError("conditional_support: terminal node");
  std::vector<VecD> pts;
  const auto& children = tree.node(node).children;
  for (std::size_t c = 0; c < children.size(); ++c) {
    bool charged = false;
    for (const VecD& v : priors.vertices[node]) {
      if (v[c] > 0.0) { charged = true; break; }
    }
    if (charged) pts.push_back(delta_s(tree, node, static_cast<int>(c)));
  }
  return dedupe(std::move(pts));
}

std::vector<VecD> kernel_support(const ScenarioTree& tree, const VecD& q, int node) {
  if (tree.is_terminal(node)) throw SchemaError("kernel_support: terminal node");
  std::vector<VecD> pts;
  const auto& children = tree.node(node).children;
  for (std::size_t c = 0; c < children.size(); ++c) {
    if (q[c] > 0.0) pts.push_back(delta_s(tree, node, static_cast<int>(c)));
  }
  return dedupe(std::move(pts));
}

NodeSupport support_report(const ScenarioTree& tree, const PriorSet& priors, const VecD& q,
                           int node) {
  NodeSupport rep;
  rep.d_points = conditional_support(tree, priors, node);
  rep.d_p_points = kernel_support(tree, q, node);
  rep.aff_d = affine_hull(to_rational(rep.d_points));
  rep.aff_d_p = affine_hull(to_rational(rep.d_p_points));
  rep.zero_in_ri_d_p = zero_in_rel_interior(to_rational(rep.d_p_points));
  rep.aff_equal = rep.aff_d == rep.aff_d_p;
  return rep;
}

HCheckResult check_h_membership(const ScenarioTree& tree, const PriorSet& priors,
                                const Kernel& kernel) {
  HCheckResult res;
  res.ok = true;
  for (int n : reachable_nodes(tree, priors)) {
    if (tree.is_terminal(n)) continue;
    NodeSupport rep = support_report(tree, priors, kernel.probs[n], n);
    if (!rep.in_h()) {
      res.ok = false;
      res.failing_nodes.push_back(n);
    }
    res.per_node.emplace(n, std::move(rep));
  }
  return res;
}

HSearchResult find_h_kernel(const Market& market) {
  const ScenarioTree& tree = market.tree;
  HSearchResult out;
  std::vector<VecD> weights(tree.num_nodes());

  std::vector<bool> reachable(tree.num_nodes(), false);
  for (int n : reachable_nodes(tree, market.priors)) reachable[n] = true;

  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (tree.is_terminal(n)) continue;
    const auto& verts = market.priors.vertices[n];
    const std::size_t nv = verts.size();

    std::vector<VecD> candidates;
    for (std::size_t v = 0; v < nv; ++v) {
      VecD w(nv, 0.0);
      w[v] = 1.0;
      candidates.push_back(std::move(w));
    }
    candidates.emplace_back(nv, 1.0 / static_cast<double>(nv));  // uniform mixture

    if (!reachable[n]) {
      weights[n] = candidates.back();  // polar node: any choice works
      continue;
    }

    bool found = false;
    for (const VecD& w : candidates) {
      VecD q(tree.node(n).children.size(), 0.0);
      for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t c = 0; c < q.size(); ++c) q[c] += w[v] * verts[v][c];
      }
      if (support_report(tree, market.priors, q, n).in_h()) {
        weights[n] = w;
        found = true;
        break;
      }
    }
    if (!found) out.failing_nodes.push_back(n);
  }

  if (out.failing_nodes.empty()) out.kernel = make_kernel(market, std::move(weights));
  return out;
}

namespace {

// Supremum of {a in (0,1] : G(a) >= a} for the right-continuous step
// G(a) = sum of masses at magnitudes > a. The valid set is an interval
// anchored at 0. Returns the sup and whether it is attained.
std::pair<double, bool> step_crossing(std::vector<std::pair<double, double>> neg_mass) {
  std::sort(neg_mass.begin(), neg_mass.end());
  std::vector<double> mags;
  std::vector<double> mass;
  for (const auto& [u, q] : neg_mass) {
    if (!mags.empty() && mags.back() == u) {
      mass.back() += q;
    } else {
      mags.push_back(u);
      mass.push_back(q);
    }
  }
  double total = 0;
  for (double q : mass) total += q;

  double best = 0;
  bool attained = false;
  double g = total;
  for (std::size_t i = 0; i <= mags.size(); ++i) {
    const double lo = i == 0 ? 0.0 : mags[i - 1];
    const double hi = i < mags.size() ? mags[i] : std::numeric_limits<double>::infinity();
    if (g >= hi) {
      best = hi;
      attained = false;  // settled by the next interval's verdict
    } else if (g >= lo) {
      if (g > 0) {
        best = g;
        attained = true;
      }
      break;
    } else {
      break;
    }
    if (i < mags.size()) g -= mass[i];
  }
  if (best > 1.0) {
    best = 1.0;
    attained = true;  // G(1) >= total >= ... checked by caller via shave rules
  }
  return {best, attained};
}

// Largest level valid along one direction: projections z_j with masses.
std::pair<double, bool> alpha_along(const std::vector<double>& z, const VecD& q) {
  std::vector<std::pair<double, double>> neg;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (q[j] > 0.0 && z[j] < 0.0) neg.emplace_back(-z[j], q[j]);
  }
  return step_crossing(std::move(neg));
}

struct AlphaContext {
  std::vector<VecD> increments;  // per child
  VecD q;
  AffineSubspace aff;            // Aff(D), a linear subspace here
  std::vector<VecD> basis_unit;  // unit double basis
};

double dot_d(const VecD& a, const VecD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Exact feasibility of a violating h for the 1-norm statement: h in the
// orthant, |h|_1 = 1, h in Aff(D), and h . dS_j >= -alpha for every
// charged atom outside J. Infeasibility over all (J, orthant) certifies
// q(h dS < -alpha |h|) >= alpha for every nonzero h in Aff(D).
bool violating_h_exists(const AlphaContext& ctx, const Rat& alpha,
                        const std::vector<std::size_t>& outside, const std::vector<int>& orthant) {
  const std::size_t d = ctx.increments[0].size();
  lp::Problem prob;
  std::vector<int> h(d);
  for (std::size_t i = 0; i < d; ++i) h[i] = prob.add_var(false);

  std::vector<std::pair<int, Rat>> norm1;
  for (std::size_t i = 0; i < d; ++i) {
    prob.add_constraint({{h[i], Rat(orthant[i])}}, lp::Rel::Ge, 0);
    norm1.emplace_back(h[i], Rat(orthant[i]));
  }
  prob.add_constraint(norm1, lp::Rel::Eq, 1);

  // Membership in the linear subspace: residual of the projection is 0.
  for (std::size_t i = 0; i < d; ++i) {
    VecQ e(d, Rat(0));
    e[i] = 1;
    VecQ r = e;
    for (const VecQ& bv : ctx.aff.basis) {
      const Rat coef = dot(e, bv) / dot(bv, bv);
      for (std::size_t c = 0; c < d; ++c) r[c] -= coef * bv[c];
    }
    if (is_zero(r)) continue;
    std::vector<std::pair<int, Rat>> terms;
    for (std::size_t c = 0; c < d; ++c) {
      if (r[c] != 0) terms.emplace_back(h[c], r[c]);
    }
    prob.add_constraint(terms, lp::Rel::Eq, 0);
  }

  for (std::size_t j : outside) {
    std::vector<std::pair<int, Rat>> terms;
    const VecQ y = vecq_from_doubles(ctx.increments[j]);
    for (std::size_t c = 0; c < d; ++c) {
      if (y[c] != 0) terms.emplace_back(h[c], y[c]);
    }
    prob.add_constraint(terms, lp::Rel::Ge, -alpha);
  }
  return prob.solve().status == lp::Status::Optimal;
}

bool certify_alpha(const AlphaContext& ctx, double alpha) {
  const Rat aq = rat_from_double(alpha);
  std::vector<std::size_t> charged;
  for (std::size_t j = 0; j < ctx.q.size(); ++j) {
    if (ctx.q[j] > 0.0) charged.push_back(j);
  }
  const std::size_t m = charged.size();
  if (m > kMaxArrangementNormals) return false;  // caller falls back

  // Maximal subsets J of charged atoms with q(J) < alpha; smaller J only
  // add constraints, so the maximal ones decide feasibility.
  std::vector<std::uint32_t> small;
  for (std::uint32_t s = 0; s < (1u << m); ++s) {
    double massq = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (s >> i & 1) massq += ctx.q[charged[i]];
    }
    if (massq < alpha) small.push_back(s);
  }
  const std::size_t d = ctx.increments[0].size();
  for (std::uint32_t s : small) {
    bool maximal = true;
    for (std::size_t i = 0; i < m && maximal; ++i) {
      if (!(s >> i & 1) &&
          std::find(small.begin(), small.end(), s | (1u << i)) != small.end()) {
        maximal = false;
      }
    }
    if (!maximal) continue;
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(s >> i & 1)) outside.push_back(charged[i]);
    }
    for (std::uint32_t om = 0; om < (1u << d); ++om) {
      std::vector<int> orthant(d);
      for (std::size_t i = 0; i < d; ++i) orthant[i] = (om >> i & 1) ? 1 : -1;
      if (violating_h_exists(ctx, aq, outside, orthant)) return false;
    }
  }
  return true;
}

}  // namespace

AlphaResult alpha_qna(const ScenarioTree& tree, const PriorSet& priors, const Kernel& kernel,
                      int node, const AlphaOptions& opt) {
  const VecD& q = kernel.probs[node];
  NodeSupport rep = support_report(tree, priors, q, node);
  if (!rep.in_h()) {
    throw std::domain_error("alpha_qna: node '" + tree.node(node).path +
                            "' fails the local no-arbitrage condition");
  }

  AlphaContext ctx;
  const auto& children = tree.node(node).children;
  for (std::size_t c = 0; c < children.size(); ++c) {
    ctx.increments.push_back(delta_s(tree, node, static_cast<int>(c)));
  }
  ctx.q = q;
  ctx.aff = rep.aff_d;
  for (const VecQ& bq : ctx.aff.basis) {
    VecD b(bq.size());
    double n2 = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = bq[i].get_d();
      n2 += b[i] * b[i];
    }
    const double n = std::sqrt(n2);
    for (double& v : b) v /= n;
    ctx.basis_unit.push_back(std::move(b));
  }

  AlphaResult out;
  const std::size_t dim = ctx.basis_unit.size();
  if (dim == 0) {
    // Aff(D) = {0}: the quantifier is vacuous and any level works.
    out.alpha = 1.0;
    out.exact = true;
    out.empirical = 1.0;
    return out;
  }

  if (dim == 1) {
    double best = 1.0;
    bool all_attained = true;
    for (double dir : {1.0, -1.0}) {
      std::vector<double> z(ctx.increments.size());
      for (std::size_t j = 0; j < z.size(); ++j) {
        z[j] = dir * dot_d(ctx.basis_unit[0], ctx.increments[j]);
      }
      const auto [a, attained] = alpha_along(z, ctx.q);
      if (a < best || (a == best && !attained)) {
        best = a;
        all_attained = attained;
      }
    }
    out.alpha = all_attained ? best : best * (1.0 - 1e-9);
    out.exact = true;
    out.empirical = best;
    return out;
  }

  // Falsification sweep for an upper bound on the supremum.
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  double emp = 1.0;
  for (int it = 0; it < opt.sweep_samples; ++it) {
    VecD tau(dim);
    double n2 = 0;
    for (double& t : tau) {
      t = gauss(rng);
      n2 += t * t;
    }
    if (n2 == 0) continue;
    const double n = std::sqrt(n2);
    VecD h(ctx.increments[0].size(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t c = 0; c < h.size(); ++c) h[c] += tau[i] / n * ctx.basis_unit[i][c];
    }
    std::vector<double> z(ctx.increments.size());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = dot_d(h, ctx.increments[j]);
    emp = std::min(emp, alpha_along(z, ctx.q).first);
  }
  out.empirical = emp;

  std::size_t charged_count = 0;
  for (double p : q) charged_count += p > 0.0;
  if (charged_count > kMaxArrangementNormals) {
    // Subset enumeration is off the table; report the swept level with a
    // safety haircut and no exactness claim.
    out.alpha = emp * 0.5;
    out.exact = false;
    return out;
  }

  double lo = 0.0, hi = emp;
  if (certify_alpha(ctx, hi * (1.0 - 1e-12))) {
    lo = hi * (1.0 - 1e-12);
  } else {
    for (int it = 0; it < opt.bisect_iters; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (certify_alpha(ctx, mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  if (lo == 0.0) {
    throw std::runtime_error("alpha_qna: could not certify a positive level at node '" +
                             tree.node(node).path + "'");
  }
  out.alpha = lo * (1.0 - 1e-12);
  out.exact = false;
  return out;
}

}  // namespace maxmin
