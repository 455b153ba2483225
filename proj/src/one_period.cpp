#include "maxmin/one_period.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace maxmin {

namespace {

double dot_d(const VecD& a, const VecD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_d(const VecD& a) { return std::sqrt(dot_d(a, a)); }

VecD to_double(const VecQ& q) {
  VecD out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = q[i].get_d();
  return out;
}

}  // namespace

CatalogStageValue::CatalogStageValue(std::vector<const MonotoneUtility*> per_atom)
    : per_atom_(std::move(per_atom)) {}

XReal CatalogStageValue::eval(std::size_t atom, double x, Side side) const {
  const MonotoneUtility& u = *per_atom_.at(atom);
  switch (side) {
    case Side::Left:
      return u.left_limit(x);
    case Side::Value:
      return u.eval(x);
    case Side::Right:
      return u.cl_eval(x);
  }
  return 0;
}

const std::vector<double>& CatalogStageValue::breakpoints(std::size_t atom) const {
  return per_atom_.at(atom)->breakpoints();
}

VecD OnePeriodProblem::h_from_coords(const VecD& tau) const {
  VecD h = aff_center;
  for (std::size_t i = 0; i < aff_basis.size(); ++i) {
    for (std::size_t c = 0; c < h.size(); ++c) h[c] += tau[i] * aff_basis[i][c];
  }
  return h;
}

void OnePeriodProblem::prepare() {
  const std::size_t m = atoms.size();
  charged.assign(m, false);
  for (const VecD& v : vertices) {
    for (std::size_t j = 0; j < m; ++j) {
      if (v[j] > 0.0) charged[j] = true;
    }
  }

  std::vector<VecQ> support;
  for (std::size_t j = 0; j < m; ++j) {
    if (charged[j]) support.push_back(vecq_from_doubles(atoms[j].y));
  }
  aff_d = affine_hull(support);

  const std::size_t d = atoms[0].y.size();
  const VecQ zero(d, Rat(0));
  aff_center = aff_d.contains(zero) ? VecD(d, 0.0) : to_double(aff_d.project(zero));
  aff_basis.clear();
  for (const VecQ& bq : aff_d.basis) {
    VecD b = to_double(bq);
    const double n = norm_d(b);
    for (double& v : b) v /= n;
    aff_basis.push_back(std::move(b));
  }

  patterns.clear();
  patterns_exact = m <= kMaxArrangementNormals;
  if (patterns_exact) {
    std::vector<VecQ> normals;
    for (const OnePeriodAtom& a : atoms) {
      VecQ w{Rat(1)};
      for (double y : a.y) w.push_back(rat_from_double(y));
      normals.push_back(std::move(w));
    }
    patterns = strict_sign_patterns(normals);
  }
}

namespace {

// Generalized-sense expectation: a -inf atom with positive weight makes
// the whole sum -inf (the maximization convention), then +inf, else the
// finite sum. Zero-weight atoms never contribute, even at +-inf.
XReal expect_sides(const OnePeriodProblem& prob, const VecD& p, const std::vector<double>& args,
                   const SignPattern* sigma) {
  double sum = 0;
  bool has_pos_inf = false;
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    if (p[j] == 0.0) continue;
    Side side = Side::Value;
    if (sigma) side = (*sigma)[j] > 0 ? Side::Right : ((*sigma)[j] < 0 ? Side::Left : Side::Value);
    const XReal v = prob.value->eval(j, args[j], side);
    if (v.is_neg_inf()) return XReal::neg_inf();
    if (v.is_pos_inf()) {
      has_pos_inf = true;
    } else {
      sum += p[j] * v.value();
    }
  }
  return has_pos_inf ? XReal::pos_inf() : XReal(sum);
}

std::vector<double> atom_args(const OnePeriodProblem& prob, double x, const VecD& h) {
  std::vector<double> args(prob.atoms.size());
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    args[j] = x + dot_d(h, prob.atoms[j].y);
  }
  return args;
}

bool hits_breakpoint(const OnePeriodProblem& prob, const std::vector<double>& args) {
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    const auto& bp = prob.value->breakpoints(j);
    if (std::binary_search(bp.begin(), bp.end(), args[j])) return true;
  }
  return false;
}

}  // namespace

XReal psi_p(const OnePeriodProblem& prob, const VecD& p, double x, const VecD& h) {
  const auto args = atom_args(prob, x, h);
  return expect_sides(prob, p, args, nullptr);
}

XReal psi(const OnePeriodProblem& prob, double x, const VecD& h) {
  const auto args = atom_args(prob, x, h);
  XReal best = XReal::pos_inf();
  for (const VecD& p : prob.vertices) {
    best = min(best, expect_sides(prob, p, args, nullptr));
    if (best.is_neg_inf()) break;
  }
  return best;
}

XReal cl_psi(const OnePeriodProblem& prob, double x, const VecD& h, bool* approximate) {
  if (approximate) *approximate = false;
  const auto args = atom_args(prob, x, h);
  // Off the breakpoint preimages every one-sided limit equals the value,
  // so the closure coincides with Psi.
  if (!hits_breakpoint(prob, args)) return psi(prob, x, h);

  if (!prob.patterns_exact) {
    // Sampled limsup over shrinking random perturbations of (x, h).
    if (approximate) *approximate = true;
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss;
    XReal best = psi(prob, x, h);
    const std::size_t d = h.size();
    for (int scale = 4; scale <= 8; ++scale) {
      const double eps = std::pow(10.0, -scale);
      for (int it = 0; it < 2000; ++it) {
        double dx = gauss(rng);
        VecD hp = h;
        VecD delta(d);
        double n2 = dx * dx;
        for (std::size_t i = 0; i < d; ++i) {
          delta[i] = gauss(rng);
          n2 += delta[i] * delta[i];
        }
        const double n = std::sqrt(n2);
        for (std::size_t i = 0; i < d; ++i) hp[i] += eps * delta[i] / n;
        best = max(best, psi(prob, x + eps * dx / n, hp));
      }
    }
    return best;
  }

  // Exact directional limits: max over the realizable strict sign
  // patterns of the arrangement with normals (1, Y_j). The all-plus
  // pattern dominates the value pattern, so Psi(x,h) itself never wins.
  XReal best = XReal::neg_inf();
  for (const SignPattern& sigma : prob.patterns) {
    XReal worst = XReal::pos_inf();
    for (const VecD& p : prob.vertices) {
      worst = min(worst, expect_sides(prob, p, args, &sigma));
      if (worst.is_neg_inf()) break;
    }
    best = max(best, worst);
  }
  return best;
}

OnePeriodConstants one_period_constants(const OnePeriodProblem& prob, double alpha_star,
                                        long n0_cap) {
  OnePeriodConstants k;
  k.alpha_star = alpha_star;
  k.eta = prob.eta;

  XReal c_star = 0.0;
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    if (prob.p_star[j] == 0.0) continue;
    c_star += XReal(prob.p_star[j]) * prob.c_atom[j];
  }
  k.c_star = c_star;

  const std::size_t d = prob.atoms[0].y.size();
  XReal l_star = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
      if (prob.p_star[j] == 0.0) continue;
      double arg = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        arg += ((mask >> i) & 1 ? 1.0 : -1.0) * prob.atoms[j].y[i];
      }
      l_star += XReal(prob.p_star[j]) * prob.value->eval(j, arg, Side::Value).pos();
    }
  }
  k.l_star = l_star;

  if (!c_star.finite()) {
    k.failure = true;
    k.failure_reason = "c* = +inf (growth-certificate integrability fails under p*)";
    return k;
  }
  if (!l_star.finite()) {
    k.failure = true;
    k.failure_reason = "l* = +inf (V+ not integrable at the unit corners under p*)";
    return k;
  }

  const double threshold = 1.0 + 2.0 * c_star.value() / alpha_star;
  const double target = 1.0 - alpha_star / 2.0 - 1e-12;
  const auto mass_at = [&](long n) {
    double mass = 0;
    for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
      if (prob.p_star[j] == 0.0) continue;
      if (prob.value->eval(j, -static_cast<double>(n), Side::Value) <= XReal(-threshold)) {
        mass += prob.p_star[j];
      }
    }
    return mass;
  };
  // The event is monotone in n (V nondecreasing), so exponential plus
  // binary search finds the smallest admissible n.
  long hi = 1;
  while (hi <= n0_cap && mass_at(hi) < target) hi *= 2;
  if (hi > n0_cap) {
    k.n0_found = false;
    k.failure = true;
    k.failure_reason = "no n <= cap with p*(V(., -n) <= -(1+2c*/a*)) >= 1 - a*/2";
    return k;
  }
  long lo = hi / 2;  // mass_at(lo) < target (or lo == 0)
  while (lo + 1 < hi) {
    const long mid = lo + (hi - lo) / 2;
    (mass_at(mid) >= target ? hi : lo) = mid;
  }
  k.n0_star = hi;
  k.n0_found = true;
  return k;
}

KBounds k_bounds(const OnePeriodProblem& prob, const OnePeriodConstants& consts, double x) {
  if (!consts.n0_found) throw std::domain_error("k_bounds: n0* not finite");
  const double a = consts.alpha_star;
  const double eta = consts.eta;
  const double xp = std::max(x, 0.0);
  const double base = (xp + static_cast<double>(consts.n0_star)) / a;

  KBounds kb;
  kb.k0 = std::max({1.0, xp, base, std::pow(base, 1.0 / (1.0 - eta))});

  const XReal psi0 = psi(prob, x, VecD(prob.atoms[0].y.size(), 0.0));
  if (psi0.is_neg_inf() || !consts.l_star.finite() || !consts.c_star.finite()) {
    kb.k1 = XReal::pos_inf();
    return kb;
  }
  const double exp_tail = 1.0 / (eta * prob.gamma_hi - prob.gamma_lo);
  const double t1 = std::pow(6.0 * consts.l_star.value() / a, exp_tail);
  const double t2 = std::pow(6.0 * consts.c_star.value() / a, exp_tail);
  const double t3 = std::pow(6.0 / a * psi0.neg().value(), 1.0 / (eta * prob.gamma_hi));
  kb.k1 = std::max({kb.k0, t1, t2, t3});
  return kb;
}

namespace {

struct Candidate {
  VecD tau;
  XReal value = XReal::neg_inf();
};

double norm_tau(const VecD& t) { return norm_d(t); }

// value desc, then |h| asc, then lexicographic h asc
bool better_than(const XReal& va, const VecD& ta, const XReal& vb, const VecD& tb) {
  if (va != vb) return va > vb;
  const double na = norm_tau(ta), nb = norm_tau(tb);
  if (na != nb) return na < nb;
  return ta < tb;
}

SearchResult search_impl(const OnePeriodProblem& prob, const OnePeriodConstants& consts, double x,
                         const SearchOptions& opt) {
  const std::size_t d = prob.atoms[0].y.size();
  const std::size_t k = prob.dim();

  SearchResult res;
  bool approx_any = false;
  const auto objective = [&](const VecD& tau) -> XReal {
    const VecD h = prob.h_from_coords(tau);
    if (opt.closure_objective) {
      bool ap = false;
      const XReal v = cl_psi(prob, x, h, &ap);
      approx_any = approx_any || ap;
      return v;
    }
    return psi(prob, x, h);
  };

  if (k == 0) {
    res.h = prob.aff_center;
    res.value = objective({});
    res.approximate_closure = approx_any;
    return res;
  }

  double radius = opt.explicit_radius;
  if (radius <= 0) {
    const KBounds kb = k_bounds(prob, consts, x);
    if (!kb.k1_finite()) throw std::domain_error("maximize: K1(x) = +inf");
    radius = opt.domain_radius_factor * kb.k1.value();
  }

  const auto clamp = [&](VecD tau) {
    const double n = norm_tau(tau);
    if (n > radius) {
      for (double& v : tau) v *= radius / n;
    }
    return tau;
  };

  // Candidates: the origin, breakpoint preimages (exact in dim 1,
  // min-norm and pairwise intersections in dim 2), a uniform grid.
  std::vector<VecD> cands;
  std::vector<VecD> specials;  // exact preimages + origin, for diagnostics
  cands.emplace_back(k, 0.0);
  specials.emplace_back(k, 0.0);

  struct Plane {
    VecD w;      // gradient of tau -> atom argument
    double rhs;  // breakpoint minus constant part
  };
  std::vector<Plane> planes;
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    VecD w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = dot_d(prob.aff_basis[i], prob.atoms[j].y);
    const double a0 = x + dot_d(prob.aff_center, prob.atoms[j].y);
    for (double b : prob.value->breakpoints(j)) {
      planes.push_back({w, b - a0});
    }
  }
  for (const Plane& pl : planes) {
    const double wn2 = dot_d(pl.w, pl.w);
    if (wn2 < 1e-24) continue;
    VecD tau(k);
    for (std::size_t i = 0; i < k; ++i) tau[i] = pl.rhs * pl.w[i] / wn2;
    specials.push_back(tau);
    cands.push_back(clamp(tau));
  }
  if (k == 2) {
    for (std::size_t a = 0; a < planes.size(); ++a) {
      for (std::size_t b = a + 1; b < planes.size(); ++b) {
        const auto& a1 = planes[a];
        const auto& a2 = planes[b];
        const double det = a1.w[0] * a2.w[1] - a1.w[1] * a2.w[0];
        const double scale = norm_d(a1.w) * norm_d(a2.w);
        if (std::abs(det) <= 1e-12 * (1.0 + scale)) continue;
        VecD tau{(a1.rhs * a2.w[1] - a2.rhs * a1.w[1]) / det,
                 (a1.w[0] * a2.rhs - a2.w[0] * a1.rhs) / det};
        specials.push_back(tau);
        cands.push_back(clamp(tau));
      }
    }
  }

  const int grid = std::max(2, opt.grid_per_direction);
  const double spacing = 2.0 * radius / (grid - 1);
  if (k == 1) {
    for (int i = 0; i < grid; ++i) cands.push_back({-radius + i * spacing});
  } else {
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        cands.push_back(clamp({-radius + i * spacing, -radius + j * spacing}));
      }
    }
  }

  std::vector<Candidate> scored;
  scored.reserve(cands.size());
  for (VecD& tau : cands) scored.push_back({tau, objective(tau)});
  std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
    return better_than(a.value, a.tau, b.value, b.tau);
  });

  // Pattern-search refinement from the leading candidates.
  const std::size_t keep = std::min<std::size_t>(10, scored.size());
  std::vector<Candidate> finals(scored.begin(), scored.begin() + keep);
  for (std::size_t c = 0; c < keep; ++c) {
    VecD tau = finals[c].tau;
    XReal val = finals[c].value;
    double step = std::max(spacing, 1e-3);
    while (step >= opt.refine_tol) {
      bool improved = false;
      for (std::size_t i = 0; i < k; ++i) {
        for (double s : {1.0, -1.0}) {
          VecD t = tau;
          t[i] += s * step;
          t = clamp(t);
          const XReal v = objective(t);
          if (v > val) {
            tau = t;
            val = v;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    finals.push_back({tau, val});
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < finals.size(); ++i) {
    if (better_than(finals[i].value, finals[i].tau, finals[best].value, finals[best].tau)) {
      best = i;
    }
  }

  res.h = prob.h_from_coords(finals[best].tau);
  res.value = finals[best].value;
  res.approximate_closure = approx_any;
  res.bound_active = norm_tau(finals[best].tau) >= radius * (1.0 - 1e-9) - opt.refine_tol;

  if (!opt.closure_objective) {
    for (const VecD& s : specials) {
      double dist2 = 0;
      for (std::size_t i = 0; i < k; ++i) {
        dist2 += (finals[best].tau[i] - s[i]) * (finals[best].tau[i] - s[i]);
      }
      if (std::sqrt(dist2) <= 1e-6 * (1.0 + norm_tau(s))) {
        const XReal at_special = objective(s);
        if (at_special < res.value &&
            !(at_special.finite() && res.value.finite() &&
              at_special.value() >= res.value.value() - 1e-9 * (1.0 + std::abs(res.value.value())))) {
          res.unattained = true;
          res.near_special = prob.h_from_coords(s);
          break;
        }
      }
    }
  }
  return res;
}

}  // namespace

SearchResult maximize_cl_psi(const OnePeriodProblem& prob, const OnePeriodConstants& consts,
                             double x, const SearchOptions& opt) {
  SearchOptions o = opt;
  o.closure_objective = true;
  return search_impl(prob, consts, x, o);
}

SearchResult maximize_psi(const OnePeriodProblem& prob, const OnePeriodConstants& consts, double x,
                          const SearchOptions& opt) {
  SearchOptions o = opt;
  o.closure_objective = false;
  return search_impl(prob, consts, x, o);
}

}  // namespace maxmin
