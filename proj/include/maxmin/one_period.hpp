#ifndef MAXMIN_ONE_PERIOD_HPP
#define MAXMIN_ONE_PERIOD_HPP

#include <memory>
#include <string>
#include <vector>

#include "maxmin/geometry.hpp"
#include "maxmin/market.hpp"
#include "maxmin/utility.hpp"
#include "maxmin/xreal.hpp"

namespace maxmin {

enum class Side { Left, Value, Right };

/// Next-stage value function V(atom, x), queried with one-sided limits.
/// breakpoints(atom) lists where the one-sided limits may disagree with
/// the value; off that list the three sides must coincide.
class StageValue {
 public:
  virtual ~StageValue() = default;
  virtual XReal eval(std::size_t atom, double x, Side side) const = 0;
  virtual const std::vector<double>& breakpoints(std::size_t atom) const = 0;
};

/// Exact StageValue over per-atom piecewise utilities.
class CatalogStageValue : public StageValue {
 public:
  explicit CatalogStageValue(std::vector<const MonotoneUtility*> per_atom);
  XReal eval(std::size_t atom, double x, Side side) const override;
  const std::vector<double>& breakpoints(std::size_t atom) const override;

 private:
  std::vector<const MonotoneUtility*> per_atom_;
};

struct OnePeriodAtom {
  std::string label;
  VecD y;  // one-period increment
};

/// A one-period robust problem: finitely many atoms, prior vertices over
/// them, a designated kernel entry p*, the next-stage value function and
/// the growth-certificate data. prepare() caches the support geometry
/// and the arrangement sign patterns the closure formula needs.
struct OnePeriodProblem {
  std::vector<OnePeriodAtom> atoms;
  std::vector<VecD> vertices;
  VecD p_star;
  const StageValue* value = nullptr;
  std::vector<XReal> c_atom;
  double gamma_lo = 0, gamma_hi = 0, eta = 0;

  // Caches (filled by prepare()).
  std::vector<bool> charged;              // by >= 1 vertex
  AffineSubspace aff_d;                   // affine hull of the charged support
  VecD aff_center;                        // 0 when 0 is in Aff(D)
  std::vector<VecD> aff_basis;            // unit basis vectors (doubles)
  std::vector<SignPattern> patterns;      // strict patterns of normals (1, Y_j)
  bool patterns_exact = true;             // false past the arrangement guard

  std::size_t dim() const { return aff_basis.size(); }
  VecD h_from_coords(const VecD& tau) const;
  void prepare();
};

/// Expected utility under one prior: E_p V(., x + h.Y).
XReal psi_p(const OnePeriodProblem& prob, const VecD& p, double x, const VecD& h);

/// Worst case over the prior set; exact as a min over the vertices.
XReal psi(const OnePeriodProblem& prob, double x, const VecD& h);

/// Closure Cl(Psi)(x, h): maximum over the realizable strict sign
/// patterns of the directional one-sided limits. Falls back to a sampled
/// limsup (flagged via *approximate) when the arrangement guard trips.
XReal cl_psi(const OnePeriodProblem& prob, double x, const VecD& h, bool* approximate = nullptr);

struct OnePeriodConstants {
  double alpha_star = 0;
  double eta = 0;
  XReal c_star = 0;
  XReal l_star = 0;
  long n0_star = 0;
  bool n0_found = false;
  bool failure = false;  // some assumption unattainable on this data
  std::string failure_reason;
};

/// c* = E_{p*} C, l* = sum_theta E_{p*} V+(., 1 + theta.Y), and the
/// smallest n with p*(V(., -n) <= -(1 + 2c*/alpha*)) >= 1 - alpha*/2.
/// The n search is capped; past the cap the constants carry a failure
/// flag instead of looping.
OnePeriodConstants one_period_constants(const OnePeriodProblem& prob, double alpha_star,
                                        long n0_cap = 1'000'000);

struct KBounds {
  double k0 = 0;
  XReal k1 = 0;
  bool k1_finite() const { return k1.finite(); }
};

KBounds k_bounds(const OnePeriodProblem& prob, const OnePeriodConstants& consts, double x);

struct SearchOptions {
  int grid_per_direction = 2000;
  double refine_tol = 1e-10;
  double domain_radius_factor = 1.0;  // search ball = factor * K1(x)
  bool closure_objective = true;      // maximize Cl(Psi) (else plain Psi)
  double explicit_radius = 0;         // > 0 overrides the K1-derived ball
};

struct SearchResult {
  VecD h;
  XReal value = XReal::neg_inf();
  bool bound_active = false;  // optimum sits on the search-ball boundary
  bool unattained = false;    // plain sup approached at a discontinuity
  VecD near_special;          // the special point the optimum clusters at
  bool approximate_closure = false;
};

/// Global candidate search over Aff(D) within the K1 ball: 0, breakpoint
/// preimages, a uniform grid per basis direction, then pattern-search
/// refinement of the best candidates. Deterministic tie-break: larger
/// value, then smaller |h|, then lexicographic h.
SearchResult maximize_cl_psi(const OnePeriodProblem& prob, const OnePeriodConstants& consts,
                             double x, const SearchOptions& opt = {});

/// Same search on Psi itself: a sup approximation for the value problem,
/// with a no-attainment diagnostic when the optimum is only a limit.
SearchResult maximize_psi(const OnePeriodProblem& prob, const OnePeriodConstants& consts, double x,
                          const SearchOptions& opt = {});

}  // namespace maxmin

#endif  // MAXMIN_ONE_PERIOD_HPP
