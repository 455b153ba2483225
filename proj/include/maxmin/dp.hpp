#ifndef MAXMIN_DP_HPP
#define MAXMIN_DP_HPP

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "maxmin/market.hpp"
#include "maxmin/one_period.hpp"
#include "maxmin/robust_structure.hpp"
#include "maxmin/utility.hpp"

namespace maxmin {

/// Backward recursion C_t = sup over prior vertices of E[C_{t+1}].
/// The supremum over the hull is attained at vertices because C >= 0 and
/// the functional is linear. Throws on a negative terminal value.
std::vector<XReal> c_recursion(const ScenarioTree& tree, const PriorSet& priors,
                               const std::function<XReal(const std::string&)>& c_terminal);

struct Diagnostic {
  int node = -1;
  std::string kind;    // "unattained", "bound-active", "approximate-closure", ...
  std::string detail;
};

struct PolicyTrace {
  double x0 = 0;
  std::map<int, VecD> strategy;   // reachable non-terminal node -> h
  std::map<int, double> wealth;   // reachable node -> wealth on arrival
  std::vector<Diagnostic> diags;
};

struct NodeAudit {
  int node = -1;
  std::string path;
  double alpha = 0;
  XReal c_t_p = 0;  // E_q C_{t+1}
  XReal i_t_p = 0;  // 1 + 2 c / alpha
  XReal l_t_p = 0;
  long n_t_p = 0;
  bool n_t_p_found = false;
};

struct WellDefEntry {
  int t = 0;
  std::vector<int> theta;  // entries in {-1,0,1}; all-zero is theta = 0
  XReal e_pos = 0, e_neg = 0;
  bool ok = false;
};

struct AuditReport {
  bool h_kernel_ok = false;
  std::vector<int> h_failing_nodes;
  std::vector<NodeAudit> nodes;
  XReal u0p_at_1 = 0;
  bool u0p_finite = false;
  std::vector<WellDefEntry> well_def;
  bool well_def_ok = false;
  std::vector<std::string> inadmissible_paths;  // zero policy at x_ref
  bool zero_policy_admissible = false;
  std::vector<Diagnostic> diags;
};

struct DpConfig {
  int max_exact_horizon = 3;
  SearchOptions search{.grid_per_direction = 301, .refine_tol = 1e-10,
                       .domain_radius_factor = 1.0, .closure_objective = true};
  long n0_cap = 1'000'000;
  AlphaOptions alpha;
  double memo_quantum = 1e-12;
};

/// Exact-recursive multi-period engine. Value queries at (node, wealth)
/// run the one-period candidate search on the node-induced problem with
/// the continuation value evaluated recursively; memoized on the wealth
/// rounded to the configured quantum. Guarded to shallow horizons.
class DpEngine {
 public:
  DpEngine(const Market& market, const RandomUtility& utility, const AECertificate& cert,
           Kernel kernel, DpConfig cfg = {});

  const Market& market() const { return market_; }
  const Kernel& kernel() const { return kernel_; }
  const std::vector<XReal>& c_values() const { return c_values_; }
  double alpha_at(int node) const;
  const OnePeriodConstants& constants(int node, bool robust) const;

  /// U_t(node, x): sup-approximation of the robust value (no closure).
  XReal robust_value(int node, double x) const;
  /// U_t^P(node, x) for the engine's kernel.
  XReal kernel_value(int node, double x) const;

  struct ClResult {
    XReal value = XReal::neg_inf();
    VecD h;
    bool approximate = false;
  };
  /// u_t^cl(node, x) = sup_h Cl(u_t)(node, x, h) and its maximizer.
  ClResult u_cl_value(int node, double x) const;

  /// Right limit Cl(U_t)(node, x) estimated on the epsilon ladder.
  XReal cl_robust_value(int node, double x) const;

  PolicyTrace synthesize_strategy(double x0) const;
  XReal lower_value(const PolicyTrace& trace) const;

  struct Gap {
    XReal realized_floor = 0;  // lower_value of the trace
    XReal bound = 0;           // sup over vertices of E[jump at V_T]
  };
  Gap gap_bound(const PolicyTrace& trace) const;

  AuditReport audit(double x_ref = 1.0) const;

  /// Chain u_t <= Cl(U_t) <= u_t^cl at one (node, x); tolerance slack for
  /// the ladder-estimated middle term. Returns offending description or
  /// empty.
  std::string check_chain(int node, double x, double tol = 1e-7) const;

  const std::vector<Diagnostic>& diagnostics() const { return diags_; }
  const std::vector<int>& reachable() const { return reachable_; }

 private:
  struct StagePack;
  const OnePeriodProblem& node_problem(int node, bool robust) const;
  XReal value_impl(int node, double x, bool robust) const;

  Market market_;
  RandomUtility utility_;
  AECertificate cert_;
  Kernel kernel_;
  DpConfig cfg_;
  std::vector<XReal> c_values_;
  std::vector<int> reachable_;
  std::vector<bool> reachable_mask_;

  mutable std::map<int, double> alpha_cache_;
  mutable std::map<std::pair<int, bool>, OnePeriodConstants> consts_cache_;
  mutable std::map<std::pair<int, bool>, std::unique_ptr<StagePack>> stage_cache_;
  mutable std::map<std::tuple<int, bool, double>, XReal> value_cache_;
  mutable std::vector<Diagnostic> diags_;
  mutable std::mutex mu_;
};

struct GridDpConfig {
  int wealth_points = 257;
  double wealth_lo = -16.0;
  double wealth_hi = 16.0;
  SearchOptions search{.grid_per_direction = 201, .refine_tol = 1e-8,
                       .domain_radius_factor = 1.0, .closure_objective = false};
  long n0_cap = 100000;
  AlphaOptions alpha;
};

/// Grid-interpolated backward induction for horizons past the exact
/// guard: value functions are tabulated on a wealth grid and queried by
/// monotone piecewise-linear interpolation. Approximate by construction.
class GridDpEngine {
 public:
  GridDpEngine(const Market& market, const RandomUtility& utility, const AECertificate& cert,
               Kernel kernel, GridDpConfig cfg = {});

  XReal robust_value(int node, double x) const;
  PolicyTrace synthesize_strategy(double x0) const;
  XReal lower_value(const PolicyTrace& trace) const;

 private:
  Market market_;
  RandomUtility utility_;
  AECertificate cert_;
  Kernel kernel_;
  GridDpConfig cfg_;
  std::vector<double> grid_;
  std::vector<std::vector<XReal>> values_;      // per node, per knot
  std::vector<std::vector<VecD>> maximizers_;   // per node, per knot
  std::vector<XReal> c_values_;
};

}  // namespace maxmin

#endif  // MAXMIN_DP_HPP
