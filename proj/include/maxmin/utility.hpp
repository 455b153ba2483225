#ifndef MAXMIN_UTILITY_HPP
#define MAXMIN_UTILITY_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "maxmin/xreal.hpp"

namespace maxmin {

/// Closed-form segment evaluators. Each is continuous on the closure of
/// its interval, so one-sided limits at the endpoints are exact segment
/// evaluations rather than numeric limits.
struct Segment {
  enum class Kind { Constant, Affine, Power, Exponential, NegInf, PosInf };
  Kind kind = Kind::Constant;
  double value = 0;      // Constant
  double slope = 0;      // Affine
  double intercept = 0;  // Affine
  double scale = 0;      // Power / Exponential
  double center = 0;     // Power / Exponential
  double exponent = 1;   // Power
  double rate = 0;       // Exponential
  double offset = 0;     // Power / Exponential

  static Segment constant(double v);
  static Segment affine(double slope, double intercept);
  /// scale * sign(x - center) * |x - center|^exponent + offset
  static Segment power(double scale, double center, double exponent, double offset);
  /// scale * exp(rate * (x - center)) + offset
  static Segment exponential(double scale, double rate, double center, double offset);
  static Segment neg_inf();
  static Segment pos_inf();

  XReal eval(double x) const;
  bool nondecreasing() const;
};

/// Nondecreasing extended-real piecewise function with finitely many
/// jumps. Stores the exact value at each breakpoint; segments live on
/// the open intervals between breakpoints.
class MonotoneUtility {
 public:
  /// segments.size() must equal breakpoints.size() + 1; construction
  /// validates global monotonicity (exact per-segment predicates,
  /// junction ordering, plus an audit-grid scan).
  MonotoneUtility(std::vector<double> breakpoints, std::vector<XReal> values,
                  std::vector<Segment> segments);

  /// Single-segment function on all of R.
  explicit MonotoneUtility(Segment seg);

  XReal eval(double x) const;
  /// Right limit; equals the closure Cl(U)(x) for nondecreasing U.
  XReal cl_eval(double x) const;
  XReal left_limit(double x) const;
  /// Jump Cl(U)(x) - U(x); zero off breakpoints, never negative.
  XReal jump(double x) const;

  const std::vector<double>& breakpoints() const { return breaks_; }

 private:
  void validate() const;
  std::vector<double> breaks_;
  std::vector<XReal> values_;
  std::vector<Segment> segs_;
};

/// Terminal-node-indexed utility; per-node overrides make U random.
class RandomUtility {
 public:
  explicit RandomUtility(MonotoneUtility base, std::map<std::string, MonotoneUtility> overrides = {});
  const MonotoneUtility& at(const std::string& node) const;

  XReal eval(const std::string& node, double x) const { return at(node).eval(x); }
  XReal cl_eval(const std::string& node, double x) const { return at(node).cl_eval(x); }
  XReal jump(const std::string& node, double x) const { return at(node).jump(x); }

 private:
  MonotoneUtility base_;
  std::map<std::string, MonotoneUtility> overrides_;
};

/// Asymptotic-elasticity certificate: exponents, the per-node constant C
/// and the eta pick with gamma_lo < eta * gamma_hi.
struct AECertificate {
  double gamma_lo = 0;
  double gamma_hi = 0;
  double eta = 0;
  XReal c_default = 0;
  std::map<std::string, XReal> c_overrides;

  XReal c_at(const std::string& node) const;
  bool valid() const;
  static double default_eta(double gamma_lo, double gamma_hi) {
    return (gamma_lo / gamma_hi + 1.0) / 2.0;
  }
};

/// Sampling grid for the universally quantified growth inequalities.
struct AuditGrid {
  std::vector<double> lambdas;  // all >= 1, log-spaced up to 1e6
  std::vector<double> xs;       // breakpoints +- offsets and a broad sweep
};

AuditGrid make_audit_grid(const std::vector<double>& breakpoints);

struct CheckViolation {
  std::string node;
  double lambda = 0;  // unused by some checkers
  double x = 0;
  std::string what;
};

struct CheckReport {
  bool pass = true;
  std::vector<CheckViolation> violations;
};

/// Verifies U(w, l*x) <= l^g (U(w,x) + C(w)) for both exponents on every
/// grid pair at every listed node with C(w) < +inf. Rejects an invalid
/// certificate before sampling.
CheckReport check_ae(const RandomUtility& u, const AECertificate& cert,
                     const std::vector<std::string>& nodes, const AuditGrid& grid);

/// U(w, x_low(w)) < -C(w) on every listed node; x_low must be < 0.
CheckReport check_negativity(const RandomUtility& u,
                             const std::map<std::string, double>& x_low_overrides,
                             double x_low_default, const AECertificate& cert,
                             const std::vector<std::string>& nodes);

/// Type-(A) checks: zero jumps, lower bound -C1 (1+|x|^p), U+(.,1) finite.
CheckReport check_type_a(const RandomUtility& u, const std::map<std::string, double>& c1_overrides,
                         double c1_default, double p_exp, const std::vector<std::string>& nodes,
                         const AuditGrid& grid);

/// Parsed utility document: the function plus the optional certificates
/// it ships with.
struct UtilitySpec {
  RandomUtility utility;
  std::optional<AECertificate> ae;
  std::optional<double> x_low_default;
  std::map<std::string, double> x_low_overrides;
  struct TypeA {
    double c1_default = 0;
    std::map<std::string, double> c1_overrides;
    double p = 1;
  };
  std::optional<TypeA> type_a;
};

UtilitySpec load_utility(const nlohmann::json& doc);
UtilitySpec load_utility_file(const std::string& path);

}  // namespace maxmin

#endif  // MAXMIN_UTILITY_HPP
