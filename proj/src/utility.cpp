#include "maxmin/utility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "maxmin/market.hpp"  // SchemaError / IoError

namespace maxmin {

Segment Segment::constant(double v) {
  Segment s;
  s.kind = Kind::Constant;
  s.value = v;
  return s;
}

Segment Segment::affine(double slope, double intercept) {
  Segment s;
  s.kind = Kind::Affine;
  s.slope = slope;
  s.intercept = intercept;
  return s;
}

Segment Segment::power(double scale, double center, double exponent, double offset) {
  Segment s;
  s.kind = Kind::Power;
  s.scale = scale;
  s.center = center;
  s.exponent = exponent;
  s.offset = offset;
  return s;
}

Segment Segment::exponential(double scale, double rate, double center, double offset) {
  Segment s;
  s.kind = Kind::Exponential;
  s.scale = scale;
  s.rate = rate;
  s.center = center;
  s.offset = offset;
  return s;
}

Segment Segment::neg_inf() {
  Segment s;
  s.kind = Kind::NegInf;
  return s;
}

Segment Segment::pos_inf() {
  Segment s;
  s.kind = Kind::PosInf;
  return s;
}

XReal Segment::eval(double x) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Affine:
      return slope * x + intercept;
    case Kind::Power: {
      const double d = x - center;
      const double mag = std::pow(std::abs(d), exponent);
      return scale * (d >= 0 ? mag : -mag) + offset;
    }
    case Kind::Exponential:
      return scale * std::exp(rate * (x - center)) + offset;
    case Kind::NegInf:
      return XReal::neg_inf();
    case Kind::PosInf:
      return XReal::pos_inf();
  }
  return 0;
}

bool Segment::nondecreasing() const {
  switch (kind) {
    case Kind::Constant:
    case Kind::NegInf:
    case Kind::PosInf:
      return true;
    case Kind::Affine:
      return slope >= 0;
    case Kind::Power:
      return scale >= 0 && exponent > 0;
    case Kind::Exponential:
      return scale * rate >= 0;
  }
  return false;
}

MonotoneUtility::MonotoneUtility(std::vector<double> breakpoints, std::vector<XReal> values,
                                 std::vector<Segment> segments)
    : breaks_(std::move(breakpoints)), values_(std::move(values)), segs_(std::move(segments)) {
  validate();
}

MonotoneUtility::MonotoneUtility(Segment seg) : segs_{seg} { validate(); }

void MonotoneUtility::validate() const {
  if (segs_.size() != breaks_.size() + 1) {
    throw SchemaError("utility: need breakpoints+1 segments");
  }
  if (values_.size() != breaks_.size()) {
    throw SchemaError("utility: need one value per breakpoint");
  }
  for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
    if (!(breaks_[i] < breaks_[i + 1])) {
      throw SchemaError("utility: breakpoints must be strictly increasing");
    }
  }
  for (const Segment& s : segs_) {
    if (!s.nondecreasing()) throw SchemaError("utility: decreasing segment");
  }
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    const XReal left = segs_[i].eval(breaks_[i]);
    const XReal right = segs_[i + 1].eval(breaks_[i]);
    if (!(left <= values_[i] && values_[i] <= right)) {
      throw SchemaError("utility: left limit <= value <= right limit violated at breakpoint " +
                        std::to_string(breaks_[i]));
    }
  }
  // Audit-grid scan on top of the exact segment predicates.
  std::vector<double> xs;
  if (breaks_.empty()) {
    xs = {-1e6, -1.0, 0.0, 1.0, 1e6};
  } else {
    for (double b : breaks_) {
      for (double off : {-1.0, -1e-6, 0.0, 1e-6, 1.0}) xs.push_back(b + off);
    }
    xs.push_back(breaks_.front() - 1e6);
    xs.push_back(breaks_.back() + 1e6);
  }
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (eval(xs[i]) > eval(xs[i + 1])) {
      throw SchemaError("utility: not nondecreasing near x=" + std::to_string(xs[i]));
    }
  }
}

XReal MonotoneUtility::eval(double x) const {
  const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
  if (it != breaks_.end() && *it == x) return values_[it - breaks_.begin()];
  return segs_[it - breaks_.begin()].eval(x);
}

XReal MonotoneUtility::cl_eval(double x) const {
  const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
  if (it != breaks_.end() && *it == x) return segs_[it - breaks_.begin() + 1].eval(x);
  return segs_[it - breaks_.begin()].eval(x);
}

XReal MonotoneUtility::left_limit(double x) const {
  // Segment i covers (b_{i-1}, b_i); at b_i it also provides the left
  // limit, and inside an interval the left limit is the value.
  const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
  return segs_[it - breaks_.begin()].eval(x);
}

XReal MonotoneUtility::jump(double x) const {
  const XReal v = eval(x);
  const XReal cl = cl_eval(x);
  if (cl == v) return 0.0;
  return cl - v;
}

RandomUtility::RandomUtility(MonotoneUtility base, std::map<std::string, MonotoneUtility> overrides)
    : base_(std::move(base)), overrides_(std::move(overrides)) {}

const MonotoneUtility& RandomUtility::at(const std::string& node) const {
  const auto it = overrides_.find(node);
  return it == overrides_.end() ? base_ : it->second;
}

XReal AECertificate::c_at(const std::string& node) const {
  const auto it = c_overrides.find(node);
  return it == c_overrides.end() ? c_default : it->second;
}

bool AECertificate::valid() const {
  return 0 < gamma_lo && gamma_lo < gamma_hi && gamma_lo < eta * gamma_hi && eta * gamma_hi < gamma_hi;
}

AuditGrid make_audit_grid(const std::vector<double>& breakpoints) {
  AuditGrid g;
  for (double e = 0.0; e <= 6.0 + 1e-9; e += 0.25) g.lambdas.push_back(std::pow(10.0, e));
  std::vector<double> xs{0.0};
  for (double e = -2.0; e <= 4.0 + 1e-9; e += 0.25) {
    xs.push_back(std::pow(10.0, e));
    xs.push_back(-std::pow(10.0, e));
  }
  for (double b : breakpoints) {
    for (double off : {-1.0, -1e-3, -1e-6, 0.0, 1e-6, 1e-3, 1.0}) xs.push_back(b + off);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  g.xs = std::move(xs);
  return g;
}

namespace {

// Comparison slack for the sampled growth inequalities; the quantities
// themselves are exact closed forms, only the float evaluation rounds.
bool leq_with_slack(XReal lhs, XReal rhs) {
  if (lhs <= rhs) return true;
  if (!lhs.finite() || !rhs.finite()) return false;
  return lhs.value() <= rhs.value() + 1e-9 * (1.0 + std::abs(rhs.value()));
}

}  // namespace

CheckReport check_ae(const RandomUtility& u, const AECertificate& cert,
                     const std::vector<std::string>& nodes, const AuditGrid& grid) {
  if (!cert.valid()) {
    throw SchemaError("AE certificate invalid: need 0 < gamma_lo < eta*gamma_hi < gamma_hi");
  }
  CheckReport rep;
  for (const std::string& node : nodes) {
    const XReal c = cert.c_at(node);
    if (c.is_pos_inf()) continue;  // only nodes with C < +inf are constrained
    for (double lam : grid.lambdas) {
      for (double x : grid.xs) {
        const XReal ux = u.eval(node, x);
        const XReal ulx = u.eval(node, lam * x);
        for (double g : {cert.gamma_hi, cert.gamma_lo}) {
          const XReal bound = XReal(std::pow(lam, g)) * (ux + c);
          if (!leq_with_slack(ulx, bound)) {
            rep.pass = false;
            rep.violations.push_back(
                {node, lam, x,
                 "U(lam*x)=" + ulx.str() + " > lam^" + std::to_string(g) + "*(U(x)+C)=" + bound.str()});
          }
        }
      }
    }
  }
  return rep;
}

CheckReport check_negativity(const RandomUtility& u,
                             const std::map<std::string, double>& x_low_overrides,
                             double x_low_default, const AECertificate& cert,
                             const std::vector<std::string>& nodes) {
  CheckReport rep;
  for (const std::string& node : nodes) {
    const auto it = x_low_overrides.find(node);
    const double xl = it == x_low_overrides.end() ? x_low_default : it->second;
    if (!(xl < 0)) throw SchemaError("check_negativity: x_low must be < 0");
    const XReal c = cert.c_at(node);
    if (!(u.eval(node, xl) < -c)) {
      rep.pass = false;
      rep.violations.push_back({node, 0, xl,
                                "U(x_low)=" + u.eval(node, xl).str() + " not < -C=" + (-c).str()});
    }
  }
  return rep;
}

CheckReport check_type_a(const RandomUtility& u, const std::map<std::string, double>& c1_overrides,
                         double c1_default, double p_exp, const std::vector<std::string>& nodes,
                         const AuditGrid& grid) {
  if (p_exp < 1) throw SchemaError("check_type_a: p must be >= 1");
  CheckReport rep;
  for (const std::string& node : nodes) {
    const auto it = c1_overrides.find(node);
    const double c1 = it == c1_overrides.end() ? c1_default : it->second;
    if (c1 < 0) throw SchemaError("check_type_a: C1 must be >= 0");

    for (double b : u.at(node).breakpoints()) {
      if (u.jump(node, b) > 0) {
        rep.pass = false;
        rep.violations.push_back({node, 0, b, "not usc: jump " + u.jump(node, b).str()});
      }
    }
    for (double x : grid.xs) {
      const XReal lower = -c1 * (1.0 + std::pow(std::abs(x), p_exp));
      if (!leq_with_slack(lower, u.eval(node, x))) {
        rep.pass = false;
        rep.violations.push_back(
            {node, 0, x, "lower bound: U(x)=" + u.eval(node, x).str() + " < " + lower.str()});
      }
    }
    if (!u.eval(node, 1.0).pos().finite()) {
      rep.pass = false;
      rep.violations.push_back({node, 0, 1.0, "U+(., 1) not finite"});
    }
  }
  return rep;
}

namespace {

Segment parse_segment(const nlohmann::json& js) {
  const std::string kind = js.at("kind").get<std::string>();
  if (kind == "constant") return Segment::constant(js.at("value").get<double>());
  if (kind == "affine") {
    return Segment::affine(js.at("slope").get<double>(), js.at("intercept").get<double>());
  }
  if (kind == "power") {
    return Segment::power(js.at("scale").get<double>(), js.value("center", 0.0),
                          js.at("exponent").get<double>(), js.value("offset", 0.0));
  }
  if (kind == "exp") {
    return Segment::exponential(js.at("scale").get<double>(), js.at("rate").get<double>(),
                                js.value("center", 0.0), js.value("offset", 0.0));
  }
  if (kind == "neg_inf") return Segment::neg_inf();
  if (kind == "pos_inf") return Segment::pos_inf();
  throw SchemaError("utility: unknown segment kind '" + kind + "'");
}

XReal parse_xreal(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return XReal::pos_inf();
    if (s == "-inf") return XReal::neg_inf();
    throw SchemaError("utility: bad extended-real literal '" + s + "'");
  }
  return XReal(j.get<double>());
}

MonotoneUtility parse_piecewise(const nlohmann::json& js) {
  std::vector<double> breaks;
  std::vector<XReal> values;
  std::vector<Segment> segs;
  if (js.contains("breakpoints")) breaks = js.at("breakpoints").get<std::vector<double>>();
  if (js.contains("values")) {
    for (const auto& v : js.at("values")) values.push_back(parse_xreal(v));
  }
  for (const auto& s : js.at("segments")) segs.push_back(parse_segment(s));
  return MonotoneUtility(std::move(breaks), std::move(values), std::move(segs));
}

}  // namespace

UtilitySpec load_utility(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("segments")) {
    throw SchemaError("utility document must be an object with 'segments'");
  }
  std::map<std::string, MonotoneUtility> overrides;
  if (doc.contains("per_node_overrides")) {
    for (const auto& [node, js] : doc.at("per_node_overrides").items()) {
      overrides.emplace(node, parse_piecewise(js));
    }
  }
  UtilitySpec spec{RandomUtility(parse_piecewise(doc), std::move(overrides)), {}, {}, {}, {}};

  if (doc.contains("ae_certificate")) {
    const auto& jc = doc.at("ae_certificate");
    AECertificate cert;
    cert.gamma_lo = jc.at("gamma_lo").get<double>();
    cert.gamma_hi = jc.at("gamma_hi").get<double>();
    cert.eta = jc.contains("eta") ? jc.at("eta").get<double>()
                                  : AECertificate::default_eta(cert.gamma_lo, cert.gamma_hi);
    const auto& jC = jc.at("C");
    if (jC.is_object()) {
      if (jC.contains("default")) cert.c_default = parse_xreal(jC.at("default"));
      for (const auto& [node, v] : jC.items()) {
        if (node != "default") cert.c_overrides.emplace(node, parse_xreal(v));
      }
    } else {
      cert.c_default = parse_xreal(jC);
    }
    if (cert.c_default < 0) throw SchemaError("utility: C must be nonnegative");
    if (!cert.valid()) {
      throw SchemaError("utility: AE certificate invalid (need 0 < gamma_lo < eta*gamma_hi < gamma_hi)");
    }
    spec.ae = cert;
  }
  if (doc.contains("x_low")) {
    const auto& jx = doc.at("x_low");
    if (jx.is_object()) {
      if (jx.contains("default")) spec.x_low_default = jx.at("default").get<double>();
      for (const auto& [node, v] : jx.items()) {
        if (node != "default") spec.x_low_overrides.emplace(node, v.get<double>());
      }
    } else {
      spec.x_low_default = jx.get<double>();
    }
  }
  if (doc.contains("type_a")) {
    const auto& jt = doc.at("type_a");
    UtilitySpec::TypeA ta;
    const auto& jc1 = jt.at("C1");
    if (jc1.is_object()) {
      if (jc1.contains("default")) ta.c1_default = jc1.at("default").get<double>();
      for (const auto& [node, v] : jc1.items()) {
        if (node != "default") ta.c1_overrides.emplace(node, v.get<double>());
      }
    } else {
      ta.c1_default = jc1.get<double>();
    }
    ta.p = jt.at("p").get<double>();
    spec.type_a = ta;
  }
  return spec;
}

UtilitySpec load_utility_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("'" + path + "': " + e.what());
  }
  return load_utility(doc);
}

}  // namespace maxmin
