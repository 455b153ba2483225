#ifndef MAXMIN_XREAL_HPP
#define MAXMIN_XREAL_HPP

#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace maxmin {

/// Extended real number {-inf} u R u {+inf} with the maximization
/// conventions (+inf)+(-inf) = -inf and 0*(+-inf) = 0.
///
/// Comparison is the usual total order on the extended reals. The value
/// is never NaN; all operations route the indeterminate IEEE forms
/// through the conventions above.
class XReal {
 public:
  constexpr XReal() : v_(0.0) {}
  constexpr XReal(double v) : v_(v) {}  // NOLINT: implicit by design

  static constexpr XReal pos_inf() { return XReal(std::numeric_limits<double>::infinity()); }
  static constexpr XReal neg_inf() { return XReal(-std::numeric_limits<double>::infinity()); }

  bool finite() const { return std::isfinite(v_); }
  bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
  bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }

  /// Underlying double; +-inf encode the infinities.
  double value() const { return v_; }

  XReal operator-() const { return XReal(-v_); }

  friend XReal operator+(XReal a, XReal b) {
    if (a.is_pos_inf() && b.is_neg_inf()) return neg_inf();
    if (a.is_neg_inf() && b.is_pos_inf()) return neg_inf();
    return XReal(a.v_ + b.v_);
  }
  friend XReal operator-(XReal a, XReal b) { return a + (-b); }

  friend XReal operator*(XReal a, XReal b) {
    if (a.v_ == 0.0 || b.v_ == 0.0) return XReal(0.0);
    return XReal(a.v_ * b.v_);
  }

  XReal& operator+=(XReal o) { *this = *this + o; return *this; }

  friend bool operator==(XReal a, XReal b) { return a.v_ == b.v_; }
  friend bool operator!=(XReal a, XReal b) { return a.v_ != b.v_; }
  friend bool operator<(XReal a, XReal b) { return a.v_ < b.v_; }
  friend bool operator<=(XReal a, XReal b) { return a.v_ <= b.v_; }
  friend bool operator>(XReal a, XReal b) { return a.v_ > b.v_; }
  friend bool operator>=(XReal a, XReal b) { return a.v_ >= b.v_; }

  /// Positive part max(x, 0); maps -inf to 0 and +inf to +inf.
  XReal pos() const { return XReal(v_ > 0 ? v_ : 0.0); }
  /// Negative part max(-x, 0).
  XReal neg() const { return XReal(v_ < 0 ? -v_ : 0.0); }

  friend XReal min(XReal a, XReal b) { return a < b ? a : b; }
  friend XReal max(XReal a, XReal b) { return a > b ? a : b; }

  std::string str() const {
    if (is_pos_inf()) return "inf";
    if (is_neg_inf()) return "-inf";
    return std::to_string(v_);
  }

  friend std::ostream& operator<<(std::ostream& os, XReal x) { return os << x.str(); }

 private:
  double v_;
};

}  // namespace maxmin

#endif  // MAXMIN_XREAL_HPP
