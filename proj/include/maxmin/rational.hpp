#ifndef MAXMIN_RATIONAL_HPP
#define MAXMIN_RATIONAL_HPP

#include <gmpxx.h>

#include <cassert>
#include <cmath>
#include <vector>

namespace maxmin {

/// Exact rational scalar. Geometric predicates run on the exact binary
/// values of their double inputs, so membership answers are yes/no, not
/// tolerance-based.
using Rat = mpq_class;
using VecQ = std::vector<Rat>;

inline Rat rat_from_double(double v) {
  assert(std::isfinite(v));
  return Rat(v);  // exact: doubles are dyadic rationals
}

inline VecQ vecq_from_doubles(const std::vector<double>& v) {
  VecQ out;
  out.reserve(v.size());
  for (double x : v) out.push_back(rat_from_double(x));
  return out;
}

inline Rat dot(const VecQ& a, const VecQ& b) {
  assert(a.size() == b.size());
  Rat s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool is_zero(const VecQ& v) {
  for (const Rat& x : v) {
    if (x != 0) return false;
  }
  return true;
}

}  // namespace maxmin

#endif  // MAXMIN_RATIONAL_HPP
