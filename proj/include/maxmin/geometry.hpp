#ifndef MAXMIN_GEOMETRY_HPP
#define MAXMIN_GEOMETRY_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "maxmin/rational.hpp"

namespace maxmin {

namespace lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  Rat objective = 0;
  VecQ x;  // values of the problem's variables when Optimal
};

enum class Rel { Le, Eq, Ge };

/// Small exact-rational LP in general form. Converted internally to
/// standard form and solved by a dense two-phase simplex with Bland's
/// rule, so it terminates and every answer is exact. Intended for tiny
/// instances (tens of variables).
class Problem {
 public:
  /// Adds a variable; nonneg=false makes it free. Returns its index.
  int add_var(bool nonneg = true);
  void add_constraint(const std::vector<std::pair<int, Rat>>& terms, Rel rel, const Rat& rhs);
  /// Maximizes the given linear objective (default objective is 0,
  /// which turns solve() into a pure feasibility check).
  void set_objective(const std::vector<std::pair<int, Rat>>& terms);
  Result solve() const;

 private:
  int num_vars_ = 0;
  std::vector<bool> nonneg_;
  struct Row {
    std::vector<std::pair<int, Rat>> terms;
    Rel rel;
    Rat rhs;
  };
  std::vector<Row> rows_;
  std::vector<std::pair<int, Rat>> objective_;
};

}  // namespace lp

/// Affine subspace of Q^d: offset point plus an orthogonal basis
/// (exact Gram-Schmidt, no normalization so coordinates stay rational).
struct AffineSubspace {
  VecQ offset;
  std::vector<VecQ> basis;

  std::size_t ambient_dim() const { return offset.size(); }
  std::size_t dim() const { return basis.size(); }

  /// Exact membership test.
  bool contains(const VecQ& p) const;
  /// Exact projection of p onto the subspace.
  VecQ project(const VecQ& p) const;
  friend bool operator==(const AffineSubspace& a, const AffineSubspace& b);
};

/// Smallest affine subspace containing all points. Throws on empty input.
AffineSubspace affine_hull(const std::vector<VecQ>& points);

/// True iff 0 lies in the relative interior of conv(points); decided by
/// the exact LP  max t  s.t.  sum l_i y_i = 0, sum l_i = 1, l_i >= t
/// having optimum > 0.
bool zero_in_rel_interior(const std::vector<VecQ>& points);

using SignPattern = std::vector<int>;  // entries in {-1, 0, +1}

inline constexpr std::size_t kMaxArrangementNormals = 12;

/// All sign vectors s in {+,0,-}^m realizable as s_j = sign(delta . w_j)
/// for some direction delta != 0. Enumerated by DFS over prefixes with
/// exact LP pruning. Throws if more than kMaxArrangementNormals normals.
std::vector<SignPattern> feasible_sign_patterns(const std::vector<VecQ>& normals);

/// The subset of feasible_sign_patterns with no zero entry (the full-
/// dimensional cells of the arrangement).
std::vector<SignPattern> strict_sign_patterns(const std::vector<VecQ>& normals);

}  // namespace maxmin

#endif  // MAXMIN_GEOMETRY_HPP
