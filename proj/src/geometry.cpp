#include "maxmin/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace maxmin {

namespace lp {
namespace {

// Dense exact simplex on the standard form  max c.x, Ax = b, x >= 0.
// Bland's rule on both the entering and the leaving choice, so the
// iteration terminates without any perturbation machinery.
class Simplex {
 public:
  Simplex(std::vector<VecQ> a, VecQ b, VecQ c)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    m_ = a_.size();
    n_ = c_.size();
    for (std::size_t i = 0; i < m_; ++i) {
      if (b_[i] < 0) {
        b_[i] = -b_[i];
        for (Rat& v : a_[i]) v = -v;
      }
    }
  }

  Result run() {
    // Phase 1: artificial variable per row, minimize their sum.
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      a_[i].resize(n_ + m_, 0);
      a_[i][n_ + i] = 1;
      basis_[i] = n_ + i;
    }
    VecQ phase1(n_ + m_, 0);
    for (std::size_t j = n_; j < n_ + m_; ++j) phase1[j] = -1;
    iterate(phase1);
    if (objective_value(phase1) != 0) return {Status::Infeasible, 0, {}};
    drop_artificials();

    if (!iterate(c_)) return {Status::Unbounded, 0, {}};

    Result r;
    r.status = Status::Optimal;
    r.objective = objective_value(c_);
    r.x.assign(n_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) r.x[basis_[i]] = b_[i];
    }
    return r;
  }

 private:
  Rat objective_value(const VecQ& c) const {
    Rat v = 0;
    for (std::size_t i = 0; i < m_; ++i) v += c[basis_[i]] * b_[i];
    return v;
  }

  Rat reduced_cost(const VecQ& c, std::size_t j) const {
    Rat rc = c[j];
    for (std::size_t i = 0; i < m_; ++i) rc -= c[basis_[i]] * a_[i][j];
    return rc;
  }

  void pivot(std::size_t row, std::size_t col) {
    const Rat piv = a_[row][col];
    for (Rat& v : a_[row]) v /= piv;
    b_[row] /= piv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row || a_[i][col] == 0) continue;
      const Rat f = a_[i][col];
      for (std::size_t j = 0; j < a_[i].size(); ++j) a_[i][j] -= f * a_[row][j];
      b_[i] -= f * b_[row];
    }
    basis_[row] = col;
  }

  // Returns false when the objective is unbounded above.
  bool iterate(const VecQ& c) {
    for (;;) {
      std::size_t enter = c.size();
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (is_basic(j)) continue;
        if (reduced_cost(c, j) > 0) { enter = j; break; }
      }
      if (enter == c.size()) return true;  // optimal

      std::size_t leave = m_;
      Rat best_ratio = 0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (a_[i][enter] <= 0) continue;
        const Rat ratio = b_[i] / a_[i][enter];
        if (leave == m_ || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
  }

  bool is_basic(std::size_t j) const {
    return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
  }

  // After a feasible phase 1, pivot artificials out of the basis or drop
  // their (redundant) rows entirely.
  void drop_artificials() {
    for (std::size_t i = 0; i < m_;) {
      if (basis_[i] < n_) { ++i; continue; }
      std::size_t col = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (a_[i][j] != 0) { col = j; break; }
      }
      if (col < n_) {
        pivot(i, col);
        ++i;
      } else {
        a_.erase(a_.begin() + i);
        b_.erase(b_.begin() + i);
        basis_.erase(basis_.begin() + i);
        --m_;
      }
    }
    // Artificial columns are gone for good; phase 2 runs on the
    // original columns only.
    for (VecQ& row : a_) row.resize(n_);
  }

  std::vector<VecQ> a_;
  VecQ b_;
  VecQ c_;
  std::size_t m_ = 0, n_ = 0;
  std::vector<std::size_t> basis_;
};

}  // namespace

int Problem::add_var(bool nonneg) {
  nonneg_.push_back(nonneg);
  return num_vars_++;
}

void Problem::add_constraint(const std::vector<std::pair<int, Rat>>& terms, Rel rel,
                             const Rat& rhs) {
  rows_.push_back(Row{terms, rel, rhs});
}

void Problem::set_objective(const std::vector<std::pair<int, Rat>>& terms) { objective_ = terms; }

Result Problem::solve() const {
  // Column layout: nonneg var -> 1 column, free var -> (plus, minus) pair,
  // then one slack/surplus column per inequality row.
  std::vector<int> col_of(num_vars_);
  int ncols = 0;
  for (int v = 0; v < num_vars_; ++v) {
    col_of[v] = ncols;
    ncols += nonneg_[v] ? 1 : 2;
  }
  int slack_base = ncols;
  for (const auto& r : rows_) {
    if (r.rel != Rel::Eq) ++ncols;
  }

  std::vector<VecQ> a(rows_.size(), VecQ(ncols, 0));
  VecQ b(rows_.size(), 0);
  int slack = slack_base;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& [v, coef] : rows_[i].terms) {
      a[i][col_of[v]] += coef;
      if (!nonneg_[v]) a[i][col_of[v] + 1] -= coef;
    }
    b[i] = rows_[i].rhs;
    if (rows_[i].rel == Rel::Le) a[i][slack++] = 1;
    if (rows_[i].rel == Rel::Ge) a[i][slack++] = -1;
  }

  VecQ c(ncols, 0);
  for (const auto& [v, coef] : objective_) {
    c[col_of[v]] += coef;
    if (!nonneg_[v]) c[col_of[v] + 1] -= coef;
  }

  Result r = Simplex(std::move(a), std::move(b), std::move(c)).run();
  if (r.status != Status::Optimal) return r;

  VecQ x(num_vars_, 0);
  for (int v = 0; v < num_vars_; ++v) {
    x[v] = nonneg_[v] ? r.x[col_of[v]] : r.x[col_of[v]] - r.x[col_of[v] + 1];
  }
  r.x = std::move(x);
  return r;
}

}  // namespace lp

bool AffineSubspace::contains(const VecQ& p) const {
  assert(p.size() == ambient_dim());
  VecQ r = p;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= offset[i];
  for (const VecQ& bv : basis) {
    const Rat coef = dot(r, bv) / dot(bv, bv);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= coef * bv[i];
  }
  return is_zero(r);
}

VecQ AffineSubspace::project(const VecQ& p) const {
  VecQ r = p;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= offset[i];
  VecQ out = offset;
  for (const VecQ& bv : basis) {
    const Rat coef = dot(r, bv) / dot(bv, bv);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coef * bv[i];
  }
  return out;
}

bool operator==(const AffineSubspace& a, const AffineSubspace& b) {
  if (a.dim() != b.dim() || a.ambient_dim() != b.ambient_dim()) return false;
  if (!a.contains(b.offset)) return false;
  for (const VecQ& bv : b.basis) {
    VecQ p = a.offset;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += bv[i];
    if (!a.contains(p)) return false;
  }
  return true;
}

AffineSubspace affine_hull(const std::vector<VecQ>& points) {
  if (points.empty()) throw std::invalid_argument("affine_hull: empty point set");
  AffineSubspace s;
  s.offset = points[0];
  for (const VecQ& p : points) {
    VecQ r = p;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s.offset[i];
    for (const VecQ& bv : s.basis) {
      const Rat coef = dot(r, bv) / dot(bv, bv);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= coef * bv[i];
    }
    if (!is_zero(r)) s.basis.push_back(std::move(r));
  }
  for (const VecQ& p : points) assert(s.contains(p));
  return s;
}

bool zero_in_rel_interior(const std::vector<VecQ>& points) {
  if (points.empty()) throw std::invalid_argument("zero_in_rel_interior: empty point set");
  const std::size_t m = points.size();
  const std::size_t d = points[0].size();

  // max t  s.t.  sum_i (s_i + t) y_i = 0, sum_i (s_i + t) = 1, s_i >= 0,
  // with l_i = s_i + t. Bounded since t <= 1/m.
  lp::Problem prob;
  std::vector<int> s(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = prob.add_var(true);
  const int t = prob.add_var(false);

  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::pair<int, Rat>> terms;
    Rat tsum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (points[i][k] != 0) terms.emplace_back(s[i], points[i][k]);
      tsum += points[i][k];
    }
    terms.emplace_back(t, tsum);
    prob.add_constraint(terms, lp::Rel::Eq, 0);
  }
  std::vector<std::pair<int, Rat>> norm;
  for (std::size_t i = 0; i < m; ++i) norm.emplace_back(s[i], 1);
  norm.emplace_back(t, Rat(static_cast<long>(m)));
  prob.add_constraint(norm, lp::Rel::Eq, 1);
  prob.set_objective({{t, 1}});

  const lp::Result r = prob.solve();
  return r.status == lp::Status::Optimal && r.objective > 0;
}

namespace {

// Feasibility of a sign prefix: exists delta with delta.w_j >= 1 for +,
// <= -1 for -, = 0 for 0. Strictness via the >=1 normalization is exact
// by positive homogeneity.
bool prefix_realizable(const std::vector<VecQ>& normals, const SignPattern& prefix) {
  const std::size_t k = normals[0].size();
  lp::Problem prob;
  std::vector<int> delta(k);
  for (std::size_t i = 0; i < k; ++i) delta[i] = prob.add_var(false);
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    std::vector<std::pair<int, Rat>> terms;
    for (std::size_t i = 0; i < k; ++i) {
      if (normals[j][i] != 0) terms.emplace_back(delta[i], normals[j][i]);
    }
    if (prefix[j] > 0) {
      prob.add_constraint(terms, lp::Rel::Ge, 1);
    } else if (prefix[j] < 0) {
      prob.add_constraint(terms, lp::Rel::Le, -1);
    } else {
      prob.add_constraint(terms, lp::Rel::Eq, 0);
    }
  }
  return prob.solve().status == lp::Status::Optimal;
}

// Rank of the normal matrix, for deciding the all-zero pattern.
std::size_t rank_of(std::vector<VecQ> rows) {
  std::size_t rank = 0;
  const std::size_t k = rows.empty() ? 0 : rows[0].size();
  for (std::size_t col = 0; col < k && rank < rows.size(); ++col) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][col] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[rank], rows[piv]);
    for (std::size_t i = rank + 1; i < rows.size(); ++i) {
      if (rows[i][col] == 0) continue;
      const Rat f = rows[i][col] / rows[rank][col];
      for (std::size_t j = col; j < k; ++j) rows[i][j] -= f * rows[rank][j];
    }
    ++rank;
  }
  return rank;
}

void enumerate(const std::vector<VecQ>& normals, bool include_zeros, SignPattern& prefix,
               std::vector<SignPattern>& out) {
  if (prefix.size() == normals.size()) {
    const bool all_zero = std::all_of(prefix.begin(), prefix.end(), [](int s) { return s == 0; });
    if (all_zero) {
      // delta != 0 orthogonal to every normal exists iff rank < dim.
      if (rank_of(normals) < normals[0].size()) out.push_back(prefix);
      return;
    }
    out.push_back(prefix);
    return;
  }
  const int candidates[3] = {+1, -1, 0};
  for (int s : candidates) {
    if (s == 0 && !include_zeros) continue;
    prefix.push_back(s);
    const bool zero_so_far =
        std::all_of(prefix.begin(), prefix.end(), [](int v) { return v == 0; });
    if (zero_so_far || prefix_realizable(normals, prefix)) {
      enumerate(normals, include_zeros, prefix, out);
    }
    prefix.pop_back();
  }
}

std::vector<SignPattern> patterns_impl(const std::vector<VecQ>& normals, bool include_zeros) {
  if (normals.size() > kMaxArrangementNormals) {
    throw std::invalid_argument("sign patterns: too many normals");
  }
  if (normals.empty()) return {};
  std::vector<SignPattern> out;
  SignPattern prefix;
  enumerate(normals, include_zeros, prefix, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<SignPattern> feasible_sign_patterns(const std::vector<VecQ>& normals) {
  return patterns_impl(normals, true);
}

std::vector<SignPattern> strict_sign_patterns(const std::vector<VecQ>& normals) {
  return patterns_impl(normals, false);
}

}  // namespace maxmin
