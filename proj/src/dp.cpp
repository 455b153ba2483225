#include "maxmin/dp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace maxmin {

namespace {

double dot_d(const VecD& a, const VecD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Generalized-sense child expectation of already-computed values.
XReal expect_children(const VecD& p, const std::vector<XReal>& vals) {
  double sum = 0;
  bool pos_inf = false;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] == 0.0) continue;
    if (vals[c].is_neg_inf()) return XReal::neg_inf();
    if (vals[c].is_pos_inf()) {
      pos_inf = true;
    } else {
      sum += p[c] * vals[c].value();
    }
  }
  return pos_inf ? XReal::pos_inf() : XReal(sum);
}

}  // namespace

std::vector<XReal> c_recursion(const ScenarioTree& tree, const PriorSet& priors,
                               const std::function<XReal(const std::string&)>& c_terminal) {
  std::vector<XReal> c(tree.num_nodes(), 0.0);
  // Nodes are indexed depth-first, so a reverse sweep sees children first.
  for (int n = tree.num_nodes() - 1; n >= 0; --n) {
    if (tree.is_terminal(n)) {
      c[n] = c_terminal(tree.node(n).path);
      if (c[n] < 0) throw SchemaError("c_recursion: negative terminal C at '" + tree.node(n).path + "'");
      continue;
    }
    XReal best = 0.0;
    std::vector<XReal> child_vals;
    for (int ch : tree.node(n).children) child_vals.push_back(c[ch]);
    for (const VecD& p : priors.vertices[n]) {
      best = max(best, expect_children(p, child_vals));
    }
    c[n] = best;
  }
  return c;
}

namespace {

class RecursiveStage : public StageValue {
 public:
  RecursiveStage(const DpEngine* engine, int node, bool robust,
                 std::vector<std::vector<double>> breakpoints, std::vector<int> children)
      : engine_(engine), robust_(robust), breakpoints_(std::move(breakpoints)),
        children_(std::move(children)) {
    (void)node;
  }

  XReal eval(std::size_t atom, double x, Side side) const override {
    // One-sided limits probed on the ladder foot; exact for continuous
    // continuations, which is the regime the closure chain is audited in.
    const double eps = side == Side::Right ? 1e-9 : (side == Side::Left ? -1e-9 : 0.0);
    const int child = children_.at(atom);
    return robust_ ? engine_->robust_value(child, x + eps)
                   : engine_->kernel_value(child, x + eps);
  }

  const std::vector<double>& breakpoints(std::size_t atom) const override {
    return breakpoints_.at(atom);
  }

 private:
  const DpEngine* engine_;
  bool robust_;
  std::vector<std::vector<double>> breakpoints_;
  std::vector<int> children_;
};

}  // namespace

struct DpEngine::StagePack {
  std::unique_ptr<StageValue> stage;
  OnePeriodProblem problem;
};

DpEngine::DpEngine(const Market& market, const RandomUtility& utility, const AECertificate& cert,
                   Kernel kernel, DpConfig cfg)
    : market_(market), utility_(utility), cert_(cert), kernel_(std::move(kernel)), cfg_(cfg) {
  if (market_.tree.horizon() > cfg_.max_exact_horizon) {
    throw std::domain_error("exact-recursive mode is guarded to T <= " +
                            std::to_string(cfg_.max_exact_horizon) +
                            "; use the grid-interpolated engine for deeper trees");
  }
  c_values_ = c_recursion(market_.tree, market_.priors,
                          [&](const std::string& path) { return cert_.c_at(path); });
  reachable_ = reachable_nodes(market_.tree, market_.priors);
  reachable_mask_.assign(market_.tree.num_nodes(), false);
  for (int n : reachable_) reachable_mask_[n] = true;
}

double DpEngine::alpha_at(int node) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = alpha_cache_.find(node);
  if (it != alpha_cache_.end()) return it->second;
  const double a = alpha_qna(market_.tree, market_.priors, kernel_, node, cfg_.alpha).alpha;
  alpha_cache_.emplace(node, a);
  return a;
}

const OnePeriodProblem& DpEngine::node_problem(int node, bool robust) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = stage_cache_.find({node, robust});
    if (it != stage_cache_.end()) return it->second->problem;
  }

  const ScenarioTree& tree = market_.tree;
  auto pack = std::make_unique<StagePack>();

  const Node& nd = tree.node(node);
  bool children_terminal = true;
  for (int ch : nd.children) children_terminal = children_terminal && tree.is_terminal(ch);

  if (children_terminal) {
    std::vector<const MonotoneUtility*> per_atom;
    for (int ch : nd.children) per_atom.push_back(&utility_.at(tree.node(ch).path));
    pack->stage = std::make_unique<CatalogStageValue>(std::move(per_atom));
  } else {
    // Candidate seeds for deeper stages: the terminal breakpoints in the
    // child's subtree. Heuristic only; the continuation may bend at
    // other wealths, which the grid and refinement still cover.
    std::vector<std::vector<double>> bps;
    for (int ch : nd.children) {
      std::set<double> s;
      auto collect = [&](auto&& self, int k) -> void {
        if (tree.is_terminal(k)) {
          for (double b : utility_.at(tree.node(k).path).breakpoints()) s.insert(b);
          return;
        }
        for (int c : tree.node(k).children) self(self, c);
      };
      collect(collect, ch);
      bps.emplace_back(s.begin(), s.end());
    }
    pack->stage = std::make_unique<RecursiveStage>(this, node, robust, std::move(bps), nd.children);
  }

  OnePeriodProblem& prob = pack->problem;
  for (std::size_t c = 0; c < nd.children.size(); ++c) {
    prob.atoms.push_back({nd.child_labels[c], delta_s(tree, node, static_cast<int>(c))});
  }
  prob.vertices = robust ? market_.priors.vertices[node]
                         : std::vector<VecD>{kernel_.probs[node]};
  prob.p_star = kernel_.probs[node];
  prob.value = pack->stage.get();
  for (int ch : nd.children) prob.c_atom.push_back(c_values_[ch]);
  prob.gamma_lo = cert_.gamma_lo;
  prob.gamma_hi = cert_.gamma_hi;
  prob.eta = cert_.eta;
  prob.prepare();

  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = stage_cache_.emplace(std::make_pair(node, robust), std::move(pack));
  return it->second->problem;
}

const OnePeriodConstants& DpEngine::constants(int node, bool robust) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = consts_cache_.find({node, robust});
    if (it != consts_cache_.end()) return it->second;
  }
  const OnePeriodProblem& prob = node_problem(node, robust);
  OnePeriodConstants k = one_period_constants(prob, alpha_at(node), cfg_.n0_cap);
  if (k.failure) {
    std::lock_guard<std::mutex> lock(mu_);
    diags_.push_back({node, "assumption-failure", k.failure_reason});
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = consts_cache_.emplace(std::make_pair(node, robust), std::move(k));
  return it->second;
}

namespace {

double quantize(double x, double quantum) {
  const double scaled = x / quantum;
  if (std::abs(scaled) >= 9e15) return x;
  return std::nearbyint(scaled) * quantum;
}

}  // namespace

XReal DpEngine::value_impl(int node, double x, bool robust) const {
  const ScenarioTree& tree = market_.tree;
  if (tree.is_terminal(node)) return utility_.eval(tree.node(node).path, x);

  const auto key = std::make_tuple(node, robust, quantize(x, cfg_.memo_quantum));
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = value_cache_.find(key);
    if (it != value_cache_.end()) return it->second;
  }

  const OnePeriodProblem& prob = node_problem(node, robust);
  const OnePeriodConstants& consts = constants(node, robust);
  SearchOptions so = cfg_.search;
  so.closure_objective = false;
  const SearchResult r = maximize_psi(prob, consts, std::get<2>(key), so);

  std::lock_guard<std::mutex> lock(mu_);
  if (r.unattained) {
    diags_.push_back({node, "unattained",
                      "sup of the one-step value approached only in the limit at wealth " +
                          std::to_string(x)});
  }
  value_cache_.emplace(key, r.value);  // benign overwrite: values are deterministic
  return r.value;
}

XReal DpEngine::robust_value(int node, double x) const { return value_impl(node, x, true); }

XReal DpEngine::kernel_value(int node, double x) const { return value_impl(node, x, false); }

DpEngine::ClResult DpEngine::u_cl_value(int node, double x) const {
  const ScenarioTree& tree = market_.tree;
  if (tree.is_terminal(node)) {
    throw std::domain_error("u_cl_value: terminal node has no one-step problem");
  }
  const OnePeriodProblem& prob = node_problem(node, true);
  const OnePeriodConstants& consts = constants(node, true);
  SearchOptions so = cfg_.search;
  so.closure_objective = true;
  const SearchResult r = maximize_cl_psi(prob, consts, x, so);

  ClResult out;
  out.value = r.value;
  out.h = r.h;
  out.approximate = r.approximate_closure;
  std::lock_guard<std::mutex> lock(mu_);
  if (r.bound_active) {
    diags_.push_back({node, "bound-active",
                      "maximizer on the search-ball boundary at wealth " + std::to_string(x)});
  }
  if (r.approximate_closure) {
    diags_.push_back({node, "approximate-closure", "arrangement guard exceeded"});
  }
  return out;
}

XReal DpEngine::cl_robust_value(int node, double x) const {
  XReal best = XReal::pos_inf();
  for (double eps : {1e-3, 1e-6, 1e-9}) best = min(best, robust_value(node, x + eps));
  return best;
}

PolicyTrace DpEngine::synthesize_strategy(double x0) const {
  const ScenarioTree& tree = market_.tree;
  PolicyTrace tr;
  tr.x0 = x0;
  tr.wealth[tree.root()] = x0;

  auto walk = [&](auto&& self, int node) -> void {
    if (tree.is_terminal(node)) return;
    const double w = tr.wealth.at(node);
    const ClResult res = u_cl_value(node, w);
    tr.strategy[node] = res.h;
    if (res.approximate) {
      tr.diags.push_back({node, "approximate-closure", "strategy from sampled closure"});
    }
    const Node& nd = tree.node(node);
    for (std::size_t c = 0; c < nd.children.size(); ++c) {
      const int ch = nd.children[c];
      if (!reachable_mask_[ch]) continue;
      tr.wealth[ch] = w + dot_d(res.h, delta_s(tree, node, static_cast<int>(c)));
      self(self, ch);
    }
  };
  walk(walk, tree.root());
  return tr;
}

XReal DpEngine::lower_value(const PolicyTrace& trace) const {
  const ScenarioTree& tree = market_.tree;
  std::map<int, XReal> memo;
  auto w = [&](auto&& self, int node) -> XReal {
    const auto it = memo.find(node);
    if (it != memo.end()) return it->second;
    XReal out;
    if (tree.is_terminal(node)) {
      out = utility_.eval(tree.node(node).path, trace.wealth.at(node));
    } else {
      std::vector<XReal> child_vals;
      for (int ch : tree.node(node).children) {
        child_vals.push_back(reachable_mask_[ch] ? self(self, ch) : XReal(0.0));
      }
      out = XReal::pos_inf();
      for (const VecD& p : market_.priors.vertices[node]) {
        out = min(out, expect_children(p, child_vals));
      }
    }
    memo.emplace(node, out);
    return out;
  };
  return w(w, tree.root());
}

DpEngine::Gap DpEngine::gap_bound(const PolicyTrace& trace) const {
  const ScenarioTree& tree = market_.tree;
  std::map<int, XReal> memo;
  auto g = [&](auto&& self, int node) -> XReal {
    const auto it = memo.find(node);
    if (it != memo.end()) return it->second;
    XReal out;
    if (tree.is_terminal(node)) {
      out = utility_.jump(tree.node(node).path, trace.wealth.at(node));
    } else {
      std::vector<XReal> child_vals;
      for (int ch : tree.node(node).children) {
        child_vals.push_back(reachable_mask_[ch] ? self(self, ch) : XReal(0.0));
      }
      out = XReal::neg_inf();
      for (const VecD& p : market_.priors.vertices[node]) {
        out = max(out, expect_children(p, child_vals));
      }
    }
    memo.emplace(node, out);
    return out;
  };
  Gap gap;
  gap.realized_floor = lower_value(trace);
  gap.bound = g(g, tree.root());
  return gap;
}

AuditReport DpEngine::audit(double x_ref) const {
  const ScenarioTree& tree = market_.tree;
  AuditReport rep;

  const HCheckResult h = check_h_membership(tree, market_.priors, kernel_);
  rep.h_kernel_ok = h.ok;
  rep.h_failing_nodes = h.failing_nodes;

  for (int n : reachable_) {
    if (tree.is_terminal(n)) continue;
    NodeAudit na;
    na.node = n;
    na.path = tree.node(n).path;
    na.alpha = alpha_at(n);
    const OnePeriodConstants& kc = constants(n, false);  // the P-prior context
    na.c_t_p = kc.c_star;
    na.l_t_p = kc.l_star;
    na.n_t_p = kc.n0_star;
    na.n_t_p_found = kc.n0_found;
    na.i_t_p = XReal(1.0) + XReal(2.0 / na.alpha) * kc.c_star;
    rep.nodes.push_back(std::move(na));
  }

  rep.u0p_at_1 = kernel_value(tree.root(), 1.0);
  rep.u0p_finite = !rep.u0p_at_1.is_pos_inf();

  // E_P (U_t^P)^{+-}(., 1 + theta dS_t) well defined in the generalized
  // sense, for every stage and every unit-corner theta plus theta = 0.
  const int d = tree.asset_count();
  std::vector<std::vector<int>> thetas{std::vector<int>(d, 0)};
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::vector<int> th(d);
    for (int i = 0; i < d; ++i) th[i] = (mask >> i & 1) ? 1 : -1;
    thetas.push_back(std::move(th));
  }
  std::map<int, double> weight;
  weight[tree.root()] = 1.0;
  for (int n : reachable_) {
    if (tree.is_terminal(n)) continue;
    for (std::size_t c = 0; c < tree.node(n).children.size(); ++c) {
      const int ch = tree.node(n).children[c];
      if (reachable_mask_[ch]) {
        weight[ch] = weight[n] * kernel_.probs[n][c];
      }
    }
  }
  rep.well_def_ok = true;
  for (int t = 1; t <= tree.horizon(); ++t) {
    for (const auto& th : thetas) {
      WellDefEntry e;
      e.t = t;
      e.theta = th;
      XReal pos = 0.0, neg = 0.0;
      for (int n : reachable_) {
        if (tree.node(n).depth != t) continue;
        const double wn = weight.count(n) ? weight.at(n) : 0.0;
        if (wn == 0.0) continue;
        const Node& nd = tree.node(n);
        double arg = 1.0;
        for (int i = 0; i < d; ++i) {
          arg += th[i] * (nd.price[i] - tree.node(nd.parent).price[i]);
        }
        const XReal v = kernel_value(n, arg);
        pos += XReal(wn) * v.pos();
        neg += XReal(wn) * v.neg();
      }
      e.e_pos = pos;
      e.e_neg = neg;
      e.ok = pos.finite() || neg.finite();
      rep.well_def_ok = rep.well_def_ok && e.ok;
      rep.well_def.push_back(std::move(e));
    }
  }

  rep.zero_policy_admissible = true;
  for (const std::string& path : reachable_paths(tree, market_.priors)) {
    if (utility_.eval(path, x_ref).is_neg_inf()) {
      rep.zero_policy_admissible = false;
      rep.inadmissible_paths.push_back(path);
    }
  }

  {
    std::lock_guard<std::mutex> lock(mu_);
    rep.diags = diags_;
  }
  return rep;
}

std::string DpEngine::check_chain(int node, double x, double tol) const {
  const XReal ut = robust_value(node, x);
  const XReal cl_ut = cl_robust_value(node, x);
  const ClResult ucl = u_cl_value(node, x);

  const auto leq = [&](XReal a, XReal b) {
    if (a <= b) return true;
    if (!a.finite() || !b.finite()) return false;
    return a.value() <= b.value() + tol * (1.0 + std::abs(b.value()));
  };
  if (!leq(ut, cl_ut)) {
    return "U_t(x) = " + ut.str() + " exceeds Cl(U_t)(x) = " + cl_ut.str();
  }
  if (!leq(cl_ut, ucl.value)) {
    return "Cl(U_t)(x) = " + cl_ut.str() + " exceeds u_t^cl(x) = " + ucl.value.str();
  }
  const OnePeriodProblem& prob = node_problem(node, true);
  const XReal at_h = cl_psi(prob, x, ucl.h);
  if (at_h != ucl.value) {
    return "u_t^cl(x) = " + ucl.value.str() + " != Cl(u_t)(x, H*) = " + at_h.str();
  }
  return {};
}

GridDpEngine::GridDpEngine(const Market& market, const RandomUtility& utility,
                           const AECertificate& cert, Kernel kernel, GridDpConfig cfg)
    : market_(market), utility_(utility), cert_(cert), kernel_(std::move(kernel)), cfg_(cfg) {
  const ScenarioTree& tree = market_.tree;
  c_values_ = c_recursion(tree, market_.priors,
                          [&](const std::string& path) { return cert_.c_at(path); });

  grid_.resize(cfg_.wealth_points);
  for (int i = 0; i < cfg_.wealth_points; ++i) {
    grid_[i] = cfg_.wealth_lo +
               (cfg_.wealth_hi - cfg_.wealth_lo) * i / static_cast<double>(cfg_.wealth_points - 1);
  }

  values_.resize(tree.num_nodes());
  maximizers_.resize(tree.num_nodes());

  // Piecewise-linear read-back of tabulated child values; clamped at the
  // ends, infinite knots resolved to the left knot.
  struct PLStage : StageValue {
    const GridDpEngine* eng;
    std::vector<int> children;
    XReal eval(std::size_t atom, double x, Side) const override {
      return eng->robust_value(children.at(atom), x);
    }
    const std::vector<double>& breakpoints(std::size_t) const override { return eng->grid_; }
  };

  for (int n = tree.num_nodes() - 1; n >= 0; --n) {
    values_[n].resize(grid_.size());
    if (tree.is_terminal(n)) {
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        values_[n][i] = utility_.eval(tree.node(n).path, grid_[i]);
      }
      continue;
    }
    PLStage stage;
    stage.eng = this;
    stage.children = tree.node(n).children;

    OnePeriodProblem prob;
    const Node& nd = tree.node(n);
    for (std::size_t c = 0; c < nd.children.size(); ++c) {
      prob.atoms.push_back({nd.child_labels[c], delta_s(tree, n, static_cast<int>(c))});
    }
    prob.vertices = market_.priors.vertices[n];
    prob.p_star = kernel_.probs[n];
    prob.value = &stage;
    for (int ch : nd.children) prob.c_atom.push_back(c_values_[ch]);
    prob.gamma_lo = cert_.gamma_lo;
    prob.gamma_hi = cert_.gamma_hi;
    prob.eta = cert_.eta;
    prob.prepare();

    SearchOptions so = cfg_.search;
    so.closure_objective = false;
    so.explicit_radius = cfg_.wealth_hi - cfg_.wealth_lo;
    maximizers_[n].resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const SearchResult r = maximize_psi(prob, OnePeriodConstants{}, grid_[i], so);
      values_[n][i] = r.value;
      maximizers_[n][i] = r.h;
    }
  }
}

XReal GridDpEngine::robust_value(int node, double x) const {
  const auto& v = values_[node];
  if (x <= grid_.front()) return v.front();
  if (x >= grid_.back()) return v.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const std::size_t i = it - grid_.begin() - 1;
  if (!v[i].finite() || !v[i + 1].finite()) return v[i];
  const double t = (x - grid_[i]) / (grid_[i + 1] - grid_[i]);
  return v[i].value() * (1.0 - t) + v[i + 1].value() * t;
}

PolicyTrace GridDpEngine::synthesize_strategy(double x0) const {
  const ScenarioTree& tree = market_.tree;
  std::vector<bool> reach(tree.num_nodes(), false);
  for (int n : reachable_nodes(tree, market_.priors)) reach[n] = true;

  PolicyTrace tr;
  tr.x0 = x0;
  tr.wealth[tree.root()] = x0;
  auto walk = [&](auto&& self, int node) -> void {
    if (tree.is_terminal(node)) return;
    const double w = tr.wealth.at(node);
    // Nearest tabulated maximizer; documented approximation of the mode.
    const auto it = std::lower_bound(grid_.begin(), grid_.end(), w);
    std::size_t i = it == grid_.end() ? grid_.size() - 1 : it - grid_.begin();
    if (i > 0 && std::abs(grid_[i - 1] - w) < std::abs(grid_[i] - w)) --i;
    const VecD h = maximizers_[node][i];
    tr.strategy[node] = h;
    const Node& nd = tree.node(node);
    for (std::size_t c = 0; c < nd.children.size(); ++c) {
      const int ch = nd.children[c];
      if (!reach[ch]) continue;
      tr.wealth[ch] = w + dot_d(h, delta_s(tree, node, static_cast<int>(c)));
      self(self, ch);
    }
  };
  walk(walk, tree.root());
  return tr;
}

XReal GridDpEngine::lower_value(const PolicyTrace& trace) const {
  const ScenarioTree& tree = market_.tree;
  std::vector<bool> reach(tree.num_nodes(), false);
  for (int n : reachable_nodes(tree, market_.priors)) reach[n] = true;
  std::map<int, XReal> memo;
  auto w = [&](auto&& self, int node) -> XReal {
    const auto it = memo.find(node);
    if (it != memo.end()) return it->second;
    XReal out;
    if (tree.is_terminal(node)) {
      out = utility_.eval(tree.node(node).path, trace.wealth.at(node));
    } else {
      std::vector<XReal> child_vals;
      for (int ch : tree.node(node).children) {
        child_vals.push_back(reach[ch] ? self(self, ch) : XReal(0.0));
      }
      out = XReal::pos_inf();
      for (const VecD& p : market_.priors.vertices[node]) {
        out = min(out, expect_children(p, child_vals));
      }
    }
    memo.emplace(node, out);
    return out;
  };
  return w(w, tree.root());
}

}  // namespace maxmin
