#include "maxmin/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace maxmin {

namespace {

constexpr double kProbTol = 1e-12;

int path_depth(const std::string& path) {
  if (path.empty()) return 0;
  return 1 + static_cast<int>(std::count(path.begin(), path.end(), '/'));
}

std::string parent_path(const std::string& path) {
  const auto pos = path.rfind('/');
  return pos == std::string::npos ? std::string{} : path.substr(0, pos);
}

std::string join_path(const std::string& base, const std::string& label) {
  return base.empty() ? label : base + "/" + label;
}

}  // namespace

ScenarioTree::ScenarioTree(int horizon, int assets, std::vector<Node> nodes)
    : horizon_(horizon), assets_(assets), nodes_(std::move(nodes)) {
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    by_path_.emplace(nodes_[i].path, i);
  }
}

int ScenarioTree::index_of(const std::string& path) const {
  const auto it = by_path_.find(path);
  if (it == by_path_.end()) throw SchemaError("unknown node '" + path + "'");
  return it->second;
}

std::optional<int> ScenarioTree::try_index_of(const std::string& path) const {
  const auto it = by_path_.find(path);
  if (it == by_path_.end()) return std::nullopt;
  return it->second;
}

Kernel make_kernel(const Market& market, std::vector<VecD> weights) {
  const ScenarioTree& tree = market.tree;
  Kernel k;
  k.probs.resize(tree.num_nodes());
  k.weights.resize(tree.num_nodes());
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (tree.is_terminal(n)) continue;
    const auto& verts = market.priors.vertices[n];
    const VecD& w = weights.at(n);
    if (w.size() != verts.size()) {
      throw SchemaError("kernel weights at node '" + tree.node(n).path +
                        "' do not match the vertex count");
    }
    double wsum = 0;
    VecD p(tree.node(n).children.size(), 0.0);
    for (std::size_t v = 0; v < verts.size(); ++v) {
      if (w[v] < 0) throw SchemaError("negative kernel weight at node '" + tree.node(n).path + "'");
      wsum += w[v];
      for (std::size_t c = 0; c < p.size(); ++c) p[c] += w[v] * verts[v][c];
    }
    if (std::abs(wsum - 1.0) > kProbTol) {
      throw SchemaError("kernel weights at node '" + tree.node(n).path + "' sum to " +
                        std::to_string(wsum));
    }
    k.probs[n] = std::move(p);
    k.weights[n] = w;
  }
  return k;
}

Market load_market(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("market document must be a JSON object");
  for (const char* field : {"horizon", "assets", "nodes"}) {
    if (!doc.contains(field)) throw SchemaError(std::string("market: missing field '") + field + "'");
  }
  const int horizon = doc.at("horizon").get<int>();
  const int assets = doc.at("assets").get<int>();
  if (horizon < 1) throw SchemaError("market: horizon must be >= 1");
  if (assets < 1) throw SchemaError("market: assets must be >= 1");

  struct RawNode {
    VecD price;
    std::vector<std::string> children;
    std::vector<VecD> vertices;
  };
  std::map<std::string, RawNode> raw;
  for (const auto& jn : doc.at("nodes")) {
    const std::string path = jn.at("path").get<std::string>();
    if (raw.count(path)) throw SchemaError("duplicate node '" + path + "'");
    RawNode rn;
    rn.price = jn.at("price").get<VecD>();
    if (static_cast<int>(rn.price.size()) != assets) {
      throw SchemaError("node '" + path + "': price has " + std::to_string(rn.price.size()) +
                        " entries, expected " + std::to_string(assets));
    }
    for (double v : rn.price) {
      if (!std::isfinite(v)) throw SchemaError("node '" + path + "': non-finite price");
    }
    if (jn.contains("children")) rn.children = jn.at("children").get<std::vector<std::string>>();
    for (const auto& lbl : rn.children) {
      if (lbl.empty() || lbl.find('/') != std::string::npos) {
        throw SchemaError("node '" + path + "': bad child label '" + lbl + "'");
      }
    }
    if (jn.contains("prior_vertices")) {
      rn.vertices = jn.at("prior_vertices").get<std::vector<VecD>>();
    }
    raw.emplace(path, std::move(rn));
  }

  if (!raw.count("")) throw SchemaError("market: missing root node (path \"\")");

  // Validate connectivity: every node other than the root must be listed
  // among its parent's children.
  for (const auto& [path, rn] : raw) {
    const int depth = path_depth(path);
    if (depth > horizon) throw SchemaError("node '" + path + "' deeper than the horizon");
    if (!path.empty()) {
      const std::string parent = parent_path(path);
      const auto pit = raw.find(parent);
      const std::string label = path.substr(parent.empty() ? 0 : parent.size() + 1);
      if (pit == raw.end() ||
          std::find(pit->second.children.begin(), pit->second.children.end(), label) ==
              pit->second.children.end()) {
        throw SchemaError("orphan node '" + path + "'");
      }
    }
    if (depth < horizon) {
      if (rn.children.empty()) throw SchemaError("non-terminal node '" + path + "' has no children");
      if (rn.vertices.empty()) throw SchemaError("node '" + path + "': empty prior vertex list");
    } else {
      if (!rn.children.empty()) throw SchemaError("terminal node '" + path + "' has children");
    }
    for (const auto& lbl : rn.children) {
      if (!raw.count(join_path(path, lbl))) {
        throw SchemaError("node '" + path + "': child '" + lbl + "' has no node entry");
      }
    }
    for (const VecD& v : rn.vertices) {
      if (v.size() != rn.children.size()) {
        throw SchemaError("node '" + path + "': prior vertex arity " + std::to_string(v.size()) +
                          " != " + std::to_string(rn.children.size()) + " children");
      }
      double sum = 0;
      for (double p : v) {
        if (!(p >= 0.0)) throw SchemaError("node '" + path + "': negative vertex probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbTol) {
        std::ostringstream os;
        os << "node '" << path << "': probability sum " << sum << " != 1";
        throw SchemaError(os.str());
      }
    }
  }

  // Deterministic indexing: depth-first from the root in child order.
  std::vector<Node> nodes;
  std::vector<std::vector<VecD>> vertices;
  auto build = [&](auto&& self, const std::string& path, int parent) -> int {
    const RawNode& rn = raw.at(path);
    const int idx = static_cast<int>(nodes.size());
    Node n;
    n.path = path;
    n.depth = path_depth(path);
    n.price = rn.price;
    n.parent = parent;
    n.child_labels = rn.children;
    nodes.push_back(std::move(n));
    vertices.push_back(rn.vertices);
    for (const auto& lbl : rn.children) {
      const int child = self(self, join_path(path, lbl), idx);
      nodes[idx].children.push_back(child);
    }
    return idx;
  };
  build(build, "", -1);

  if (nodes.size() != raw.size()) throw SchemaError("market: disconnected node entries present");

  return Market{ScenarioTree(horizon, assets, std::move(nodes)), PriorSet{std::move(vertices)}};
}

Market load_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("'" + path + "': " + e.what());
  }
  return load_market(doc);
}

nlohmann::json serialize_market(const Market& market) {
  const ScenarioTree& tree = market.tree;
  nlohmann::json doc;
  doc["horizon"] = tree.horizon();
  doc["assets"] = tree.asset_count();
  std::vector<int> order(tree.num_nodes());
  for (int i = 0; i < tree.num_nodes(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return tree.node(a).path < tree.node(b).path; });
  nlohmann::json nodes = nlohmann::json::array();
  for (int idx : order) {
    const Node& n = tree.node(idx);
    nlohmann::json jn;
    jn["path"] = n.path;
    jn["price"] = n.price;
    jn["children"] = n.child_labels;
    jn["prior_vertices"] = market.priors.vertices[idx];
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

namespace {

void dump_canonical(const nlohmann::json& j, std::string& out) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // keys already sorted
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(it.key()).dump();
        out += ':';
        dump_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case nlohmann::json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_canonical(j[i], out);
      }
      out += ']';
      break;
    }
    case nlohmann::json::value_t::number_float: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
      out += buf;
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  dump_canonical(j, out);
  return out;
}

VecD delta_s(const ScenarioTree& tree, int node, int child_pos) {
  const Node& n = tree.node(node);
  if (child_pos < 0 || child_pos >= static_cast<int>(n.children.size())) {
    throw SchemaError("node '" + n.path + "': no child at position " + std::to_string(child_pos));
  }
  const Node& c = tree.node(n.children[child_pos]);
  VecD d(n.price.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = c.price[i] - n.price[i];
  return d;
}

VecD delta_s(const ScenarioTree& tree, const std::string& node_path,
             const std::string& child_label) {
  const int idx = tree.index_of(node_path);
  const Node& n = tree.node(idx);
  const auto it = std::find(n.child_labels.begin(), n.child_labels.end(), child_label);
  if (it == n.child_labels.end()) {
    throw SchemaError("node '" + node_path + "': unknown child '" + child_label + "'");
  }
  return delta_s(tree, idx, static_cast<int>(it - n.child_labels.begin()));
}

namespace {

bool transition_charged(const PriorSet& priors, int node, int child_pos) {
  for (const VecD& v : priors.vertices[node]) {
    if (v[child_pos] > 0.0) return true;
  }
  return false;
}

}  // namespace

std::set<std::string> reachable_paths(const ScenarioTree& tree, const PriorSet& priors) {
  std::set<std::string> out;
  auto walk = [&](auto&& self, int node) -> void {
    if (tree.is_terminal(node)) {
      out.insert(tree.node(node).path);
      return;
    }
    for (std::size_t c = 0; c < tree.node(node).children.size(); ++c) {
      if (transition_charged(priors, node, static_cast<int>(c))) {
        self(self, tree.node(node).children[c]);
      }
    }
  };
  walk(walk, tree.root());
  return out;
}

std::vector<int> reachable_nodes(const ScenarioTree& tree, const PriorSet& priors) {
  std::vector<int> out;
  auto walk = [&](auto&& self, int node) -> void {
    out.push_back(node);
    if (tree.is_terminal(node)) return;
    for (std::size_t c = 0; c < tree.node(node).children.size(); ++c) {
      if (transition_charged(priors, node, static_cast<int>(c))) {
        self(self, tree.node(node).children[c]);
      }
    }
  };
  walk(walk, tree.root());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace maxmin
