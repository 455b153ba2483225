#ifndef MAXMIN_MARKET_HPP
#define MAXMIN_MARKET_HPP

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "maxmin/xreal.hpp"

namespace maxmin {

using VecD = std::vector<double>;

/// Schema or invariant violation in an input document (CLI exit code 2).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Unreadable or unwritable file (CLI exit code 3).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Node {
  std::string path;  // child labels joined by '/'; "" is the root
  int depth = 0;
  VecD price;
  int parent = -1;
  std::vector<int> children;  // node indices, in document order
  std::vector<std::string> child_labels;
};

/// Finite event tree with d-dimensional discounted prices per node.
/// Immutable after load; node identity is the label path from the root.
class ScenarioTree {
 public:
  ScenarioTree(int horizon, int assets, std::vector<Node> nodes);

  int horizon() const { return horizon_; }
  int asset_count() const { return assets_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int idx) const { return nodes_.at(idx); }
  bool is_terminal(int idx) const { return nodes_.at(idx).depth == horizon_; }
  int root() const { return 0; }

  /// Index of the node with the given path; throws SchemaError if unknown.
  int index_of(const std::string& path) const;
  std::optional<int> try_index_of(const std::string& path) const;

 private:
  int horizon_;
  int assets_;
  std::vector<Node> nodes_;
  std::map<std::string, int> by_path_;
};

/// Per-node finite vertex list of probability vectors over children; the
/// prior set is the convex hull of the vertices.
struct PriorSet {
  std::vector<std::vector<VecD>> vertices;  // indexed by node; empty at terminals
};

/// One chosen prior per node, recorded as a convex combination of that
/// node's prior vertices.
struct Kernel {
  std::vector<VecD> probs;    // per node, over children
  std::vector<VecD> weights;  // per node, over the node's prior vertices
};

struct Market {
  ScenarioTree tree;
  PriorSet priors;
};

/// Builds a kernel from per-node mixture weights over prior vertices and
/// checks the reconstruction invariant (1e-12).
Kernel make_kernel(const Market& market, std::vector<VecD> weights);

/// Parses and validates a market document. Throws SchemaError with the
/// offending node named in the message.
Market load_market(const nlohmann::json& doc);
Market load_market_file(const std::string& path);

nlohmann::json serialize_market(const Market& market);

/// Canonical text form: sorted keys, floats at 17 significant digits.
std::string canonical_dump(const nlohmann::json& j);

/// Price increment S_{t+1}(node, child) - S_t(node), exact stored-value
/// subtraction. `child_pos` indexes the node's children list.
VecD delta_s(const ScenarioTree& tree, int node, int child_pos);
VecD delta_s(const ScenarioTree& tree, const std::string& node_path, const std::string& child_label);

/// Terminal paths whose every transition is charged with positive
/// probability by at least one prior vertex. The complement is exactly
/// the union of the polar path sets.
std::set<std::string> reachable_paths(const ScenarioTree& tree, const PriorSet& priors);

/// Node indices (any depth) lying on some reachable terminal path.
std::vector<int> reachable_nodes(const ScenarioTree& tree, const PriorSet& priors);

}  // namespace maxmin

#endif  // MAXMIN_MARKET_HPP
