#ifndef QHEDGE_TREE_HPP
#define QHEDGE_TREE_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qhedge/errors.hpp"
#include "qhedge/scalar.hpp"

namespace qhedge {

using NodeIndex = std::uint32_t;
inline constexpr NodeIndex kNoParent = static_cast<NodeIndex>(-1);

inline std::string display_id(const std::string& id) {
  return id.empty() ? std::string("(root)") : id;
}

template <class T>
struct NodeSpec {
  std::string id;
  std::optional<std::string> parent;  // empty optional = root
  T prob{1};                          // one-step transition probability from parent
};

/*
 * Finite filtration as a rooted tree. Level t holds the atoms of the
 * time-t sigma-algebra; one-step transition probabilities sit on the
 * child nodes and must sum to one per parent. Immutable once built.
 */
template <class T>
class FiltrationTree {
 public:
  struct Node {
    std::string id;
    int time = 0;
    NodeIndex parent = kNoParent;
    T prob{1};
    std::vector<NodeIndex> children;
  };

  // Validates the full set of tree invariants; `horizon` may pin N explicitly.
  static FiltrationTree build(const std::vector<NodeSpec<T>>& specs,
                              std::optional<int> horizon = std::nullopt);

  int horizon() const { return horizon_; }
  std::size_t size() const { return nodes_.size(); }
  NodeIndex root() const { return root_; }
  const Node& node(NodeIndex i) const { return nodes_[i]; }
  bool is_leaf(NodeIndex i) const { return nodes_[i].children.empty(); }
  const std::vector<NodeIndex>& level(int t) const { return levels_[static_cast<std::size_t>(t)]; }
  const std::vector<NodeIndex>& leaves() const { return levels_[static_cast<std::size_t>(horizon_)]; }
  const T& path_prob(NodeIndex i) const { return path_prob_[i]; }

  NodeIndex find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) throw UnknownNode("unknown node id '" + std::string(id) + "'");
    return it->second;
  }
  bool contains(std::string_view id) const { return by_id_.count(std::string(id)) != 0; }

 private:
  std::vector<Node> nodes_;
  NodeIndex root_ = 0;
  int horizon_ = 0;
  std::vector<std::vector<NodeIndex>> levels_;
  std::vector<T> path_prob_;
  std::unordered_map<std::string, NodeIndex> by_id_;
};

template <class T>
FiltrationTree<T> FiltrationTree<T>::build(const std::vector<NodeSpec<T>>& specs,
                                           std::optional<int> horizon) {
  if (specs.empty()) throw NoUniqueRoot("tree has no nodes");

  FiltrationTree<T> tree;
  tree.nodes_.resize(specs.size());
  std::unordered_map<std::string, NodeIndex> by_id;
  by_id.reserve(specs.size());

  NodeIndex root = kNoParent;
  for (NodeIndex i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (!by_id.emplace(s.id, i).second)
      throw DuplicateNodeId("duplicate node id '" + display_id(s.id) + "'");
    if (!s.parent) {
      if (root != kNoParent) throw NoUniqueRoot("more than one root node");
      root = i;
    }
  }
  if (root == kNoParent) throw NoUniqueRoot("no root node (every node has a parent)");

  for (NodeIndex i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    auto& n = tree.nodes_[i];
    n.id = s.id;
    n.prob = s.prob;
    if (s.parent) {
      auto it = by_id.find(*s.parent);
      if (it == by_id.end())
        throw DanglingParent("node '" + display_id(s.id) + "' references unknown parent '" +
                             display_id(*s.parent) + "'");
      n.parent = it->second;
      tree.nodes_[it->second].children.push_back(i);
      if (!(s.prob > T(0)))
        throw NonPositiveProbability("non-positive transition probability at node '" +
                                     display_id(s.id) + "'");
    } else {
      n.prob = T(1);
    }
  }

  // Assign times by breadth-first walk from the root; anything unreachable
  // (cycles, orphan components) is a structural error.
  std::vector<char> visited(specs.size(), 0);
  std::deque<NodeIndex> queue{root};
  visited[root] = 1;
  tree.nodes_[root].time = 0;
  int max_time = 0;
  std::size_t seen = 0;
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    ++seen;
    max_time = std::max(max_time, tree.nodes_[v].time);
    for (NodeIndex c : tree.nodes_[v].children) {
      visited[c] = 1;
      tree.nodes_[c].time = tree.nodes_[v].time + 1;
      queue.push_back(c);
    }
  }
  if (seen != specs.size()) {
    for (NodeIndex i = 0; i < specs.size(); ++i)
      if (!visited[i])
        throw DanglingParent("node '" + display_id(specs[i].id) + "' is not reachable from the root");
  }

  const int n_horizon = horizon.value_or(max_time);
  if (max_time > n_horizon)
    throw RaggedHorizon("node beyond stated horizon " + std::to_string(n_horizon));
  tree.horizon_ = n_horizon;

  tree.levels_.assign(static_cast<std::size_t>(n_horizon) + 1, {});
  tree.path_prob_.assign(specs.size(), T(0));
  tree.path_prob_[root] = T(1);
  for (NodeIndex i = 0; i < specs.size(); ++i) {
    const auto& n = tree.nodes_[i];
    tree.levels_[static_cast<std::size_t>(n.time)].push_back(i);
    if (n.children.empty() && n.time != n_horizon)
      throw RaggedHorizon("leaf '" + display_id(n.id) + "' at time " + std::to_string(n.time) +
                          ", horizon is " + std::to_string(n_horizon));
  }

  // Child probabilities must sum to one under each parent: exactly in
  // rational mode, within 1e-12 in float mode.
  for (NodeIndex v = 0; v < specs.size(); ++v) {
    const auto& n = tree.nodes_[v];
    if (n.children.empty()) continue;
    T sum(0);
    for (NodeIndex c : n.children) sum += tree.nodes_[c].prob;
    bool ok;
    if constexpr (ScalarOps<T>::kExact) {
      ok = sum == T(1);
    } else {
      ok = ScalarOps<T>::abs(sum - T(1)) <= 1e-12;
    }
    if (!ok)
      throw ProbabilitySumViolation("child probabilities at node '" + display_id(n.id) +
                                    "' sum to " + ScalarOps<T>::format(sum));
  }

  // Breadth-first order guarantees parents precede children level-wise.
  for (int t = 1; t <= n_horizon; ++t)
    for (NodeIndex v : tree.levels_[static_cast<std::size_t>(t)])
      tree.path_prob_[v] = tree.path_prob_[tree.nodes_[v].parent] * tree.nodes_[v].prob;

  tree.root_ = root;
  tree.by_id_ = std::move(by_id);
  return tree;
}

}  // namespace qhedge

#endif  // QHEDGE_TREE_HPP
