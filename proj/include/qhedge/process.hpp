#ifndef QHEDGE_PROCESS_HPP
#define QHEDGE_PROCESS_HPP

#include <optional>
#include <vector>

#include "qhedge/errors.hpp"
#include "qhedge/tree.hpp"

namespace qhedge {

namespace detail {

// Values attached to tree nodes; entries may be absent while a process is
// being assembled, and reads of absent entries throw MissingValue.
template <class T>
class NodeValues {
 public:
  NodeValues() = default;
  explicit NodeValues(std::size_t node_count) : values_(node_count) {}

  std::size_t size() const { return values_.size(); }
  bool has(NodeIndex i) const { return i < values_.size() && values_[i].has_value(); }

  void set(NodeIndex i, T v) { values_[i] = std::move(v); }

  const T& at(NodeIndex i) const {
    if (!has(i)) throw MissingValue("no value at node index " + std::to_string(i));
    return *values_[i];
  }

 private:
  std::vector<std::optional<T>> values_;
};

}  // namespace detail

// Value per node at its own time: X_n on the atoms of F_n.
template <class T>
class AdaptedProcess : public detail::NodeValues<T> {
 public:
  using detail::NodeValues<T>::NodeValues;

  static AdaptedProcess constant(const FiltrationTree<T>& tree, const T& v) {
    AdaptedProcess p(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i) p.set(i, v);
    return p;
  }
};

// Value decided one step ahead: the entry at a non-leaf node v is the
// process value for step time(v)+1, constant across v's children.
template <class T>
class PredictableProcess : public detail::NodeValues<T> {
 public:
  using detail::NodeValues<T>::NodeValues;

  static PredictableProcess constant(const FiltrationTree<T>& tree, const T& v) {
    PredictableProcess p(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i)
      if (!tree.is_leaf(i)) p.set(i, v);
    return p;
  }
};

// Increments dX_n = X_n - X_{n-1}, stored on non-root nodes.
template <class T>
AdaptedProcess<T> increments(const FiltrationTree<T>& tree, const AdaptedProcess<T>& x) {
  AdaptedProcess<T> dx(tree.size());
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    if (n.parent == kNoParent) continue;
    dx.set(i, x.at(i) - x.at(n.parent));
  }
  return dx;
}

}  // namespace qhedge

#endif  // QHEDGE_PROCESS_HPP
