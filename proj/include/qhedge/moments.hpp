#ifndef QHEDGE_MOMENTS_HPP
#define QHEDGE_MOMENTS_HPP

#include "qhedge/process.hpp"
#include "qhedge/tree.hpp"

namespace qhedge {

/*
 * Conditional moments on a filtration tree. Conditioning on F_{n-1} at a
 * time-(n-1) node v means weighting v's children by their one-step
 * transition probabilities; these are the only formulas the backward
 * regression ever needs.
 */

template <class T>
T cond_expect(const FiltrationTree<T>& tree, const AdaptedProcess<T>& x, NodeIndex v) {
  const auto& children = tree.node(v).children;
  if (children.empty())
    throw InputError("conditional expectation requested at leaf '" +
                     display_id(tree.node(v).id) + "'");
  T acc(0);
  for (NodeIndex c : children) acc += tree.node(c).prob * x.at(c);
  return acc;
}

template <class T>
T cond_cov(const FiltrationTree<T>& tree, const AdaptedProcess<T>& x,
           const AdaptedProcess<T>& y, NodeIndex v) {
  const auto& children = tree.node(v).children;
  if (children.empty())
    throw InputError("conditional covariance requested at leaf '" +
                     display_id(tree.node(v).id) + "'");
  T ex(0), ey(0), exy(0);
  for (NodeIndex c : children) {
    const T& p = tree.node(c).prob;
    const T& xv = x.at(c);
    const T& yv = y.at(c);
    ex += p * xv;
    ey += p * yv;
    exy += p * xv * yv;
  }
  return exy - ex * ey;
}

template <class T>
T cond_var(const FiltrationTree<T>& tree, const AdaptedProcess<T>& x, NodeIndex v) {
  return cond_cov(tree, x, x, v);
}

// Unconditional expectation of X_t: sum of path probability times value
// over the time-t level.
template <class T>
T expectation(const FiltrationTree<T>& tree, const AdaptedProcess<T>& x, int t) {
  T acc(0);
  for (NodeIndex v : tree.level(t)) acc += tree.path_prob(v) * x.at(v);
  return acc;
}

// Backward closure of terminal values under per-node child weights.
// `weights` carries one weight per non-root node (weight of reaching the
// child from its parent); with the tree's own transition probabilities
// this is the martingale extension under P.
template <class T>
AdaptedProcess<T> backward_extend(const FiltrationTree<T>& tree,
                                  const AdaptedProcess<T>& terminal,
                                  const AdaptedProcess<T>& weights) {
  AdaptedProcess<T> out(tree.size());
  for (NodeIndex v : tree.leaves()) out.set(v, terminal.at(v));
  for (int t = tree.horizon() - 1; t >= 0; --t) {
    for (NodeIndex v : tree.level(t)) {
      T acc(0);
      for (NodeIndex c : tree.node(v).children) acc += weights.at(c) * out.at(c);
      out.set(v, acc);
    }
  }
  return out;
}

// X_n(v) = E[X_N | F_n](v); a P-martingale by construction.
template <class T>
AdaptedProcess<T> martingale_extend(const FiltrationTree<T>& tree,
                                    const AdaptedProcess<T>& terminal) {
  AdaptedProcess<T> weights(tree.size());
  for (NodeIndex i = 0; i < tree.size(); ++i)
    if (tree.node(i).parent != kNoParent) weights.set(i, tree.node(i).prob);
  return backward_extend(tree, terminal, weights);
}

}  // namespace qhedge

#endif  // QHEDGE_MOMENTS_HPP
