#ifndef QHEDGE_TESTS_REFERENCE_HPP
#define QHEDGE_TESTS_REFERENCE_HPP

#include "qhedge/qhedge.hpp"

// Test-only reference implementations, deliberately independent of the
// engine's projected-residual sweep: the regression oracle enumerates full
// leaf sets per conditioning atom, and the stationarity check evaluates
// the normal-equation residual of a candidate (c, theta) from scratch.

namespace qhtest {

template <class T>
qhedge::NodeIndex ancestor_at(const qhedge::FiltrationTree<T>& tree, qhedge::NodeIndex leaf,
                              int time) {
  qhedge::NodeIndex v = leaf;
  while (tree.node(v).time > time) v = tree.node(v).parent;
  return v;
}

// theta_n(v) = Cov(V_N - sum_{j>n} theta_j dS_j, dS_n | v) / Var(dS_n | v),
// with the residual kept as an explicit leaf table and every conditional
// moment computed by summing over the leaves below v.
template <class T>
qhedge::PredictableProcess<T> direct_sequential_regression(const qhedge::MarketModel<T>& m,
                                                           const qhedge::Claim<T>& claim) {
  const auto ds = qhedge::increments(m.tree, m.stock);
  const int horizon = m.tree.horizon();

  std::vector<T> resid(m.tree.size(), T(0));
  for (auto leaf : m.tree.leaves()) resid[leaf] = claim.terminal.at(leaf);

  qhedge::PredictableProcess<T> theta(m.tree.size());
  for (int n = horizon; n >= 1; --n) {
    for (qhedge::NodeIndex v : m.tree.level(n - 1)) {
      T pv(0), ea(0), es(0), eas(0), ess(0);
      for (auto leaf : m.tree.leaves()) {
        if (ancestor_at(m.tree, leaf, n - 1) != v) continue;
        const T& p = m.tree.path_prob(leaf);
        const T& step = ds.at(ancestor_at(m.tree, leaf, n));
        pv += p;
        ea += p * resid[leaf];
        es += p * step;
        eas += p * resid[leaf] * step;
        ess += p * step * step;
      }
      ea /= pv;
      es /= pv;
      eas /= pv;
      ess /= pv;
      theta.set(v, (eas - ea * es) / (ess - es * es));
    }
    for (auto leaf : m.tree.leaves()) {
      const auto atom = ancestor_at(m.tree, leaf, n - 1);
      resid[leaf] = resid[leaf] - theta.at(atom) * ds.at(ancestor_at(m.tree, leaf, n));
    }
  }
  return theta;
}

// Stationarity residual of the quadratic objective at (c, theta):
// max over non-leaf v of |E[dS_{t(v)+1} (V_N - c - G_N) | v]| together with
// |E[V_N - c - G_N]|. Zero exactly at the global minimizer.
template <class T>
T global_foc_residual(const qhedge::MarketModel<T>& m, const qhedge::Claim<T>& claim, const T& c,
                      const qhedge::PredictableProcess<T>& theta) {
  const auto g = qhedge::gains(m, theta);
  const auto ds = qhedge::increments(m.tree, m.stock);
  T worst(0);

  T mean(0);
  for (auto leaf : m.tree.leaves())
    mean += m.tree.path_prob(leaf) * (claim.terminal.at(leaf) - c - g.at(leaf));
  worst = qhedge::ScalarOps<T>::abs(mean);

  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (qhedge::NodeIndex v : m.tree.level(t)) {
      T acc(0);
      for (auto leaf : m.tree.leaves()) {
        if (ancestor_at(m.tree, leaf, t) != v) continue;
        acc += m.tree.path_prob(leaf) * ds.at(ancestor_at(m.tree, leaf, t + 1)) *
               (claim.terminal.at(leaf) - c - g.at(leaf));
      }
      const T gap = qhedge::ScalarOps<T>::abs(acc);
      if (gap > worst) worst = gap;
    }
  }
  return worst;
}

}  // namespace qhtest

#endif  // QHEDGE_TESTS_REFERENCE_HPP
