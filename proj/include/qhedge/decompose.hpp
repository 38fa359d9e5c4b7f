#ifndef QHEDGE_DECOMPOSE_HPP
#define QHEDGE_DECOMPOSE_HPP

#include <string>
#include <utility>

#include "qhedge/model.hpp"
#include "qhedge/moments.hpp"

namespace qhedge {

/*
 * Backward sequential regression.
 *
 * theta_n at a time-(n-1) node is the conditional regression coefficient of
 * the running residual V_N - sum_{j>n} theta_j dS_j against dS_n. The
 * residual is F_N-measurable, but only its conditional projection enters
 * the covariances, so the sweep maintains the projected residual
 * H_n = E[V_N - sum_{j>n} theta_j dS_j | F_n] level by level:
 *
 *   theta_n(v) = Cov(H_n, dS_n | v) / Var(dS_n | v)
 *   H_{n-1}(v) = E[H_n | v] - theta_n(v) * E[dS_n | v]
 *
 * One pass over the tree, no re-expansion of the sum per level.
 */

enum class DegeneratePolicy {
  kStrict,  // zero conditional variance raises DegenerateNode
  kPseudo,  // zero conditional variance sets theta to 0 (minimal-norm convention)
};

template <class T>
struct FSDecomposition {
  T V0{0};
  PredictableProcess<T> theta;
  AdaptedProcess<T> L;
  T objective{0};
};

// Gains from trade: G_0 = 0, G_n = G_{n-1} + theta_n * dS_n.
template <class T>
AdaptedProcess<T> gains(const MarketModel<T>& m, const PredictableProcess<T>& theta) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  AdaptedProcess<T> g(m.tree.size());
  g.set(m.tree.root(), T(0));
  for (int t = 1; t <= m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const NodeIndex parent = m.tree.node(v).parent;
      g.set(v, g.at(parent) + theta.at(parent) * ds.at(v));
    }
  }
  return g;
}

// E[(V_N - c - G_N(theta))^2], evaluated from the definition.
template <class T>
T objective(const MarketModel<T>& m, const Claim<T>& claim, const T& c,
            const PredictableProcess<T>& theta) {
  const AdaptedProcess<T> g = gains(m, theta);
  T acc(0);
  for (NodeIndex v : m.tree.leaves()) {
    const T resid = claim.terminal.at(v) - c - g.at(v);
    acc += m.tree.path_prob(v) * resid * resid;
  }
  return acc;
}

namespace detail {

template <class T>
struct RegressionSweep {
  PredictableProcess<T> theta;
  AdaptedProcess<T> projected_residual;  // H above; H at the root equals V0
};

template <class T>
RegressionSweep<T> regression_sweep(const MarketModel<T>& m, const Claim<T>& claim,
                                    DegeneratePolicy policy) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  RegressionSweep<T> sweep{PredictableProcess<T>(m.tree.size()),
                           AdaptedProcess<T>(m.tree.size())};
  for (NodeIndex v : m.tree.leaves()) sweep.projected_residual.set(v, claim.terminal.at(v));

  for (int t = m.tree.horizon() - 1; t >= 0; --t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T var = cond_var(m.tree, ds, v);
      T th(0);
      if (var > T(0)) {
        th = cond_cov(m.tree, sweep.projected_residual, ds, v) / var;
      } else if (policy == DegeneratePolicy::kStrict) {
        throw DegenerateNode(m.tree.node(v).id,
                             "zero conditional variance of stock increment at node '" +
                                 display_id(m.tree.node(v).id) + "'");
      }
      sweep.theta.set(v, th);
      sweep.projected_residual.set(
          v, cond_expect(m.tree, sweep.projected_residual, v) - th * cond_expect(m.tree, ds, v));
    }
  }
  return sweep;
}

}  // namespace detail

template <class T>
PredictableProcess<T> sequential_regression(const MarketModel<T>& m, const Claim<T>& claim,
                                            DegeneratePolicy policy = DegeneratePolicy::kStrict) {
  return detail::regression_sweep(m, claim, policy).theta;
}

// Full decomposition V_N = V0 + sum theta_j dS_j + L_N. V0 and the
// objective are recomputed from their definitions after the sweep, not
// read off intermediate state.
template <class T>
FSDecomposition<T> fs_decompose(const MarketModel<T>& m, const Claim<T>& claim,
                                DegeneratePolicy policy = DegeneratePolicy::kStrict) {
  FSDecomposition<T> fs;
  fs.theta = sequential_regression(m, claim, policy);

  const AdaptedProcess<T> g = gains(m, fs.theta);
  AdaptedProcess<T> terminal_gap(m.tree.size());
  T v0(0);
  for (NodeIndex v : m.tree.leaves()) {
    terminal_gap.set(v, claim.terminal.at(v) - g.at(v));
    v0 += m.tree.path_prob(v) * terminal_gap.at(v);
  }
  fs.V0 = v0;

  AdaptedProcess<T> l_terminal(m.tree.size());
  for (NodeIndex v : m.tree.leaves()) l_terminal.set(v, terminal_gap.at(v) - v0);
  fs.L = martingale_extend(m.tree, l_terminal);
  fs.objective = objective(m, claim, fs.V0, fs.theta);
  return fs;
}

template <class T>
struct DeltaHedge {
  PredictableProcess<T> theta;
  AdaptedProcess<T> wealth;  // replicating wealth, quoted undiscounted (value of the date)
};

// Binomial backward induction: wealth is the one-step risk-neutral
// expectation of the claim, theta the difference quotient of wealth over
// stock across the two children.
template <class T>
DeltaHedge<T> delta_hedge(const MarketModel<T>& m, const Claim<T>& claim) {
  if (!check_complete(m)) throw NotComplete("market is not complete");
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t))
      if (m.tree.node(v).children.size() != 2)
        throw NotBinomial("node '" + display_id(m.tree.node(v).id) +
                          "' does not have exactly two children");

  // One-step weights that make the discounted stock a martingale.
  AdaptedProcess<T> weights(m.tree.size());
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const auto& ch = m.tree.node(v).children;
      const T den = m.stock.at(ch[0]) - m.stock.at(ch[1]);
      const T q = (m.stock.at(v) - m.stock.at(ch[1])) / den;
      weights.set(ch[0], q);
      weights.set(ch[1], T(1) - q);
    }
  }

  const AdaptedProcess<T> wealth_disc = backward_extend(m.tree, claim.terminal, weights);

  DeltaHedge<T> out{PredictableProcess<T>(m.tree.size()), AdaptedProcess<T>(m.tree.size())};
  for (NodeIndex v = 0; v < m.tree.size(); ++v)
    out.wealth.set(v, wealth_disc.at(v) * m.growth(m.tree.node(v).time));
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const auto& ch = m.tree.node(v).children;
      out.theta.set(v, (wealth_disc.at(ch[0]) - wealth_disc.at(ch[1])) /
                           (m.stock.at(ch[0]) - m.stock.at(ch[1])));
    }
  }
  return out;
}

// Max nodewise gap between the regression strategy and the delta hedge;
// zero in exact arithmetic on complete binomial markets.
template <class T>
T verify_equivalence(const MarketModel<T>& m, const Claim<T>& claim) {
  const PredictableProcess<T> seq = sequential_regression(m, claim);
  const DeltaHedge<T> dh = delta_hedge(m, claim);
  T worst(0);
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T gap = ScalarOps<T>::abs(seq.at(v) - dh.theta.at(v));
      if (gap > worst) worst = gap;
    }
  }
  return worst;
}

// Max nodewise |E[dL_n dM_n | F_{n-1}]|; orthogonality of L to the
// martingale part of S means this vanishes everywhere.
template <class T>
T verify_orthogonality(const MarketModel<T>& m, const FSDecomposition<T>& fs,
                       const DoobDecomposition<T>& doob) {
  const AdaptedProcess<T> dl = increments(m.tree, fs.L);
  const AdaptedProcess<T> dm = increments(m.tree, doob.martingale);
  T worst(0);
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      T acc(0);
      for (NodeIndex c : m.tree.node(v).children)
        acc += m.tree.node(c).prob * dl.at(c) * dm.at(c);
      const T gap = ScalarOps<T>::abs(acc);
      if (gap > worst) worst = gap;
    }
  }
  return worst;
}

}  // namespace qhedge

#endif  // QHEDGE_DECOMPOSE_HPP
