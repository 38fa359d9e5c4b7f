#ifndef QHEDGE_MODEL_HPP
#define QHEDGE_MODEL_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qhedge/moments.hpp"
#include "qhedge/process.hpp"
#include "qhedge/tree.hpp"

namespace qhedge {

/*
 * Market on a filtration tree: one risky asset and a bank account used as
 * numeraire. `stock` is the discounted price; the per-step rate is kept
 * only to translate to/from raw (undiscounted) prices at the edges.
 */
template <class T>
struct MarketModel {
  FiltrationTree<T> tree;
  AdaptedProcess<T> stock;  // discounted
  T rate{0};
  std::string label;

  T growth(int t) const { return pow_int(T(1) + rate, t); }
  T raw_stock(NodeIndex v) const { return stock.at(v) * growth(tree.node(v).time); }
};

// Discounted terminal payoff, defined on exactly the leaf set.
template <class T>
struct Claim {
  AdaptedProcess<T> terminal;
};

// S = M + A with M a martingale and A predictable; increments of A are
// stored one step ahead (dA_{t(v)+1} on the non-leaf node v).
template <class T>
struct DoobDecomposition {
  AdaptedProcess<T> martingale;
  PredictableProcess<T> drift_increments;
};

namespace detail {

template <class T>
void append_children(std::vector<NodeSpec<T>>& specs, const std::string& parent_id,
                     int depth, int steps,
                     const std::vector<std::pair<char, T>>& branches) {
  if (depth == steps) return;
  for (const auto& [tag, prob] : branches) {
    std::string id = parent_id + tag;
    specs.push_back(NodeSpec<T>{id, parent_id, prob});
    append_children(specs, id, depth + 1, steps, branches);
  }
}

}  // namespace detail

// Non-recombining binomial market: each step multiplies the raw price by u
// (child "H") or d (child "T"); prices are discounted at `rate` per step.
template <class T>
MarketModel<T> gen_binomial(const T& s0, const T& u, const T& d, const T& p, int steps,
                            const T& rate = T(0)) {
  if (!(s0 > T(0))) throw InvalidFactors("initial price must be positive");
  if (!(d > T(0)) || !(u > d) || !(u > T(1)) || !(d < T(1)))
    throw InvalidFactors("need up/down factors with u > 1 > d > 0");
  if (!(p > T(0)) || !(p < T(1))) throw InvalidProbability("head probability must lie in (0,1)");
  if (!(rate > T(-1))) throw InvalidFactors("rate must exceed -1");
  if (steps < 1) throw InvalidFactors("step count must be at least 1");

  std::vector<NodeSpec<T>> specs;
  specs.push_back(NodeSpec<T>{"", std::nullopt, T(1)});
  detail::append_children<T>(specs, "", 0, steps, {{'H', p}, {'T', T(1) - p}});
  MarketModel<T> model{FiltrationTree<T>::build(specs, steps), AdaptedProcess<T>{}, rate,
                       "binomial"};

  model.stock = AdaptedProcess<T>(model.tree.size());
  const T inv_growth = T(1) / (T(1) + rate);
  std::vector<T> raw(model.tree.size());
  raw[model.tree.root()] = s0;
  model.stock.set(model.tree.root(), s0);
  for (int t = 1; t <= steps; ++t) {
    for (NodeIndex v : model.tree.level(t)) {
      const auto& n = model.tree.node(v);
      raw[v] = raw[n.parent] * (n.id.back() == 'H' ? u : d);
      model.stock.set(v, raw[v] * pow_int(inv_growth, t));
    }
  }
  return model;
}

// Trinomial market: raw price moves to u*S ("U"), stays ("M"), or moves to
// d*S ("D"). Incomplete for every claim that is not stepwise affine in S.
template <class T>
MarketModel<T> gen_trinomial(const T& s0, const T& u, const T& d, const T& p_u, const T& p_m,
                             const T& p_d, int steps, const T& rate = T(0)) {
  if (!(s0 > T(0))) throw InvalidFactors("initial price must be positive");
  if (!(d > T(0)) || !(u > T(1)) || !(d < T(1)))
    throw InvalidFactors("need factors with u > 1 > d > 0");
  if (!(p_u > T(0)) || !(p_m > T(0)) || !(p_d > T(0)))
    throw InvalidProbability("branch probabilities must be positive");
  bool sums_to_one;
  if constexpr (ScalarOps<T>::kExact) {
    sums_to_one = p_u + p_m + p_d == T(1);
  } else {
    sums_to_one = ScalarOps<T>::abs(p_u + p_m + p_d - T(1)) <= 1e-12;
  }
  if (!sums_to_one) throw InvalidProbability("branch probabilities must sum to 1");
  if (!(rate > T(-1))) throw InvalidFactors("rate must exceed -1");
  if (steps < 1) throw InvalidFactors("step count must be at least 1");

  std::vector<NodeSpec<T>> specs;
  specs.push_back(NodeSpec<T>{"", std::nullopt, T(1)});
  detail::append_children<T>(specs, "", 0, steps, {{'U', p_u}, {'M', p_m}, {'D', p_d}});
  MarketModel<T> model{FiltrationTree<T>::build(specs, steps), AdaptedProcess<T>{}, rate,
                       "trinomial"};

  model.stock = AdaptedProcess<T>(model.tree.size());
  const T inv_growth = T(1) / (T(1) + rate);
  std::vector<T> raw(model.tree.size());
  raw[model.tree.root()] = s0;
  model.stock.set(model.tree.root(), s0);
  for (int t = 1; t <= steps; ++t) {
    for (NodeIndex v : model.tree.level(t)) {
      const auto& n = model.tree.node(v);
      const char move = n.id.back();
      raw[v] = raw[n.parent] * (move == 'U' ? u : move == 'D' ? d : T(1));
      model.stock.set(v, raw[v] * pow_int(inv_growth, t));
    }
  }
  return model;
}

enum class ClaimKind { kCall, kPut };

// European payoff on the raw terminal price, stored discounted.
template <class T>
Claim<T> payoff_claim(const MarketModel<T>& m, ClaimKind kind, const T& strike) {
  if (strike < T(0)) throw InputError("strike must be nonnegative");
  Claim<T> claim{AdaptedProcess<T>(m.tree.size())};
  const T disc = T(1) / m.growth(m.tree.horizon());
  for (NodeIndex v : m.tree.leaves()) {
    const T raw = m.raw_stock(v);
    T payoff = kind == ClaimKind::kCall ? raw - strike : strike - raw;
    if (payoff < T(0)) payoff = T(0);
    claim.terminal.set(v, payoff * disc);
  }
  return claim;
}

// Arbitrary raw payoff table keyed by leaf id; must cover every leaf.
template <class T>
Claim<T> custom_claim(const MarketModel<T>& m, const std::map<std::string, T>& raw_by_leaf) {
  Claim<T> claim{AdaptedProcess<T>(m.tree.size())};
  const T disc = T(1) / m.growth(m.tree.horizon());
  for (NodeIndex v : m.tree.leaves()) {
    auto it = raw_by_leaf.find(m.tree.node(v).id);
    if (it == raw_by_leaf.end())
      throw MissingLeaf("claim table has no value for leaf '" + display_id(m.tree.node(v).id) +
                        "'");
    claim.terminal.set(v, it->second * disc);
  }
  return claim;
}

template <class T>
DoobDecomposition<T> doob_decompose(const MarketModel<T>& m) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  DoobDecomposition<T> out{AdaptedProcess<T>(m.tree.size()),
                           PredictableProcess<T>(m.tree.size())};
  out.martingale.set(m.tree.root(), m.stock.at(m.tree.root()));
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T da = cond_expect(m.tree, ds, v);
      out.drift_increments.set(v, da);
      for (NodeIndex c : m.tree.node(v).children)
        out.martingale.set(c, out.martingale.at(v) + ds.at(c) - da);
    }
  }
  return out;
}

template <class T>
struct NdReport {
  bool satisfied = true;
  T delta_star{0};  // max over nodes of (E[dS])^2 / E[dS^2]; 1 marks a degenerate node
  std::vector<std::string> degenerate_nodes;
};

// Nondegeneracy check: (E[dS_n|F_{n-1}])^2 <= delta * E[dS_n^2|F_{n-1}]
// for some delta < 1, equivalently positive conditional variance of the
// increments at every non-leaf node.
template <class T>
NdReport<T> check_nd(const MarketModel<T>& m) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  NdReport<T> report;
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      T mean(0), mean_sq(0);
      for (NodeIndex c : m.tree.node(v).children) {
        const T& p = m.tree.node(c).prob;
        mean += p * ds.at(c);
        mean_sq += p * ds.at(c) * ds.at(c);
      }
      if (mean_sq == T(0)) {
        // 0/0: increments vanish identically at this node
        report.degenerate_nodes.push_back(m.tree.node(v).id);
        report.satisfied = false;
        if (report.delta_star < T(1)) report.delta_star = T(1);
        continue;
      }
      const T ratio = mean * mean / mean_sq;
      if (ratio > report.delta_star) report.delta_star = ratio;
      if (!(ratio < T(1))) {
        report.satisfied = false;
        report.degenerate_nodes.push_back(m.tree.node(v).id);
      }
    }
  }
  return report;
}

// One-step replication is solvable for every payoff iff each node has at
// most two children, with distinct stock values when there are two.
template <class T>
bool check_complete(const MarketModel<T>& m) {
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const auto& children = m.tree.node(v).children;
      if (children.size() > 2) return false;
      if (children.size() == 2 && m.stock.at(children[0]) == m.stock.at(children[1]))
        return false;
    }
  }
  return true;
}

}  // namespace qhedge

#endif  // QHEDGE_MODEL_HPP
