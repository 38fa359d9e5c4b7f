#ifndef QHEDGE_TESTS_FIXTURES_HPP
#define QHEDGE_TESTS_FIXTURES_HPP

#include <map>
#include <random>
#include <string>
#include <vector>

#include "qhedge/qhedge.hpp"

namespace qhtest {

using qhedge::AdaptedProcess;
using qhedge::Claim;
using qhedge::MarketModel;
using qhedge::NodeIndex;
using qhedge::PredictableProcess;
using qhedge::Rational;

// 3-step binomial market (S0=4, u=2, d=1/2, p=1/2, r=1/4); with a call at
// strike 1 it is the worked example every golden value in this suite
// traces back to.
inline MarketModel<Rational> sample_binomial_exact() {
  return qhedge::gen_binomial<Rational>(4, 2, Rational(1, 2), Rational(1, 2), 3, Rational(1, 4));
}

inline MarketModel<double> sample_binomial_float() {
  return qhedge::gen_binomial<double>(4, 2, 0.5, 0.5, 3, 0.25);
}

// 1-step trinomial (S0=4, u=2, d=1/2, equal branch probabilities, r=0);
// the call at strike 3 has minimal objective 2/21 > 0.
inline MarketModel<Rational> sample_trinomial_exact() {
  const Rational third(1, 3);
  return qhedge::gen_trinomial<Rational>(4, 2, Rational(1, 2), third, third, third, 1, 0);
}

inline MarketModel<double> sample_trinomial_float() {
  return qhedge::gen_trinomial<double>(4, 2, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1, 0);
}

// One-child chain with constant stock: violates nondegeneracy at every step.
template <class T>
MarketModel<T> constant_chain(int steps) {
  std::vector<qhedge::NodeSpec<T>> specs;
  specs.push_back({"", std::nullopt, T(1)});
  std::string prev;
  for (int t = 1; t <= steps; ++t) {
    std::string id = prev + "M";
    specs.push_back({id, prev, T(1)});
    prev = id;
  }
  MarketModel<T> m{qhedge::FiltrationTree<T>::build(specs, steps), AdaptedProcess<T>{}, T(0),
                   "chain"};
  m.stock = AdaptedProcess<T>::constant(m.tree, T(5));
  return m;
}

inline MarketModel<double> random_binomial(std::mt19937& rng, int max_steps = 6) {
  std::uniform_real_distribution<double> u_dist(1.05, 3.0);
  std::uniform_real_distribution<double> d_dist(0.2, 0.95);
  std::uniform_real_distribution<double> p_dist(0.1, 0.9);
  std::uniform_real_distribution<double> s_dist(0.5, 10.0);
  std::uniform_int_distribution<int> n_dist(1, max_steps);
  std::uniform_int_distribution<int> r_dist(0, 2);
  const int r_pick = r_dist(rng);
  const double rate = r_pick == 0 ? 0.0 : (r_pick == 1 ? 0.1 : 0.25);
  return qhedge::gen_binomial<double>(s_dist(rng), u_dist(rng), d_dist(rng), p_dist(rng),
                                      n_dist(rng), rate);
}

inline MarketModel<double> random_trinomial(std::mt19937& rng, int max_steps = 3) {
  std::uniform_real_distribution<double> u_dist(1.05, 3.0);
  std::uniform_real_distribution<double> d_dist(0.2, 0.95);
  std::uniform_real_distribution<double> w_dist(0.1, 1.0);
  std::uniform_real_distribution<double> s_dist(0.5, 10.0);
  std::uniform_int_distribution<int> n_dist(1, max_steps);
  double a = w_dist(rng), b = w_dist(rng), c = w_dist(rng);
  const double sum = a + b + c;
  // make the branch probabilities sum to one exactly in floating point
  a /= sum;
  b /= sum;
  c = 1.0 - a - b;
  return qhedge::gen_trinomial<double>(s_dist(rng), u_dist(rng), d_dist(rng), a, b, c,
                                       n_dist(rng), 0.0);
}

// Driftless trinomial: with r = 0 the branch probabilities are balanced so
// that E[dS | node] = 0, i.e. p_u (u-1) = p_d (1-d). The discounted stock
// is then a martingale and the sequential-regression strategy is also the
// global least-squares minimizer.
inline MarketModel<double> random_martingale_trinomial(std::mt19937& rng, int max_steps = 3) {
  std::uniform_real_distribution<double> u_dist(1.05, 3.0);
  std::uniform_real_distribution<double> d_dist(0.2, 0.95);
  std::uniform_real_distribution<double> m_dist(0.1, 0.8);
  std::uniform_real_distribution<double> s_dist(0.5, 10.0);
  std::uniform_int_distribution<int> n_dist(1, max_steps);
  const double u = u_dist(rng), d = d_dist(rng), pm = m_dist(rng);
  const double scale = (u - 1) + (1 - d);
  const double pu = (1 - pm) * (1 - d) / scale;
  const double pd = 1.0 - pm - pu;
  return qhedge::gen_trinomial<double>(s_dist(rng), u, d, pu, pm, pd, n_dist(rng), 0.0);
}

inline MarketModel<Rational> random_martingale_trinomial_exact(std::mt19937& rng,
                                                               int max_steps = 3) {
  std::uniform_int_distribution<int> a(1, 8);   // u = 1 + a/8
  std::uniform_int_distribution<int> b(1, 15);  // d = b/16
  std::uniform_int_distribution<int> mw(1, 6);  // p_m = mw/8
  std::uniform_int_distribution<int> s(1, 8);
  std::uniform_int_distribution<int> n(1, max_steps);
  const Rational u = Rational(8 + a(rng), 8), d = Rational(b(rng), 16);
  const Rational pm(mw(rng), 8);
  const Rational scale = (u - Rational(1)) + (Rational(1) - d);
  const Rational pu = (Rational(1) - pm) * (Rational(1) - d) / scale;
  const Rational pd = Rational(1) - pm - pu;
  return qhedge::gen_trinomial<Rational>(Rational(s(rng)), u, d, pu, pm, pd, n(rng), 0);
}

// Rational-parameter models keep exact-mode denominators small.
inline MarketModel<Rational> random_binomial_exact(std::mt19937& rng, int max_steps = 6) {
  std::uniform_int_distribution<int> a(1, 8);    // u = 1 + a/8
  std::uniform_int_distribution<int> b(1, 15);   // d = b/16
  std::uniform_int_distribution<int> c(2, 14);   // p = c/16
  std::uniform_int_distribution<int> s(1, 8);
  std::uniform_int_distribution<int> n(1, max_steps);
  std::uniform_int_distribution<int> r(0, 1);
  return qhedge::gen_binomial<Rational>(Rational(s(rng)), Rational(8 + a(rng), 8),
                                        Rational(b(rng), 16), Rational(c(rng), 16), n(rng),
                                        r(rng) == 0 ? Rational(0) : Rational(1, 4));
}

inline MarketModel<Rational> random_trinomial_exact(std::mt19937& rng, int max_steps = 3) {
  std::uniform_int_distribution<int> a(1, 8);
  std::uniform_int_distribution<int> b(1, 15);
  std::uniform_int_distribution<int> w(1, 6);
  std::uniform_int_distribution<int> s(1, 8);
  std::uniform_int_distribution<int> n(1, max_steps);
  const int wu = w(rng), wm = w(rng), wd = w(rng);
  const Rational total(wu + wm + wd);
  return qhedge::gen_trinomial<Rational>(Rational(s(rng)), Rational(8 + a(rng), 8),
                                         Rational(b(rng), 16), Rational(wu) / total,
                                         Rational(wm) / total, Rational(wd) / total, n(rng),
                                         0);
}

template <class T>
Claim<T> leaf_claim(const MarketModel<T>& m, const std::vector<T>& values) {
  std::map<std::string, T> table;
  std::size_t i = 0;
  for (NodeIndex v : m.tree.leaves()) table[m.tree.node(v).id] = values[i++];
  return qhedge::custom_claim(m, table);
}

inline Claim<double> random_claim(const MarketModel<double>& m, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-5.0, 10.0);
  std::vector<double> values;
  for (std::size_t i = 0; i < m.tree.leaves().size(); ++i) values.push_back(dist(rng));
  return leaf_claim(m, values);
}

inline Claim<Rational> random_claim_exact(const MarketModel<Rational>& m, std::mt19937& rng) {
  std::uniform_int_distribution<int> dist(-16, 40);  // payoff k/4
  std::vector<Rational> values;
  for (std::size_t i = 0; i < m.tree.leaves().size(); ++i)
    values.push_back(Rational(dist(rng), 4));
  return leaf_claim(m, values);
}

template <class T>
AdaptedProcess<T> zero_direction(const MarketModel<T>& m) {
  AdaptedProcess<T> dir(m.tree.size());
  for (NodeIndex v = 0; v < m.tree.size(); ++v)
    if (m.tree.node(v).parent != qhedge::kNoParent) dir.set(v, T(0));
  return dir;
}

// Pure drift direction: dS' identically k on every non-root node.
template <class T>
AdaptedProcess<T> drift_direction(const MarketModel<T>& m, const T& k) {
  AdaptedProcess<T> dir(m.tree.size());
  for (NodeIndex v = 0; v < m.tree.size(); ++v)
    if (m.tree.node(v).parent != qhedge::kNoParent) dir.set(v, k);
  return dir;
}

inline AdaptedProcess<double> random_direction(const MarketModel<double>& m, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  AdaptedProcess<double> dir(m.tree.size());
  for (NodeIndex v = 0; v < m.tree.size(); ++v)
    if (m.tree.node(v).parent != qhedge::kNoParent) dir.set(v, dist(rng));
  return dir;
}

inline AdaptedProcess<Rational> random_direction_exact(const MarketModel<Rational>& m,
                                                       std::mt19937& rng) {
  std::uniform_int_distribution<int> dist(-16, 16);
  AdaptedProcess<Rational> dir(m.tree.size());
  for (NodeIndex v = 0; v < m.tree.size(); ++v)
    if (m.tree.node(v).parent != qhedge::kNoParent) dir.set(v, Rational(dist(rng), 16));
  return dir;
}

template <class T>
T max_theta_gap(const MarketModel<T>& m, const PredictableProcess<T>& a,
                const PredictableProcess<T>& b) {
  T worst(0);
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) {
      const T gap = qhedge::ScalarOps<T>::abs(a.at(v) - b.at(v));
      if (gap > worst) worst = gap;
    }
  return worst;
}

template <class T>
T max_adapted_gap(const MarketModel<T>& m, const AdaptedProcess<T>& a,
                  const AdaptedProcess<T>& b) {
  T worst(0);
  for (NodeIndex v = 0; v < m.tree.size(); ++v) {
    const T gap = qhedge::ScalarOps<T>::abs(a.at(v) - b.at(v));
    if (gap > worst) worst = gap;
  }
  return worst;
}

}  // namespace qhtest

#endif  // QHEDGE_TESTS_FIXTURES_HPP
