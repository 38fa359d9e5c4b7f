#ifndef QHEDGE_ORACLE_HPP
#define QHEDGE_ORACLE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "qhedge/decompose.hpp"
#include "qhedge/model.hpp"

namespace qhedge {

/*
 * Ground-truth minimizer of E[(V_N - c - G_N(theta))^2] by dense normal
 * equations. The strategy space is spanned by one regressor per non-leaf
 * node v — the indicator of v times the next stock increment — plus the
 * constant; predictability is encoded by construction, so the quadratic
 * program is an ordinary least-squares problem over the leaves.
 */
template <class T>
struct LinearSystem {
  std::size_t n = 0;
  std::vector<T> a;    // n x n, row-major, symmetric PSD Gram matrix
  std::vector<T> rhs;  // E[V_N * r_i]
  std::vector<std::string> labels;  // "c" then node ids, in assembly order

  T& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const T& at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

template <class T>
LinearSystem<T> assemble_normal_equations(const MarketModel<T>& m, const Claim<T>& claim) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);

  // unknown 0: constant; unknown k>0: theta at the k-th non-leaf node
  std::vector<NodeIndex> regressors;
  std::vector<std::size_t> unknown_of_node(m.tree.size(), 0);
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      unknown_of_node[v] = regressors.size() + 1;
      regressors.push_back(v);
    }
  }

  LinearSystem<T> sys;
  sys.n = regressors.size() + 1;
  sys.a.assign(sys.n * sys.n, T(0));
  sys.rhs.assign(sys.n, T(0));
  sys.labels.push_back("c");
  for (NodeIndex v : regressors) sys.labels.push_back(m.tree.node(v).id);

  // A leaf activates the constant and one regressor per ancestor; values
  // along the path give the sparse regressor row for that leaf.
  std::vector<std::size_t> active;
  std::vector<T> value;
  for (NodeIndex leaf : m.tree.leaves()) {
    active.clear();
    value.clear();
    active.push_back(0);
    value.push_back(T(1));
    for (NodeIndex v = leaf; m.tree.node(v).parent != kNoParent; v = m.tree.node(v).parent) {
      active.push_back(unknown_of_node[m.tree.node(v).parent]);
      value.push_back(ds.at(v));
    }
    const T& p = m.tree.path_prob(leaf);
    const T& payoff = claim.terminal.at(leaf);
    for (std::size_t i = 0; i < active.size(); ++i) {
      sys.rhs[active[i]] += p * payoff * value[i];
      for (std::size_t j = 0; j < active.size(); ++j)
        sys.a[active[i] * sys.n + active[j]] += p * value[i] * value[j];
    }
  }
  return sys;
}

template <class T>
struct SolveResult {
  std::vector<T> x;
  T residual_inf{0};  // max-norm of Ax - b, recomputed after the solve
  std::vector<T> pivots;  // rational mode: leading principal minors (Bareiss pivots)
};

namespace detail {

// Fraction-free (Bareiss) elimination; divisions stay exact, and the k-th
// pivot equals the k-th leading principal minor when no rows were swapped.
template <class T>
SolveResult<T> solve_exact(const LinearSystem<T>& sys) {
  const std::size_t n = sys.n;
  std::vector<T> mat(n * (n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) mat[i * (n + 1) + j] = sys.at(i, j);
    mat[i * (n + 1) + n] = sys.rhs[i];
  }
  auto cell = [&](std::size_t i, std::size_t j) -> T& { return mat[i * (n + 1) + j]; };

  SolveResult<T> out;
  T prev(1);
  for (std::size_t k = 0; k < n; ++k) {
    if (cell(k, k) == T(0)) {
      std::size_t swap_row = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (cell(i, k) != T(0)) {
          swap_row = i;
          break;
        }
      if (swap_row == k) throw SingularSystem("normal equations are rank deficient");
      for (std::size_t j = k; j <= n; ++j) std::swap(cell(k, j), cell(swap_row, j));
    }
    const T pivot = cell(k, k);
    out.pivots.push_back(pivot);
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j <= n; ++j)
        cell(i, j) = (cell(i, j) * pivot - cell(i, k) * cell(k, j)) / prev;
      cell(i, k) = T(0);
    }
    prev = pivot;
  }

  out.x.assign(n, T(0));
  for (std::size_t i = n; i-- > 0;) {
    T acc = cell(i, n);
    for (std::size_t j = i + 1; j < n; ++j) acc -= cell(i, j) * out.x[j];
    out.x[i] = acc / cell(i, i);
  }
  return out;
}

inline SolveResult<double> solve_float(const LinearSystem<double>& sys) {
  const std::size_t n = sys.n;
  std::vector<double> mat(n * (n + 1));
  double scale = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      mat[i * (n + 1) + j] = sys.at(i, j);
      scale = std::max(scale, std::fabs(sys.at(i, j)));
    }
    mat[i * (n + 1) + n] = sys.rhs[i];
  }
  auto cell = [&](std::size_t i, std::size_t j) -> double& { return mat[i * (n + 1) + j]; };
  const double tiny = 1e-14 * std::max(scale, 1.0);

  SolveResult<double> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(cell(i, k)) > std::fabs(cell(piv, k))) piv = i;
    if (std::fabs(cell(piv, k)) <= tiny)
      throw SingularSystem("normal equations are numerically rank deficient");
    if (piv != k)
      for (std::size_t j = k; j <= n; ++j) std::swap(cell(k, j), cell(piv, j));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = cell(i, k) / cell(k, k);
      for (std::size_t j = k; j <= n; ++j) cell(i, j) -= f * cell(k, j);
    }
  }
  out.x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = cell(i, n);
    for (std::size_t j = i + 1; j < n; ++j) acc -= cell(i, j) * out.x[j];
    out.x[i] = acc / cell(i, i);
  }
  return out;
}

}  // namespace detail

template <class T>
SolveResult<T> solve_spd(const LinearSystem<T>& sys) {
  SolveResult<T> out;
  if constexpr (ScalarOps<T>::kExact) {
    out = detail::solve_exact(sys);
  } else {
    out = detail::solve_float(sys);
  }
  for (std::size_t i = 0; i < sys.n; ++i) {
    T acc = -sys.rhs[i];
    for (std::size_t j = 0; j < sys.n; ++j) acc += sys.at(i, j) * out.x[j];
    const T gap = ScalarOps<T>::abs(acc);
    if (gap > out.residual_inf) out.residual_inf = gap;
  }
  return out;
}

template <class T>
struct BruteForceResult {
  T c{0};
  PredictableProcess<T> theta;
  T objective{0};
};

inline constexpr std::size_t kBruteForceGuard = 2000;

template <class T>
BruteForceResult<T> brute_force_fs(const MarketModel<T>& m, const Claim<T>& claim) {
  const std::size_t unknowns = 1 + (m.tree.size() - m.tree.leaves().size());
  if (unknowns > kBruteForceGuard)
    throw TooLarge("normal equations would have " + std::to_string(unknowns) +
                   " unknowns (guard is " + std::to_string(kBruteForceGuard) + ")");
  LinearSystem<T> sys = assemble_normal_equations(m, claim);
  const SolveResult<T> sol = solve_spd(sys);

  BruteForceResult<T> out{sol.x[0], PredictableProcess<T>(m.tree.size()), T(0)};
  std::size_t k = 1;
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) out.theta.set(v, sol.x[k++]);
  out.objective = objective(m, claim, out.c, out.theta);
  return out;
}

}  // namespace qhedge

#endif  // QHEDGE_ORACLE_HPP
