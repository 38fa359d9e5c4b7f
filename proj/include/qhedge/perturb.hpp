#ifndef QHEDGE_PERTURB_HPP
#define QHEDGE_PERTURB_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qhedge/decompose.hpp"
#include "qhedge/model.hpp"

namespace qhedge {

/*
 * Linear perturbations of the stock dynamics,
 *
 *   dS_n(eps) = dS_n + eps * dS'_n,
 *
 * where the direction dS' may be given nodewise or through the
 * (lambda', sigma', sigma'', dW_perp) parametrization against the base
 * model's noise dW. Time step is fixed at 1.
 */

template <class T>
struct SemimartingaleParams {
  PredictableProcess<T> lambda;  // drift per step
  PredictableProcess<T> sigma;   // conditional standard deviation of dS
  AdaptedProcess<T> noise;       // dW, normalized increments; 0 where sigma = 0
};

template <class T>
struct PerturbationParams {
  PredictableProcess<T> lambda_prime;
  PredictableProcess<T> sigma_prime;   // loading on the base noise dW
  PredictableProcess<T> sigma_dprime;  // loading on the orthogonal noise
  AdaptedProcess<T> noise_perp;        // dW_perp; 0 where sigma'' = 0
};

template <class T>
struct PerturbationSpec {
  std::optional<AdaptedProcess<T>> direction;  // dS' per non-root node
  std::optional<PerturbationParams<T>> params;
};

// lambda_n = E[dS_n | F_{n-1}], sigma_n = sqrt(Var(dS_n | F_{n-1})),
// dW_n = (dS_n - lambda_n)/sigma_n where sigma_n > 0, else 0.
template <class T>
SemimartingaleParams<T> extract_semimartingale_params(const MarketModel<T>& m) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  SemimartingaleParams<T> out{PredictableProcess<T>(m.tree.size()),
                              PredictableProcess<T>(m.tree.size()),
                              AdaptedProcess<T>(m.tree.size())};
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T mean = cond_expect(m.tree, ds, v);
      const T sig = ScalarOps<T>::sqrt(cond_var(m.tree, ds, v));
      out.lambda.set(v, mean);
      out.sigma.set(v, sig);
      for (NodeIndex c : m.tree.node(v).children)
        out.noise.set(c, sig > T(0) ? (ds.at(c) - mean) / sig : T(0));
    }
  }
  return out;
}

// Splits a raw direction dS' into drift, a loading on the base noise, and
// an orthogonal residual noise: dS' = lambda' + sigma' dW + sigma'' dW_perp.
template <class T>
PerturbationParams<T> decompose_perturbation(const MarketModel<T>& m,
                                             const AdaptedProcess<T>& direction,
                                             const SemimartingaleParams<T>& base) {
  PerturbationParams<T> out{PredictableProcess<T>(m.tree.size()),
                            PredictableProcess<T>(m.tree.size()),
                            PredictableProcess<T>(m.tree.size()),
                            AdaptedProcess<T>(m.tree.size())};
  AdaptedProcess<T> resid(m.tree.size());
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T lam = cond_expect(m.tree, direction, v);
      const T sig_p = cond_cov(m.tree, base.noise, direction, v);
      for (NodeIndex c : m.tree.node(v).children)
        resid.set(c, direction.at(c) - sig_p * base.noise.at(c));
      const T sig_pp = ScalarOps<T>::sqrt(cond_var(m.tree, resid, v));
      const T resid_mean = cond_expect(m.tree, resid, v);
      out.lambda_prime.set(v, lam);
      out.sigma_prime.set(v, sig_p);
      out.sigma_dprime.set(v, sig_pp);
      for (NodeIndex c : m.tree.node(v).children)
        out.noise_perp.set(c, sig_pp > T(0) ? (resid.at(c) - resid_mean) / sig_pp : T(0));
    }
  }
  return out;
}

template <class T>
AdaptedProcess<T> compose_direction(const FiltrationTree<T>& tree,
                                    const PerturbationParams<T>& params,
                                    const AdaptedProcess<T>& base_noise) {
  AdaptedProcess<T> dir(tree.size());
  for (int t = 0; t < tree.horizon(); ++t) {
    for (NodeIndex v : tree.level(t)) {
      for (NodeIndex c : tree.node(v).children)
        dir.set(c, params.lambda_prime.at(v) + params.sigma_prime.at(v) * base_noise.at(c) +
                       params.sigma_dprime.at(v) * params.noise_perp.at(c));
    }
  }
  return dir;
}

// Nodewise dS' of a spec, composing the parametrized form against the base
// model's noise when no raw direction was given.
template <class T>
AdaptedProcess<T> materialize_direction(const MarketModel<T>& m, const PerturbationSpec<T>& spec) {
  if (spec.direction) return *spec.direction;
  if (!spec.params) throw InputError("perturbation spec has neither dSprime nor params");
  return compose_direction(m.tree, *spec.params, extract_semimartingale_params(m).noise);
}

// S(eps) with increments dS + eps*dS', same start value; the result must
// still be nondegenerate, otherwise DegenerateNode identifies the node.
template <class T>
MarketModel<T> apply_perturbation(const MarketModel<T>& m, const AdaptedProcess<T>& direction,
                                  const T& eps) {
  MarketModel<T> out{m.tree, AdaptedProcess<T>(m.tree.size()), m.rate, m.label};
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  out.stock.set(m.tree.root(), m.stock.at(m.tree.root()));
  for (int t = 1; t <= m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const NodeIndex parent = m.tree.node(v).parent;
      out.stock.set(v, out.stock.at(parent) + ds.at(v) + eps * direction.at(v));
    }
  }
  const NdReport<T> nd = check_nd(out);
  if (!nd.satisfied)
    throw DegenerateNode(nd.degenerate_nodes.front(),
                         "perturbed model degenerate at node '" +
                             display_id(nd.degenerate_nodes.front()) + "'");
  return out;
}

template <class T>
MarketModel<T> apply_perturbation(const MarketModel<T>& m, const PerturbationSpec<T>& spec,
                                  const T& eps) {
  return apply_perturbation(m, materialize_direction(m, spec), eps);
}

/*
 * First-order correction to the optimal strategy, backward in n:
 *
 *   theta'_n = [ Cov(A_n, dS'_n) - Cov(B_n, dS_n) ] / Var(dS_n)
 *              - 2 Cov(A_n, dS_n) Cov(dS_n, dS'_n) / Var(dS_n)^2
 *
 * with A_n = V_N - sum_{j>n} theta_j dS_j the base residual and
 * B_n = sum_{j>n} (theta'_j dS_j + theta_j dS'_j) the mixed term; at n = N
 * both sums are empty and the formula collapses to the terminal case. As
 * in the base regression, only the conditional projections of A and B
 * enter, so both are carried as node processes across the sweep.
 */
namespace detail {

template <class T>
PredictableProcess<T> theta_prime_from_base(const MarketModel<T>& m,
                                            const RegressionSweep<T>& base,
                                            const AdaptedProcess<T>& direction,
                                            DegeneratePolicy policy) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  const AdaptedProcess<T>& resid = base.projected_residual;  // E[A_n | F_n]

  PredictableProcess<T> out(m.tree.size());
  AdaptedProcess<T> mixed(m.tree.size());  // E[B_n | F_n]
  for (NodeIndex v : m.tree.leaves()) mixed.set(v, T(0));

  for (int t = m.tree.horizon() - 1; t >= 0; --t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T var = cond_var(m.tree, ds, v);
      T tp(0);
      if (var > T(0)) {
        const T cov_resid_dir = cond_cov(m.tree, resid, direction, v);
        const T cov_mixed_ds = cond_cov(m.tree, mixed, ds, v);
        const T cov_resid_ds = cond_cov(m.tree, resid, ds, v);
        const T cov_ds_dir = cond_cov(m.tree, ds, direction, v);
        tp = (cov_resid_dir - cov_mixed_ds) / var -
             T(2) * cov_resid_ds * cov_ds_dir / (var * var);
      } else if (policy == DegeneratePolicy::kStrict) {
        throw DegenerateNode(m.tree.node(v).id,
                             "zero conditional variance of stock increment at node '" +
                                 display_id(m.tree.node(v).id) + "'");
      }
      out.set(v, tp);
      mixed.set(v, cond_expect(m.tree, mixed, v) + tp * cond_expect(m.tree, ds, v) +
                       base.theta.at(v) * cond_expect(m.tree, direction, v));
    }
  }
  return out;
}

}  // namespace detail

template <class T>
PredictableProcess<T> theta_prime(const MarketModel<T>& m, const Claim<T>& claim,
                                  const AdaptedProcess<T>& direction,
                                  DegeneratePolicy policy = DegeneratePolicy::kStrict) {
  return detail::theta_prime_from_base(m, detail::regression_sweep(m, claim, policy), direction,
                                       policy);
}

template <class T>
PredictableProcess<T> theta_prime(const MarketModel<T>& m, const Claim<T>& claim,
                                  const PerturbationSpec<T>& spec,
                                  DegeneratePolicy policy = DegeneratePolicy::kStrict) {
  return theta_prime(m, claim, materialize_direction(m, spec), policy);
}

template <class T>
struct AsymptoticExpansion {
  PredictableProcess<T> theta_prime;
  T V0_prime{0};
  AdaptedProcess<T> L_prime;
  AdaptedProcess<T> gains_prime;  // derivative of the running gains term
};

// Derivative of the gains process along the perturbation:
// g'_n = sum_{j<=n} (theta_j dS'_j + theta'_j dS_j).
template <class T>
AdaptedProcess<T> gains_prime_process(const MarketModel<T>& m,
                                      const PredictableProcess<T>& theta0,
                                      const PredictableProcess<T>& theta_p,
                                      const AdaptedProcess<T>& direction) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  AdaptedProcess<T> g(m.tree.size());
  g.set(m.tree.root(), T(0));
  for (int t = 1; t <= m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const NodeIndex parent = m.tree.node(v).parent;
      g.set(v, g.at(parent) + theta0.at(parent) * direction.at(v) +
                   theta_p.at(parent) * ds.at(v));
    }
  }
  return g;
}

// L' from the combined double-centered form,
// L'_n = -E[ g'_N - E[g'_N] | F_n ].
template <class T>
AsymptoticExpansion<T> asymptotic_expansion(const MarketModel<T>& m, const Claim<T>& claim,
                                            const AdaptedProcess<T>& direction,
                                            DegeneratePolicy policy = DegeneratePolicy::kStrict) {
  const auto base = detail::regression_sweep(m, claim, policy);
  AsymptoticExpansion<T> out;
  out.theta_prime = detail::theta_prime_from_base(m, base, direction, policy);
  out.gains_prime = gains_prime_process(m, base.theta, out.theta_prime, direction);

  const T mean_gp = expectation(m.tree, out.gains_prime, m.tree.horizon());
  out.V0_prime = -mean_gp;

  const AdaptedProcess<T> projected = martingale_extend(m.tree, out.gains_prime);
  out.L_prime = AdaptedProcess<T>(m.tree.size());
  for (NodeIndex v = 0; v < m.tree.size(); ++v) out.L_prime.set(v, mean_gp - projected.at(v));
  return out;
}

template <class T>
AsymptoticExpansion<T> asymptotic_expansion(const MarketModel<T>& m, const Claim<T>& claim,
                                            const PerturbationSpec<T>& spec,
                                            DegeneratePolicy policy = DegeneratePolicy::kStrict) {
  return asymptotic_expansion(m, claim, materialize_direction(m, spec), policy);
}

// L' assembled from the two separately centered terms; algebraically equal
// to the combined form, kept as a transcription cross-check.
template <class T>
AdaptedProcess<T> l_prime_two_term(const MarketModel<T>& m, const PredictableProcess<T>& theta0,
                                   const PredictableProcess<T>& theta_p,
                                   const AdaptedProcess<T>& direction) {
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  AdaptedProcess<T> ga(m.tree.size()), gb(m.tree.size());
  ga.set(m.tree.root(), T(0));
  gb.set(m.tree.root(), T(0));
  for (int t = 1; t <= m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const NodeIndex parent = m.tree.node(v).parent;
      ga.set(v, ga.at(parent) + theta_p.at(parent) * ds.at(v));
      gb.set(v, gb.at(parent) + theta0.at(parent) * direction.at(v));
    }
  }
  const T mean_a = expectation(m.tree, ga, m.tree.horizon());
  const T mean_b = expectation(m.tree, gb, m.tree.horizon());
  const AdaptedProcess<T> pa = martingale_extend(m.tree, ga);
  const AdaptedProcess<T> pb = martingale_extend(m.tree, gb);
  AdaptedProcess<T> out(m.tree.size());
  for (NodeIndex v = 0; v < m.tree.size(); ++v)
    out.set(v, (mean_a - pa.at(v)) + (mean_b - pb.at(v)));
  return out;
}

template <class T>
struct SweepRow {
  T eps{0};
  bool feasible = false;
  std::string degenerate_node;  // set when this eps was clipped
  T v0{0};
  T objective{0};
  T dev_v0{0};
  T dev_theta{0};  // max nodewise |theta(eps) - theta(0)|
  T dev_l{0};      // max nodewise |L(eps) - L(0)|
};

template <class T>
struct SweepReport {
  T base_v0{0};
  T base_objective{0};
  std::vector<SweepRow<T>> rows;
  std::optional<T> max_feasible_abs_eps;  // largest |eps| in the grid that kept ND
};

// Recomputes the decomposition at every eps of the grid and tabulates the
// deviations from the base; rows whose eps breaks nondegeneracy are
// reported as clipped instead of failing the sweep.
template <class T>
SweepReport<T> stability_sweep(const MarketModel<T>& m, const Claim<T>& claim,
                               const AdaptedProcess<T>& direction, const std::vector<T>& grid) {
  const FSDecomposition<T> base = fs_decompose(m, claim);
  SweepReport<T> report;
  report.base_v0 = base.V0;
  report.base_objective = base.objective;

  for (const T& eps : grid) {
    SweepRow<T> row;
    row.eps = eps;
    try {
      const MarketModel<T> pm = apply_perturbation(m, direction, eps);
      const FSDecomposition<T> fs = fs_decompose(pm, claim);
      row.feasible = true;
      row.v0 = fs.V0;
      row.objective = fs.objective;
      row.dev_v0 = ScalarOps<T>::abs(fs.V0 - base.V0);
      for (int t = 0; t < m.tree.horizon(); ++t)
        for (NodeIndex v : m.tree.level(t)) {
          const T gap = ScalarOps<T>::abs(fs.theta.at(v) - base.theta.at(v));
          if (gap > row.dev_theta) row.dev_theta = gap;
        }
      for (NodeIndex v = 0; v < m.tree.size(); ++v) {
        const T gap = ScalarOps<T>::abs(fs.L.at(v) - base.L.at(v));
        if (gap > row.dev_l) row.dev_l = gap;
      }
      const T abs_eps = ScalarOps<T>::abs(eps);
      if (!report.max_feasible_abs_eps || abs_eps > *report.max_feasible_abs_eps)
        report.max_feasible_abs_eps = abs_eps;
    } catch (const DegenerateNode& e) {
      row.degenerate_node = e.node_id();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

template <class T>
SweepReport<T> stability_sweep(const MarketModel<T>& m, const Claim<T>& claim,
                               const PerturbationSpec<T>& spec, const std::vector<T>& grid) {
  return stability_sweep(m, claim, materialize_direction(m, spec), grid);
}

// True when every deviation column is non-increasing as |eps| decreases,
// separately along the positive and the negative half of the grid.
template <class T>
bool deviations_shrink_monotonically(const SweepReport<T>& report) {
  auto check_half = [&](bool positive) {
    std::vector<const SweepRow<T>*> rows;
    for (const auto& row : report.rows)
      if (row.feasible && (positive ? row.eps > T(0) : row.eps < T(0))) rows.push_back(&row);
    std::sort(rows.begin(), rows.end(), [](const SweepRow<T>* a, const SweepRow<T>* b) {
      return ScalarOps<T>::abs(a->eps) > ScalarOps<T>::abs(b->eps);
    });
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      if (rows[i + 1]->dev_v0 > rows[i]->dev_v0) return false;
      if (rows[i + 1]->dev_theta > rows[i]->dev_theta) return false;
      if (rows[i + 1]->dev_l > rows[i]->dev_l) return false;
    }
    return true;
  };
  return check_half(true) && check_half(false);
}

enum class DiffScheme { kCentered, kOneSided };

template <class T>
struct ConvergenceRow {
  T h{0};
  std::string quantity;  // "V0", "theta[id]", "L[id]"
  T derivative{0};
  T err_h{0};
  T err_half{0};
  bool exact = false;    // both errors at the noise floor; no order to read
  bool clipped = false;  // this h made the model degenerate
  std::string degenerate_node;
  double observed_order = 0.0;
};

template <class T>
struct ConvergenceReport {
  std::vector<ConvergenceRow<T>> rows;
};

namespace detail {

template <class T>
struct QuantityVector {
  std::vector<T> values;  // V0, thetas (level order), L (index order)
};

template <class T>
QuantityVector<T> flatten(const MarketModel<T>& m, const FSDecomposition<T>& fs) {
  QuantityVector<T> q;
  q.values.push_back(fs.V0);
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) q.values.push_back(fs.theta.at(v));
  for (NodeIndex v = 0; v < m.tree.size(); ++v) q.values.push_back(fs.L.at(v));
  return q;
}

template <class T>
std::vector<std::string> quantity_labels(const MarketModel<T>& m) {
  std::vector<std::string> labels{"V0"};
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) labels.push_back("theta[" + m.tree.node(v).id + "]");
  for (NodeIndex v = 0; v < m.tree.size(); ++v) labels.push_back("L[" + m.tree.node(v).id + "]");
  return labels;
}

}  // namespace detail

// Finite-difference validation of the first-order expansion. For each h the
// difference quotient of the decomposition at +-h (centered) or at h
// (one-sided) is compared against the closed-form derivative, and the pair
// (h, h/2) yields the observed convergence order; ~2 for centered, ~1 for
// one-sided. Quantities whose errors sit at the noise floor are flagged
// exact and carry no order.
template <class T>
ConvergenceReport<T> finite_diff_check(const MarketModel<T>& m, const Claim<T>& claim,
                                       const AdaptedProcess<T>& direction,
                                       const std::vector<T>& step_sizes,
                                       DiffScheme scheme = DiffScheme::kCentered) {
  const AsymptoticExpansion<T> exp = asymptotic_expansion(m, claim, direction);
  const FSDecomposition<T> base = fs_decompose(m, claim);
  const auto base_q = detail::flatten(m, base);
  const auto labels = detail::quantity_labels(m);

  detail::QuantityVector<T> deriv;
  deriv.values.push_back(exp.V0_prime);
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) deriv.values.push_back(exp.theta_prime.at(v));
  for (NodeIndex v = 0; v < m.tree.size(); ++v) deriv.values.push_back(exp.L_prime.at(v));

  auto quotient_at = [&](const T& h) {
    std::vector<T> out;
    if (scheme == DiffScheme::kCentered) {
      const auto plus = detail::flatten(m, fs_decompose(apply_perturbation(m, direction, h), claim));
      const auto minus =
          detail::flatten(m, fs_decompose(apply_perturbation(m, direction, -h), claim));
      for (std::size_t i = 0; i < plus.values.size(); ++i)
        out.push_back((plus.values[i] - minus.values[i]) / (T(2) * h));
    } else {
      const auto plus = detail::flatten(m, fs_decompose(apply_perturbation(m, direction, h), claim));
      for (std::size_t i = 0; i < plus.values.size(); ++i)
        out.push_back((plus.values[i] - base_q.values[i]) / h);
    }
    return out;
  };

  ConvergenceReport<T> report;
  for (const T& h : step_sizes) {
    const T half = h / T(2);
    std::vector<T> fd_h, fd_half;
    try {
      fd_h = quotient_at(h);
      fd_half = quotient_at(half);
    } catch (const DegenerateNode& e) {
      ConvergenceRow<T> row;
      row.h = h;
      row.quantity = "clipped";
      row.clipped = true;
      row.degenerate_node = e.node_id();
      report.rows.push_back(std::move(row));
      continue;
    }
    for (std::size_t i = 0; i < fd_h.size(); ++i) {
      ConvergenceRow<T> row;
      row.h = h;
      row.quantity = labels[i];
      row.derivative = deriv.values[i];
      row.err_h = ScalarOps<T>::abs(fd_h[i] - deriv.values[i]);
      row.err_half = ScalarOps<T>::abs(fd_half[i] - deriv.values[i]);
      // in exact arithmetic "exact" means zero error; in floating point it
      // means below the cancellation noise of the difference quotient
      const double floor =
          ScalarOps<T>::kExact
              ? 0.0
              : 1e-10 * (1.0 + std::fabs(ScalarOps<T>::to_double(deriv.values[i])));
      const double eh = ScalarOps<T>::to_double(row.err_h);
      const double ehalf = ScalarOps<T>::to_double(row.err_half);
      if (eh <= floor && ehalf <= floor) {
        row.exact = true;
      } else if (ehalf > 0.0) {
        row.observed_order = std::log2(eh / ehalf);
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

template <class T>
ConvergenceReport<T> finite_diff_check(const MarketModel<T>& m, const Claim<T>& claim,
                                       const PerturbationSpec<T>& spec,
                                       const std::vector<T>& step_sizes,
                                       DiffScheme scheme = DiffScheme::kCentered) {
  return finite_diff_check(m, claim, materialize_direction(m, spec), step_sizes, scheme);
}

}  // namespace qhedge

#endif  // QHEDGE_PERTURB_HPP
