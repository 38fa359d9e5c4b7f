#ifndef QHEDGE_REPORT_HPP
#define QHEDGE_REPORT_HPP

#include <sstream>
#include <string>
#include <vector>

#include "qhedge/decompose.hpp"
#include "qhedge/oracle.hpp"
#include "qhedge/perturb.hpp"

namespace qhedge {

// Residuals of the decomposition identities, evaluated from definitions so
// they hold for loaded reports as well as freshly computed ones.
template <class T>
struct Residuals {
  T reconstruction{0};  // max leaf |V_N - V0 - G_N - L_N|
  T martingale{0};      // max node |E[dL | F] |
  T l0{0};              // |L at the root|
  T orthogonality{0};   // max node |E[dL dM | F]|
};

template <class T>
Residuals<T> verify_decomposition(const MarketModel<T>& m, const Claim<T>& claim,
                                  const FSDecomposition<T>& fs) {
  Residuals<T> r;
  const AdaptedProcess<T> g = gains(m, fs.theta);
  for (NodeIndex v : m.tree.leaves()) {
    const T gap =
        ScalarOps<T>::abs(claim.terminal.at(v) - fs.V0 - g.at(v) - fs.L.at(v));
    if (gap > r.reconstruction) r.reconstruction = gap;
  }

  const AdaptedProcess<T> dl = increments(m.tree, fs.L);
  for (int t = 0; t < m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const T gap = ScalarOps<T>::abs(cond_expect(m.tree, dl, v));
      if (gap > r.martingale) r.martingale = gap;
    }
  }
  r.l0 = ScalarOps<T>::abs(fs.L.at(m.tree.root()));
  r.orthogonality = verify_orthogonality(m, fs, doob_decompose(m));
  return r;
}

// Indented text rendering of the tree with one process value per node.
template <class T>
std::string render_tree(const MarketModel<T>& m, const AdaptedProcess<T>& values) {
  std::ostringstream os;
  struct Frame {
    NodeIndex v;
    int depth;
  };
  std::vector<Frame> stack{{m.tree.root(), 0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& n = m.tree.node(f.v);
    for (int i = 0; i < f.depth; ++i) os << "  ";
    os << display_id(n.id) << " = "
       << (values.has(f.v) ? ScalarOps<T>::format(values.at(f.v)) : std::string("-")) << "\n";
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
      stack.push_back({*it, f.depth + 1});
  }
  return os.str();
}

template <class T>
std::string render_tree(const MarketModel<T>& m, const PredictableProcess<T>& values) {
  std::ostringstream os;
  struct Frame {
    NodeIndex v;
    int depth;
  };
  std::vector<Frame> stack{{m.tree.root(), 0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& n = m.tree.node(f.v);
    if (!m.tree.is_leaf(f.v)) {
      for (int i = 0; i < f.depth; ++i) os << "  ";
      os << display_id(n.id) << " = " << ScalarOps<T>::format(values.at(f.v)) << "\n";
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
      stack.push_back({*it, f.depth + 1});
  }
  return os.str();
}

inline const char* kCsvHeader = "eps,quantity,value,abs_error,observed_order\n";

template <class T>
std::string sweep_csv(const SweepReport<T>& report) {
  std::ostringstream os;
  os << kCsvHeader;
  for (const auto& row : report.rows) {
    const std::string eps = ScalarOps<T>::format(row.eps);
    if (!row.feasible) {
      os << eps << ",clipped," << display_id(row.degenerate_node) << ",,\n";
      continue;
    }
    os << eps << ",V0," << ScalarOps<T>::format(row.v0) << ","
       << ScalarOps<T>::format(row.dev_v0) << ",\n";
    os << eps << ",theta_max_dev," << ScalarOps<T>::format(row.dev_theta) << ","
       << ScalarOps<T>::format(row.dev_theta) << ",\n";
    os << eps << ",L_max_dev," << ScalarOps<T>::format(row.dev_l) << ","
       << ScalarOps<T>::format(row.dev_l) << ",\n";
    os << eps << ",objective," << ScalarOps<T>::format(row.objective) << ","
       << ScalarOps<T>::format(ScalarOps<T>::abs(row.objective - report.base_objective))
       << ",\n";
  }
  return os.str();
}

template <class T>
std::string convergence_csv(const ConvergenceReport<T>& report) {
  std::ostringstream os;
  os << kCsvHeader;
  for (const auto& row : report.rows) {
    if (row.clipped) {
      os << ScalarOps<T>::format(row.h) << ",clipped," << display_id(row.degenerate_node)
         << ",,\n";
      continue;
    }
    os << ScalarOps<T>::format(row.h) << "," << row.quantity << ","
       << ScalarOps<T>::format(row.derivative) << "," << ScalarOps<T>::format(row.err_h) << ",";
    if (row.exact) {
      os << "exact";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", row.observed_order);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace qhedge

#endif  // QHEDGE_REPORT_HPP
