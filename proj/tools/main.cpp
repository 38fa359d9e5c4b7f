// Command-line front end: model generation, decomposition, verification,
// perturbation sweeps and first-order asymptotics on filtration trees.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 violated mathematical
// precondition (degenerate node, singular system), 3 verification failure.

#include <CLI11.hpp>

#include <cctype>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qhedge/qhedge.hpp"

namespace {

using qhedge::Json;

struct Options {
  std::string mode = "float";  // "exact" | "float"
  double tolerance = 1e-10;
  bool pseudo = false;

  // gen
  std::string kind;
  std::string s0, u, d, p = "0.5", pu, pm = "1/3", pd, rate = "0";
  int steps = 1;
  std::string out;

  // model/claim
  std::string model_path;
  std::string claim_kind;  // "call" | "put"
  std::string strike = "0";
  std::string claim_file;
  std::string report_path;

  // perturbation
  std::string perturbation_path;
  std::string eps_grid = "0.1,0.01,0.001";
  bool symmetric = false;
  std::string fd_grid = "1e-3";
  std::string scheme = "centered";
  std::string csv_path;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <class T>
std::vector<T> parse_grid(const std::string& csv, bool symmetric) {
  std::vector<T> grid;
  for (const auto& tok : split_list(csv)) {
    const T v = qhedge::ScalarOps<T>::parse(tok);
    grid.push_back(v);
    if (symmetric && v != T(0)) grid.push_back(-v);
  }
  return grid;
}

template <class T>
qhedge::Claim<T> load_claim(const qhedge::MarketModel<T>& m, const Options& opt,
                            const Json& model_json) {
  using namespace qhedge;
  if (!opt.claim_kind.empty()) {
    const T strike = ScalarOps<T>::parse(opt.strike);
    return payoff_claim(m, opt.claim_kind == "call" ? ClaimKind::kCall : ClaimKind::kPut, strike);
  }
  if (!opt.claim_file.empty()) return claim_from_json(m, parse_json_file(opt.claim_file));
  if (model_json.contains("claim")) return claim_from_json(m, model_json);
  throw qhedge::InputError("no claim given: use --claim call|put --strike K, --claim-file, "
                           "or a claim block in the model file");
}

template <class T>
Json provenance(const qhedge::MarketModel<T>& m, const Options& opt, const char* command) {
  Json j;
  j["command"] = command;
  j["mode"] = opt.mode;
  j["model_hash"] = qhedge::model_hash(m);
  if (!m.label.empty()) j["label"] = m.label;
  return j;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    qhedge::write_text_file(path, text);
  }
}

template <class T>
int cmd_gen(const Options& opt) {
  using namespace qhedge;
  auto num = [](const std::string& s) { return ScalarOps<T>::parse(s); };

  MarketModel<T> model;
  Json gen;
  gen["kind"] = opt.kind;
  gen["s0"] = opt.s0;
  gen["u"] = opt.u;
  gen["d"] = opt.d;
  gen["steps"] = opt.steps;
  gen["rate"] = opt.rate;
  if (opt.kind == "binomial") {
    gen["p"] = opt.p;
    model = gen_binomial(num(opt.s0), num(opt.u), num(opt.d), num(opt.p), opt.steps,
                         num(opt.rate));
  } else if (opt.kind == "trinomial") {
    // --p doubles as the up probability; the down probability defaults to
    // the remainder
    const T p_u = num(opt.pu.empty() ? opt.p : opt.pu);
    const T p_m = num(opt.pm);
    const T p_d = opt.pd.empty() ? T(1) - p_u - p_m : num(opt.pd);
    gen["p_u"] = ScalarOps<T>::format(p_u);
    gen["p_m"] = ScalarOps<T>::format(p_m);
    gen["p_d"] = ScalarOps<T>::format(p_d);
    model = gen_trinomial(num(opt.s0), num(opt.u), num(opt.d), p_u, p_m, p_d, opt.steps,
                          num(opt.rate));
  } else {
    throw InputError("unknown generator kind '" + opt.kind + "'");
  }

  emit(opt.out, model_to_json(model, gen).dump(2) + "\n");
  std::cerr << "generated " << opt.kind << " model: " << model.tree.size() << " nodes, "
            << model.tree.leaves().size() << " leaves, horizon " << model.tree.horizon()
            << "\n";
  return 0;
}

template <class T>
int cmd_decompose(const Options& opt) {
  using namespace qhedge;
  const Json mj = parse_json_file(opt.model_path);
  const MarketModel<T> m = model_from_json<T>(mj);
  const Claim<T> claim = load_claim(m, opt, mj);
  const auto policy = opt.pseudo ? DegeneratePolicy::kPseudo : DegeneratePolicy::kStrict;

  const FSDecomposition<T> fs = fs_decompose(m, claim, policy);
  const Residuals<T> res = verify_decomposition(m, claim, fs);

  std::cout << "V0 = " << ScalarOps<T>::format(fs.V0) << "\n";
  std::cout << "objective = " << ScalarOps<T>::format(fs.objective) << "\n";
  std::cout << "theta:\n" << render_tree(m, fs.theta);
  std::cout << "L:\n" << render_tree(m, fs.L);

  if (!opt.out.empty()) {
    Json j;
    j["provenance"] = provenance(m, opt, "decompose");
    Json d = decomposition_to_json(m, fs);
    for (auto it = d.begin(); it != d.end(); ++it) j[it.key()] = it.value();
    Json r;
    r["reconstruction"] = scalar_to_json(res.reconstruction);
    r["martingale"] = scalar_to_json(res.martingale);
    r["L0"] = scalar_to_json(res.l0);
    r["orthogonality"] = scalar_to_json(res.orthogonality);
    j["residuals"] = std::move(r);
    emit(opt.out, j.dump(2) + "\n");
  }
  return 0;
}

template <class T>
int cmd_verify(const Options& opt) {
  using namespace qhedge;
  const Json mj = parse_json_file(opt.model_path);
  const MarketModel<T> m = model_from_json<T>(mj);
  const Claim<T> claim = load_claim(m, opt, mj);

  FSDecomposition<T> fs;
  if (!opt.report_path.empty()) {
    fs = decomposition_from_json(m, parse_json_file(opt.report_path));
  } else {
    fs = fs_decompose(m, claim);
  }

  bool ok = true;
  auto check = [&](const std::string& name, const T& residual) {
    const double r = ScalarOps<T>::to_double(ScalarOps<T>::abs(residual));
    const bool pass = r <= opt.tolerance;
    ok = ok && pass;
    std::cout << name << ": " << ScalarOps<T>::format(residual) << (pass ? "" : "  [FAIL]")
              << "\n";
  };

  const Residuals<T> res = verify_decomposition(m, claim, fs);
  check("reconstruction residual", res.reconstruction);
  check("martingale residual", res.martingale);
  check("L0 residual", res.l0);
  check("orthogonality residual", res.orthogonality);

  // The decomposition strategy coincides with the global least-squares
  // minimizer on complete, driftless, or one-step markets. Outside that
  // regime the two genuinely differ, so only the ordering is gated and the
  // gaps are reported as information.
  const AdaptedProcess<T> ds = increments(m.tree, m.stock);
  bool driftless = true;
  for (int t = 0; t < m.tree.horizon() && driftless; ++t)
    for (NodeIndex v : m.tree.level(t)) {
      const double drift = ScalarOps<T>::to_double(ScalarOps<T>::abs(cond_expect(m.tree, ds, v)));
      if (drift > opt.tolerance) {
        driftless = false;
        break;
      }
    }
  const bool complete = check_complete(m);
  const bool equality_regime = complete || driftless || m.tree.horizon() <= 1;

  const BruteForceResult<T> oracle = brute_force_fs(m, claim);
  check("objective above least-squares optimum", [&] {
    const T excess = oracle.objective - fs.objective;
    return excess > T(0) ? excess : T(0);
  }());
  T theta_gap(0);
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) {
      const T gap = ScalarOps<T>::abs(fs.theta.at(v) - oracle.theta.at(v));
      if (gap > theta_gap) theta_gap = gap;
    }
  if (equality_regime) {
    check("oracle V0 gap", fs.V0 - oracle.c);
    check("oracle theta gap", theta_gap);
    check("oracle objective gap", fs.objective - oracle.objective);
  } else {
    std::cout << "oracle V0 gap: " << ScalarOps<T>::format(fs.V0 - oracle.c)
              << "  [not gated: drifted incomplete market]\n";
    std::cout << "oracle theta gap: " << ScalarOps<T>::format(theta_gap)
              << "  [not gated: drifted incomplete market]\n";
    std::cout << "oracle objective excess: "
              << ScalarOps<T>::format(fs.objective - oracle.objective)
              << "  [not gated: drifted incomplete market]\n";
  }

  bool binomial = true;
  for (int t = 0; t < m.tree.horizon() && binomial; ++t)
    for (NodeIndex v : m.tree.level(t))
      if (m.tree.node(v).children.size() != 2) {
        binomial = false;
        break;
      }
  if (binomial && complete) {
    check("delta-hedge equivalence", verify_equivalence(m, claim));
  }

  std::cout << (ok ? "all checks passed" : "verification failed") << "\n";
  return ok ? 0 : 3;
}

template <class T>
int cmd_asymptotics(const Options& opt) {
  using namespace qhedge;
  const Json mj = parse_json_file(opt.model_path);
  const MarketModel<T> m = model_from_json<T>(mj);
  const Claim<T> claim = load_claim(m, opt, mj);
  const PerturbationSpec<T> spec =
      perturbation_from_json(m, parse_json_file(opt.perturbation_path));
  const AdaptedProcess<T> dir = materialize_direction(m, spec);
  const auto policy = opt.pseudo ? DegeneratePolicy::kPseudo : DegeneratePolicy::kStrict;

  const AsymptoticExpansion<T> exp = asymptotic_expansion(m, claim, dir, policy);
  std::cout << "V0_prime = " << ScalarOps<T>::format(exp.V0_prime) << "\n";
  std::cout << "theta_prime:\n" << render_tree(m, exp.theta_prime);
  std::cout << "L_prime:\n" << render_tree(m, exp.L_prime);

  const DiffScheme scheme =
      opt.scheme == "onesided" ? DiffScheme::kOneSided : DiffScheme::kCentered;
  const auto grid = parse_grid<T>(opt.fd_grid, false);
  const ConvergenceReport<T> conv = finite_diff_check(m, claim, dir, grid, scheme);
  if (!opt.csv_path.empty()) emit(opt.csv_path, convergence_csv(conv));

  if (!opt.out.empty()) {
    Json j;
    j["provenance"] = provenance(m, opt, "asymptotics");
    j["V0_prime"] = scalar_to_json(exp.V0_prime);
    Json tp, lp;
    for (int t = 0; t < m.tree.horizon(); ++t)
      for (NodeIndex v : m.tree.level(t))
        tp[m.tree.node(v).id] = scalar_to_json(exp.theta_prime.at(v));
    for (NodeIndex v = 0; v < m.tree.size(); ++v)
      lp[m.tree.node(v).id] = scalar_to_json(exp.L_prime.at(v));
    j["theta_prime"] = std::move(tp);
    j["L_prime"] = std::move(lp);
    emit(opt.out, j.dump(2) + "\n");
  }
  return 0;
}

template <class T>
int cmd_sweep(const Options& opt) {
  using namespace qhedge;
  const Json mj = parse_json_file(opt.model_path);
  const MarketModel<T> m = model_from_json<T>(mj);
  const Claim<T> claim = load_claim(m, opt, mj);
  const PerturbationSpec<T> spec =
      perturbation_from_json(m, parse_json_file(opt.perturbation_path));
  const AdaptedProcess<T> dir = materialize_direction(m, spec);

  const auto grid = parse_grid<T>(opt.eps_grid, opt.symmetric);
  const SweepReport<T> report = stability_sweep(m, claim, dir, grid);

  std::cout << "base V0 = " << ScalarOps<T>::format(report.base_v0) << "\n";
  for (const auto& row : report.rows) {
    if (!row.feasible) {
      std::cout << "eps " << ScalarOps<T>::format(row.eps) << ": clipped (degenerate at '"
                << qhedge::display_id(row.degenerate_node) << "')\n";
      continue;
    }
    std::cout << "eps " << ScalarOps<T>::format(row.eps)
              << ": V0 = " << ScalarOps<T>::format(row.v0)
              << ", |dV0| = " << ScalarOps<T>::format(row.dev_v0)
              << ", max|dtheta| = " << ScalarOps<T>::format(row.dev_theta)
              << ", max|dL| = " << ScalarOps<T>::format(row.dev_l)
              << ", objective = " << ScalarOps<T>::format(row.objective) << "\n";
  }
  std::cout << "deviations shrink monotonically toward eps = 0: "
            << (deviations_shrink_monotonically(report) ? "yes" : "no") << "\n";
  if (!opt.csv_path.empty()) emit(opt.csv_path, sweep_csv(report));
  return 0;
}

int dispatch(const std::string& command, const Options& opt) {
  const bool exact = opt.mode == "exact";
  if (command == "gen")
    return exact ? cmd_gen<qhedge::Rational>(opt) : cmd_gen<double>(opt);
  if (command == "decompose")
    return exact ? cmd_decompose<qhedge::Rational>(opt) : cmd_decompose<double>(opt);
  if (command == "verify")
    return exact ? cmd_verify<qhedge::Rational>(opt) : cmd_verify<double>(opt);
  if (command == "asymptotics")
    return exact ? cmd_asymptotics<qhedge::Rational>(opt) : cmd_asymptotics<double>(opt);
  if (command == "sweep")
    return exact ? cmd_sweep<qhedge::Rational>(opt) : cmd_sweep<double>(opt);
  throw qhedge::InputError("unknown command");
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  if (const char* env = std::getenv("QHEDGE_TOLERANCE")) {
    try {
      opt.tolerance = std::stod(env);
    } catch (...) {
      std::cerr << "ignoring unparsable QHEDGE_TOLERANCE\n";
    }
  }

  CLI::App app{"quadratic hedging on finite filtration trees"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mode", opt.mode, "arithmetic backend")
        ->check(CLI::IsMember({"exact", "float"}))
        ->capture_default_str();
    sub->add_option("--tolerance", opt.tolerance, "verification tolerance")
        ->capture_default_str();
  };
  auto add_claim = [&](CLI::App* sub) {
    sub->add_option("--claim", opt.claim_kind, "claim kind")
        ->check(CLI::IsMember({"call", "put"}));
    sub->add_option("--strike", opt.strike, "strike for call/put claims");
    sub->add_option("--claim-file", opt.claim_file, "JSON table of raw payoffs per leaf");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a market model file");
  gen->add_option("--kind", opt.kind, "binomial|trinomial")->required();
  gen->add_option("--s0", opt.s0, "initial price")->required();
  gen->add_option("--u", opt.u, "up factor")->required();
  gen->add_option("--d", opt.d, "down factor")->required();
  gen->add_option("--p", opt.p, "up probability");
  gen->add_option("--p-up", opt.pu, "up probability (trinomial; overrides --p)");
  gen->add_option("--m-prob,--p-mid", opt.pm, "middle probability (trinomial)");
  gen->add_option("--p-down", opt.pd, "down probability (trinomial; default 1 - up - middle)");
  gen->add_option("--steps", opt.steps, "number of time steps")->required();
  gen->add_option("--rate", opt.rate, "per-step interest rate");
  gen->add_option("--out,-o", opt.out, "output model file ('-' for stdout)");
  add_common(gen);

  CLI::App* dec = app.add_subcommand("decompose", "compute the decomposition of a claim");
  dec->add_option("--model", opt.model_path, "model JSON file")->required();
  add_claim(dec);
  dec->add_flag("--pseudo", opt.pseudo, "set theta to 0 at degenerate nodes instead of failing");
  dec->add_option("--out,-o", opt.out, "write a JSON report");
  add_common(dec);

  CLI::App* ver = app.add_subcommand("verify", "check decomposition invariants and the oracle");
  ver->add_option("--model", opt.model_path, "model JSON file")->required();
  add_claim(ver);
  ver->add_option("--report", opt.report_path, "verify a stored report instead of recomputing");
  add_common(ver);

  CLI::App* asy = app.add_subcommand("asymptotics", "first-order corrections along a perturbation");
  asy->add_option("--model", opt.model_path, "model JSON file")->required();
  add_claim(asy);
  asy->add_option("--perturbation", opt.perturbation_path, "perturbation JSON file")->required();
  asy->add_option("--fd-grid", opt.fd_grid, "comma list of finite-difference step sizes")
      ->capture_default_str();
  asy->add_option("--scheme", opt.scheme, "difference scheme")
      ->check(CLI::IsMember({"centered", "onesided"}))
      ->capture_default_str();
  asy->add_flag("--pseudo", opt.pseudo, "tolerate degenerate nodes");
  asy->add_option("--csv", opt.csv_path, "write the convergence table as CSV");
  asy->add_option("--out,-o", opt.out, "write a JSON report");
  add_common(asy);

  CLI::App* swp = app.add_subcommand("sweep", "stability sweep over an eps grid");
  swp->add_option("--model", opt.model_path, "model JSON file")->required();
  add_claim(swp);
  swp->add_option("--perturbation", opt.perturbation_path, "perturbation JSON file")->required();
  swp->add_option("--eps-grid", opt.eps_grid, "comma list of eps values")->capture_default_str();
  swp->add_flag("--symmetric", opt.symmetric, "also evaluate the negated grid");
  swp->add_option("--csv", opt.csv_path, "write the sweep table as CSV");
  add_common(swp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (!(opt.tolerance > 0)) {
    std::cerr << "error: tolerance must be positive\n";
    return 1;
  }

  try {
    return dispatch(app.get_subcommands().front()->get_name(), opt);
  } catch (const qhedge::MathError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const qhedge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
