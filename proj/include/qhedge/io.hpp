#ifndef QHEDGE_IO_HPP
#define QHEDGE_IO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qhedge/model.hpp"
#include "qhedge/perturb.hpp"

namespace qhedge {

using Json = nlohmann::ordered_json;

/*
 * File formats. Numbers are accepted as JSON literals or as strings;
 * strings parse exactly ("88/25", "0.6", "1e-3"), which is what rational
 * mode emits, so emitted files round-trip bit-exactly. A bare JSON float
 * literal read in rational mode becomes the exact dyadic value of the
 * parsed double.
 */

template <class T>
T json_to_scalar(const Json& j) {
  if (j.is_string()) return ScalarOps<T>::parse(j.template get<std::string>());
  if (j.is_number_integer()) {
    if constexpr (ScalarOps<T>::kExact)
      return Rational(j.template get<long long>());
    else
      return static_cast<double>(j.template get<long long>());
  }
  if (j.is_number_float()) {
    if constexpr (ScalarOps<T>::kExact)
      return Rational::from_double(j.template get<double>());
    else
      return j.template get<double>();
  }
  throw ParseError("expected a number, got " + j.dump());
}

template <class T>
Json scalar_to_json(const T& v) {
  if constexpr (ScalarOps<T>::kExact)
    return Json(v.str());
  else
    return Json(v);
}


namespace detail {

// nlohmann type errors (wrong field types and the like) surface as
// ParseError; library errors pass through untouched.
template <class Fn>
auto translate_json_errors(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace detail

inline Json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file '" + path + "' for writing");
  out << text;
}

// Regenerates a market from a file's "generator" block; used when a model
// file carries parameters instead of explicit nodes.
template <class T>
MarketModel<T> model_from_generator(const Json& gen) {
  auto num = [&](const char* key, const char* fallback = nullptr) {
    if (!gen.contains(key)) {
      if (fallback) return ScalarOps<T>::parse(fallback);
      throw ParseError(std::string("generator block is missing '") + key + "'");
    }
    return json_to_scalar<T>(gen[key]);
  };
  if (!gen.contains("kind") || !gen["kind"].is_string())
    throw ParseError("generator block needs a 'kind'");
  const std::string kind = gen["kind"].template get<std::string>();
  const int steps = gen.contains("steps") ? gen["steps"].template get<int>() : 1;
  if (kind == "binomial")
    return gen_binomial(num("s0"), num("u"), num("d"), num("p", "1/2"), steps, num("rate", "0"));
  if (kind == "trinomial")
    return gen_trinomial(num("s0"), num("u"), num("d"), num("p_u", "1/3"), num("p_m", "1/3"),
                         num("p_d", "1/3"), steps, num("rate", "0"));
  throw ParseError("unknown generator kind '" + kind + "'");
}

// Model file: {"horizon": N, "rate": r, "label": ..., "nodes": [{id, parent,
// prob, stock}...], "claim": {leaf: raw payoff}, "generator": {...}}.
// The root node is the one without a "parent" key. Explicit nodes win; a
// file with only a generator block is expanded on load.
namespace detail {

template <class T>
MarketModel<T> model_from_json_impl(const Json& j) {
  if (j.is_object() && !j.contains("nodes") && j.contains("generator"))
    return model_from_generator<T>(j["generator"]);
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
    throw ParseError("model file must be an object with a 'nodes' array or a 'generator' block");

  std::vector<NodeSpec<T>> specs;
  for (const auto& nj : j["nodes"]) {
    if (!nj.is_object() || !nj.contains("id") || !nj["id"].is_string())
      throw ParseError("every node needs a string 'id'");
    NodeSpec<T> spec;
    spec.id = nj["id"].template get<std::string>();
    if (nj.contains("parent")) {
      spec.parent = nj["parent"].template get<std::string>();
      if (!nj.contains("prob")) throw ParseError("non-root node '" + spec.id + "' needs 'prob'");
      spec.prob = json_to_scalar<T>(nj["prob"]);
    }
    specs.push_back(std::move(spec));
  }

  std::optional<int> horizon;
  if (j.contains("horizon")) horizon = j["horizon"].template get<int>();

  MarketModel<T> m;
  m.tree = FiltrationTree<T>::build(specs, horizon);
  m.rate = j.contains("rate") ? json_to_scalar<T>(j["rate"]) : T(0);
  if (!(m.rate > T(-1))) throw InvalidFactors("rate must exceed -1");
  m.label = j.value("label", std::string{});

  m.stock = AdaptedProcess<T>(m.tree.size());
  for (const auto& nj : j["nodes"]) {
    if (!nj.contains("stock"))
      throw MissingValue("node '" + display_id(nj["id"].template get<std::string>()) +
                         "' carries no stock value");
    const T value = json_to_scalar<T>(nj["stock"]);
    if (!ScalarOps<T>::finite(value)) throw InputError("stock value must be finite");
    m.stock.set(m.tree.find(nj["id"].template get<std::string>()), value);
  }
  return m;
}

}  // namespace detail

template <class T>
MarketModel<T> model_from_json(const Json& j) {
  return detail::translate_json_errors("model file",
                                       [&] { return detail::model_from_json_impl<T>(j); });
}

template <class T>
MarketModel<T> read_model_file(const std::string& path) {
  return model_from_json<T>(parse_json_file(path));
}

template <class T>
Json model_to_json(const MarketModel<T>& m, const Json& generator = Json()) {
  Json j;
  j["horizon"] = m.tree.horizon();
  j["rate"] = scalar_to_json(m.rate);
  if (!m.label.empty()) j["label"] = m.label;
  if (!generator.is_null()) j["generator"] = generator;
  Json nodes = Json::array();
  for (int t = 0; t <= m.tree.horizon(); ++t) {
    for (NodeIndex v : m.tree.level(t)) {
      const auto& n = m.tree.node(v);
      Json nj;
      nj["id"] = n.id;
      if (n.parent != kNoParent) {
        nj["parent"] = m.tree.node(n.parent).id;
        nj["prob"] = scalar_to_json(n.prob);
      }
      nj["stock"] = scalar_to_json(m.stock.at(v));
      nodes.push_back(std::move(nj));
    }
  }
  j["nodes"] = std::move(nodes);
  return j;
}

// Claim tables map leaf ids to raw payoffs; accepted either as a bare
// object or under a "claim" key (the model file embeds the latter).
template <class T>
Claim<T> claim_from_json(const MarketModel<T>& m, const Json& j) {
  return detail::translate_json_errors("claim table", [&] {
    const Json& table = j.is_object() && j.contains("claim") ? j["claim"] : j;
    if (!table.is_object()) throw ParseError("claim table must be a JSON object");
    std::map<std::string, T> raw;
    for (auto it = table.begin(); it != table.end(); ++it)
      raw[it.key()] = json_to_scalar<T>(it.value());
    return custom_claim(m, raw);
  });
}

// Perturbation file: {"dSprime": {node: value}} and/or
// {"params": {"lambda_prime": {...}, "sigma_prime": {...},
//             "sigma_dprime": {...}, "dWperp": {node: value}}}.
namespace detail {

template <class T>
PerturbationSpec<T> perturbation_from_json_impl(const MarketModel<T>& m, const Json& j) {
  PerturbationSpec<T> spec;
  if (j.contains("dSprime")) {
    const Json& table = j["dSprime"];
    AdaptedProcess<T> dir(m.tree.size());
    for (NodeIndex v = 0; v < m.tree.size(); ++v) {
      const auto& n = m.tree.node(v);
      if (n.parent == kNoParent) continue;
      if (!table.contains(n.id))
        throw MissingValue("dSprime has no entry for node '" + display_id(n.id) + "'");
      dir.set(v, json_to_scalar<T>(table[n.id]));
    }
    spec.direction = std::move(dir);
  }
  if (j.contains("params")) {
    const Json& pj = j["params"];
    PerturbationParams<T> params{PredictableProcess<T>(m.tree.size()),
                                 PredictableProcess<T>(m.tree.size()),
                                 PredictableProcess<T>(m.tree.size()),
                                 AdaptedProcess<T>(m.tree.size())};
    auto load_predictable = [&](const char* key, PredictableProcess<T>& dst) {
      for (int t = 0; t < m.tree.horizon(); ++t) {
        for (NodeIndex v : m.tree.level(t)) {
          const auto& id = m.tree.node(v).id;
          if (!pj.contains(key) || !pj[key].contains(id)) {
            dst.set(v, T(0));
          } else {
            dst.set(v, json_to_scalar<T>(pj[key][id]));
          }
        }
      }
    };
    load_predictable("lambda_prime", params.lambda_prime);
    load_predictable("sigma_prime", params.sigma_prime);
    load_predictable("sigma_dprime", params.sigma_dprime);
    for (NodeIndex v = 0; v < m.tree.size(); ++v) {
      const auto& n = m.tree.node(v);
      if (n.parent == kNoParent) continue;
      const bool needed = params.sigma_dprime.at(n.parent) != T(0);
      if (pj.contains("dWperp") && pj["dWperp"].contains(n.id)) {
        params.noise_perp.set(v, json_to_scalar<T>(pj["dWperp"][n.id]));
      } else if (needed) {
        throw MissingValue("dWperp has no entry for node '" + display_id(n.id) +
                           "' but sigma_dprime is nonzero there");
      } else {
        params.noise_perp.set(v, T(0));
      }
    }
    spec.params = std::move(params);
  }
  if (!spec.direction && !spec.params)
    throw ParseError("perturbation file needs a 'dSprime' or 'params' block");
  return spec;
}

}  // namespace detail

template <class T>
PerturbationSpec<T> perturbation_from_json(const MarketModel<T>& m, const Json& j) {
  return detail::translate_json_errors(
      "perturbation file", [&] { return detail::perturbation_from_json_impl(m, j); });
}

template <class T>
Json perturbation_to_json(const MarketModel<T>& m, const PerturbationSpec<T>& spec) {
  Json j;
  if (spec.direction) {
    Json table;
    for (int t = 1; t <= m.tree.horizon(); ++t)
      for (NodeIndex v : m.tree.level(t))
        table[m.tree.node(v).id] = scalar_to_json(spec.direction->at(v));
    j["dSprime"] = std::move(table);
  }
  if (spec.params) {
    Json pj;
    auto dump_predictable = [&](const char* key, const PredictableProcess<T>& src) {
      Json table;
      for (int t = 0; t < m.tree.horizon(); ++t)
        for (NodeIndex v : m.tree.level(t)) table[m.tree.node(v).id] = scalar_to_json(src.at(v));
      pj[key] = std::move(table);
    };
    dump_predictable("lambda_prime", spec.params->lambda_prime);
    dump_predictable("sigma_prime", spec.params->sigma_prime);
    dump_predictable("sigma_dprime", spec.params->sigma_dprime);
    Json table;
    for (int t = 1; t <= m.tree.horizon(); ++t)
      for (NodeIndex v : m.tree.level(t))
        table[m.tree.node(v).id] = scalar_to_json(spec.params->noise_perp.at(v));
    pj["dWperp"] = std::move(table);
    j["params"] = std::move(pj);
  }
  return j;
}

// FNV-1a over the canonical serialized model; good enough to tie reports
// to the inputs that produced them.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

template <class T>
std::string model_hash(const MarketModel<T>& m) {
  return fnv1a_hex(model_to_json(m).dump());
}

template <class T>
Json decomposition_to_json(const MarketModel<T>& m, const FSDecomposition<T>& fs) {
  Json j;
  j["V0"] = scalar_to_json(fs.V0);
  j["objective"] = scalar_to_json(fs.objective);
  Json theta, l;
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) theta[m.tree.node(v).id] = scalar_to_json(fs.theta.at(v));
  for (int t = 0; t <= m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) l[m.tree.node(v).id] = scalar_to_json(fs.L.at(v));
  j["theta"] = std::move(theta);
  j["L"] = std::move(l);
  return j;
}

namespace detail {

template <class T>
FSDecomposition<T> decomposition_from_json_impl(const MarketModel<T>& m, const Json& j) {
  FSDecomposition<T> fs;
  fs.V0 = json_to_scalar<T>(j.at("V0"));
  fs.objective = j.contains("objective") ? json_to_scalar<T>(j["objective"]) : T(0);
  fs.theta = PredictableProcess<T>(m.tree.size());
  fs.L = AdaptedProcess<T>(m.tree.size());
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (NodeIndex v : m.tree.level(t)) {
      const auto& id = m.tree.node(v).id;
      if (!j.at("theta").contains(id))
        throw MissingValue("report theta has no entry for node '" + display_id(id) + "'");
      fs.theta.set(v, json_to_scalar<T>(j.at("theta")[id]));
    }
  for (NodeIndex v = 0; v < m.tree.size(); ++v) {
    const auto& id = m.tree.node(v).id;
    if (!j.at("L").contains(id))
      throw MissingValue("report L has no entry for node '" + display_id(id) + "'");
    fs.L.set(v, json_to_scalar<T>(j.at("L")[id]));
  }
  return fs;
}

}  // namespace detail

template <class T>
FSDecomposition<T> decomposition_from_json(const MarketModel<T>& m, const Json& j) {
  return detail::translate_json_errors(
      "decomposition report", [&] { return detail::decomposition_from_json_impl(m, j); });
}

}  // namespace qhedge

#endif  // QHEDGE_IO_HPP
