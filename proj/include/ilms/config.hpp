#pragma once

// Structured-text (JSON) experiment documents.
//
//   {
//     "dimension": 4, "seed": 7, "link_mode": "noisy",
//     "iterations": 2000, "trials": 200, "window_fraction": 0.1,
//     "s0": "random-unit",
//     "outputs": ["learning_curve", "steady_state"],
//     "nodes": [ { "regressor_covariance": "identity",
//                  "measurement_noise_variance": 1e-3,
//                  "step_size": 0.02,
//                  "link_noise_covariance": {"scaled_identity": 1e-4} } ],
//     "sizes": [10, 40], "step_rule": "fair_eq14"
//   }
//
// A document with `sizes` or `step_rule` is a comparison.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include "ilms/errors.hpp"
#include "ilms/experiment.hpp"
#include "ilms/model.hpp"
#include "json.hpp"

namespace ilms {

using Json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_keys(Json const& obj, std::set<std::string> const& allowed,
                                std::string const& where) {
  for (auto const& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ParseError(where + ": unknown field '" + key + "'");
}

template <class T>
T get_field(Json const& obj, char const* key, T fallback, std::string const& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (nlohmann::json::exception const& e) {
    throw ParseError(where + key + ": " + e.what());
  }
}

inline Matrix parse_covariance(Json const& value, Eigen::Index m, std::string const& field) {
  if (value.is_string()) {
    auto const s = value.get<std::string>();
    if (s == "identity") return Matrix::Identity(m, m);
    if (s == "zero") return Matrix::Zero(m, m);
    throw ParseError(field + ": expected \"identity\", \"zero\", {\"scaled_identity\": c} or a matrix");
  }
  if (value.is_number()) return value.get<double>() * Matrix::Identity(m, m);
  if (value.is_object()) {
    reject_unknown_keys(value, {"scaled_identity"}, field);
    if (!value.contains("scaled_identity") || !value.at("scaled_identity").is_number())
      throw ParseError(field + ": scaled_identity needs a numeric scale");
    return value.at("scaled_identity").get<double>() * Matrix::Identity(m, m);
  }
  if (value.is_array()) {
    Matrix out(m, m);
    bool const nested = !value.empty() && value.front().is_array();
    if (nested) {
      if (static_cast<Eigen::Index>(value.size()) != m)
        throw ParseError(field + ": expected " + std::to_string(m) + " rows");
      for (Eigen::Index r = 0; r < m; ++r) {
        auto const& row = value.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m)
          throw ParseError(field + ": row " + std::to_string(r + 1) + " must have " +
                           std::to_string(m) + " entries");
        for (Eigen::Index c = 0; c < m; ++c)
          out(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
      }
    } else {
      if (static_cast<Eigen::Index>(value.size()) != m * m)
        throw ParseError(field + ": row-major matrix needs " + std::to_string(m * m) + " entries");
      for (Eigen::Index k = 0; k < m * m; ++k)
        out(k / m, k % m) = value.at(static_cast<std::size_t>(k)).get<double>();
    }
    return out;
  }
  throw ParseError(field + ": unsupported covariance form");
}

inline Json covariance_to_json(Matrix const& c) {
  auto const m = c.rows();
  if (c.isZero(0.0)) return "zero";
  if (c == Matrix::Identity(m, m)) return "identity";
  if (c == c(0, 0) * Matrix::Identity(m, m)) return Json{{"scaled_identity", c(0, 0)}};
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m; ++r) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m; ++k) row.push_back(c(r, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline char const* to_string(Output o) {
  switch (o) {
    case Output::LearningCurve: return "learning_curve";
    case Output::SteadyState: return "steady_state";
    case Output::Modes: return "modes";
    case Output::Stability: return "stability";
    case Output::MeanRecursion: return "mean_recursion";
  }
  return "";
}

inline Output output_from_string(std::string const& s) {
  for (auto o : {Output::LearningCurve, Output::SteadyState, Output::Modes, Output::Stability,
                 Output::MeanRecursion})
    if (s == to_string(o)) return o;
  throw ParseError("outputs: unknown output '" + s + "'");
}

}  // namespace detail

inline char const* to_string(StepRule r) { return r == StepRule::FairEq14 ? "fair_eq14" : "fixed"; }

/// Builds a validated spec from a parsed document. Missing fields take
/// defaults; invariant violations throw ConfigError naming the field.
inline AnySpec spec_from_json(Json const& doc) {
  using detail::get_field;
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  detail::reject_unknown_keys(doc,
                              {"dimension", "seed", "link_mode", "iterations", "trials",
                               "window_fraction", "s0", "nodes", "outputs", "sizes", "step_rule"},
                              "config");

  if (!doc.contains("dimension")) throw ParseError("dimension: required field missing");
  auto const dim = get_field<long long>(doc, "dimension", 0, "");
  if (dim < 1) throw ConfigError("dimension: must be a positive integer");
  auto const m = static_cast<Eigen::Index>(dim);

  auto const seed = get_field<std::uint64_t>(doc, "seed", 1, "");
  auto const mode_name = get_field<std::string>(doc, "link_mode", "ideal", "");
  LinkMode mode;
  if (mode_name == "ideal") mode = LinkMode::Ideal;
  else if (mode_name == "noisy") mode = LinkMode::Noisy;
  else throw ParseError("link_mode: expected \"ideal\" or \"noisy\", got \"" + mode_name + "\"");

  if (!doc.contains("nodes") || !doc.at("nodes").is_array())
    throw ParseError("nodes: required list of node objects");
  std::vector<NodeProfile> nodes;
  auto const& node_docs = doc.at("nodes");
  for (std::size_t j = 0; j < node_docs.size(); ++j) {
    std::string const where = "node " + std::to_string(j + 1);
    auto const& nd = node_docs.at(j);
    if (!nd.is_object()) throw ParseError(where + ": must be an object");
    detail::reject_unknown_keys(nd,
                                {"regressor_covariance", "measurement_noise_variance",
                                 "step_size", "link_noise_covariance"},
                                where);
    try {
      Matrix const ch = nd.contains("regressor_covariance")
                            ? detail::parse_covariance(nd.at("regressor_covariance"), m,
                                                       "regressor_covariance")
                            : Matrix::Identity(m, m);
      Matrix const rq = nd.contains("link_noise_covariance")
                            ? detail::parse_covariance(nd.at("link_noise_covariance"), m,
                                                       "link_noise_covariance")
                            : Matrix::Zero(m, m);
      double const sigma2 = get_field<double>(nd, "measurement_noise_variance", 1e-3, "");
      double const step = get_field<double>(nd, "step_size", 0.01, "");
      nodes.emplace_back(ch, sigma2, step, rq);
    } catch (ParseError const& e) {
      throw ParseError(where + ": " + e.what());
    } catch (ConfigError const& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (nlohmann::json::exception const& e) {
      throw ParseError(where + ": " + e.what());
    }
  }

  NetworkConfig config(m, std::move(nodes), mode, seed);

  std::optional<UnknownParameter> s0;
  if (doc.contains("s0")) {
    auto const& v = doc.at("s0");
    if (v.is_string()) {
      if (v.get<std::string>() != "random-unit")
        throw ParseError("s0: expected a list of reals or \"random-unit\"");
    } else if (v.is_array()) {
      Vector values(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v.at(i).is_number()) throw ParseError("s0: entry " + std::to_string(i + 1) + " is not a number");
        values[static_cast<Eigen::Index>(i)] = v.at(i).get<double>();
      }
      if (values.size() == 0) throw ConfigError("s0: must not be empty");
      s0 = UnknownParameter(values);
    } else {
      throw ParseError("s0: expected a list of reals or \"random-unit\"");
    }
  }

  auto const iterations = get_field<long long>(doc, "iterations", 1000, "");
  auto const trials = get_field<long long>(doc, "trials", 100, "");
  if (iterations < 1) throw ConfigError("iterations: must be >= 1");
  if (trials < 1) throw ConfigError("trials: must be >= 1");

  ExperimentSpec spec{std::move(config),
                      std::move(s0),
                      static_cast<std::size_t>(iterations),
                      static_cast<std::size_t>(trials),
                      get_field<double>(doc, "window_fraction", 0.1, ""),
                      {Output::LearningCurve, Output::SteadyState}};
  if (doc.contains("outputs")) {
    auto const& outs = doc.at("outputs");
    if (!outs.is_array()) throw ParseError("outputs: expected a list");
    spec.outputs.clear();
    for (auto const& o : outs) {
      if (!o.is_string()) throw ParseError("outputs: entries must be strings");
      spec.outputs.insert(detail::output_from_string(o.get<std::string>()));
    }
  }
  validate(spec);

  if (!doc.contains("sizes") && !doc.contains("step_rule")) return spec;

  ComparisonSpec cmp{std::move(spec), {}, StepRule::FairEq14};
  if (!doc.contains("sizes") || !doc.at("sizes").is_array())
    throw ParseError("sizes: comparison needs a list of node counts");
  for (auto const& s : doc.at("sizes")) {
    if (!s.is_number_integer()) throw ParseError("sizes: entries must be integers");
    auto const n = s.get<long long>();
    if (n < 1) throw ConfigError("sizes: node counts must be >= 1");
    cmp.sizes.push_back(static_cast<std::size_t>(n));
  }
  auto const rule = get_field<std::string>(doc, "step_rule", "fair_eq14", "");
  if (rule == "fair_eq14") cmp.step_rule = StepRule::FairEq14;
  else if (rule == "fixed") cmp.step_rule = StepRule::FixedStep;
  else throw ParseError("step_rule: expected \"fair_eq14\" or \"fixed\", got \"" + rule + "\"");
  validate(cmp);
  return cmp;
}

inline AnySpec parse_spec(std::string const& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (nlohmann::json::parse_error const& e) {
    // e.what() carries "line L, column C".
    throw ParseError(std::string("config: ") + e.what());
  }
  return spec_from_json(doc);
}

inline AnySpec load_spec(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

/// Canonical document: every field present, defaults filled, fixed key order.
inline Json to_json(ExperimentSpec const& spec) {
  Json doc;
  auto const& c = spec.config;
  doc["dimension"] = c.dimension();
  doc["seed"] = c.seed();
  doc["link_mode"] = to_string(c.link_mode());
  doc["iterations"] = spec.iterations;
  doc["trials"] = spec.trials;
  doc["window_fraction"] = spec.window_fraction;
  if (spec.s0) {
    Json s = Json::array();
    for (double v : spec.s0->values()) s.push_back(v);
    doc["s0"] = std::move(s);
  } else {
    doc["s0"] = "random-unit";
  }
  Json outs = Json::array();
  for (auto o : spec.outputs) outs.push_back(detail::to_string(o));
  doc["outputs"] = std::move(outs);
  Json nodes = Json::array();
  for (auto const& n : c.nodes()) {
    Json nd;
    nd["regressor_covariance"] = detail::covariance_to_json(n.regressor_covariance());
    nd["measurement_noise_variance"] = n.measurement_noise_variance();
    nd["step_size"] = n.step_size();
    nd["link_noise_covariance"] = detail::covariance_to_json(n.link_noise_covariance());
    nodes.push_back(std::move(nd));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

inline Json to_json(ComparisonSpec const& spec) {
  Json doc = to_json(spec.base);
  doc["sizes"] = spec.sizes;
  doc["step_rule"] = to_string(spec.step_rule);
  return doc;
}

inline Json to_json(ModeSweepSpec const& spec) {
  return Json{{"mu_lambda", spec.mu_lambda}, {"sizes", spec.sizes}};
}

inline Json to_json(AnySpec const& spec) {
  return std::visit([](auto const& s) { return to_json(s); }, spec);
}

}  // namespace ilms
