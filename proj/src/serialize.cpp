#include "scmdyn/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "scmdyn/equations.hpp"
#include "scmdyn/errors.hpp"

namespace scmdyn {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw ConfigSchemaError(path + ": " + what);
}

const json& require(const json& j, const char* field, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected an object");
  auto it = j.find(field);
  if (it == j.end()) schema_fail(path + "." + field, "missing");
  return *it;
}

double require_number(const json& j, const char* field, const std::string& path) {
  const json& v = require(j, field, path);
  if (!v.is_number()) schema_fail(path + "." + field, "expected a number");
  return v.get<double>();
}

std::string require_string(const json& j, const char* field,
                           const std::string& path) {
  const json& v = require(j, field, path);
  if (!v.is_string()) schema_fail(path + "." + field, "expected a string");
  return v.get<std::string>();
}

ValueKind kind_from_string(const std::string& s, const std::string& path) {
  if (s == "real") return ValueKind::Real;
  if (s == "binary") return ValueKind::Binary;
  if (s == "integer") return ValueKind::Integer;
  schema_fail(path, "unknown value kind '" + s + "'");
}

std::string kind_to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Real: return "real";
    case ValueKind::Binary: return "binary";
    case ValueKind::Integer: return "integer";
  }
  return "real";
}

std::vector<std::string> inputs_from(const json& j, const std::string& path) {
  const json& v = require(j, "inputs", path);
  if (!v.is_array()) schema_fail(path + ".inputs", "expected an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) schema_fail(path + ".inputs", "entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

NoisePrior prior_from_json(const json& j) {
  const std::string path = "prior";
  const std::string family = require_string(j, "family", path);
  NoisePrior p;
  if (family == "uniform") {
    p = NoisePrior::uniform(require_number(j, "a", path),
                            require_number(j, "b", path));
  } else if (family == "bernoulli") {
    p = NoisePrior::bernoulli(require_number(j, "p", path));
  } else if (family == "gaussian") {
    p = NoisePrior::gaussian(require_number(j, "mean", path),
                             require_number(j, "stddev", path));
  } else {
    schema_fail(path + ".family", "unknown family '" + family + "'");
  }
  p.validate();
  return p;
}

json prior_to_json(const NoisePrior& p) {
  switch (p.family) {
    case NoisePrior::Family::Uniform:
      return {{"family", "uniform"}, {"a", p.a}, {"b", p.b}};
    case NoisePrior::Family::Bernoulli:
      return {{"family", "bernoulli"}, {"p", p.a}};
    case NoisePrior::Family::Gaussian:
      return {{"family", "gaussian"}, {"mean", p.a}, {"stddev", p.b}};
  }
  return {};
}

Equation equation_from_json(const json& j) {
  const std::string path = "equation";
  const std::string name = require_string(j, "name", path);
  const json params = j.contains("params") ? j.at("params") : json::object();

  if (name == "constant") {
    Equation eq = Equation::constant(
        require_number(params, "value", path + ".params"),
        params.contains("kind")
            ? kind_from_string(params.at("kind").get<std::string>(),
                               path + ".params.kind")
            : ValueKind::Real);
    eq.params = params.dump();
    return eq;
  }

  const auto inputs = inputs_from(j, path);

  if (name == "identity") {
    if (inputs.size() != 1) schema_fail(path + ".inputs", "identity takes one input");
    Equation eq = identity_equation(
        inputs[0], params.contains("kind")
                       ? kind_from_string(params.at("kind").get<std::string>(),
                                          path + ".params.kind")
                       : ValueKind::Real);
    eq.params = params.dump();
    return eq;
  }

  if (name == "linear") {
    const json& wj = require(params, "weights", path + ".params");
    if (!wj.is_array() || wj.size() != inputs.size())
      schema_fail(path + ".params.weights", "need one weight per input");
    std::vector<double> weights = wj.get<std::vector<double>>();
    const double bias =
        params.contains("bias") ? params.at("bias").get<double>() : 0.0;
    Equation eq;
    eq.inputs = inputs;
    eq.kind = ValueKind::Real;
    eq.name = "linear";
    eq.params = params.dump();
    eq.fn = [weights, bias](std::span<const double> args) {
      double v = bias;
      for (std::size_t i = 0; i < weights.size(); ++i) v += weights[i] * args[i];
      return v;
    };
    return eq;
  }

  if (name == "bernoulli_table") {
    const json& tj = require(params, "table", path + ".params");
    const std::size_t bits = inputs.size() - 1;
    if (!tj.is_array() || tj.size() != (std::size_t{1} << bits))
      schema_fail(path + ".params.table", "need 2^(inputs-1) probabilities");
    std::vector<double> table = tj.get<std::vector<double>>();
    Equation eq = binary_outcome_equation(
        inputs,
        [table](std::span<const double> rest) {
          std::size_t idx = 0;
          for (std::size_t i = 0; i < rest.size(); ++i)
            idx |= static_cast<std::size_t>(rest[i] != 0.0) << i;
          return table[idx];
        },
        "bernoulli_table", params.dump());
    return eq;
  }

  schema_fail(path + ".name", "unknown equation '" + name + "'");
}

Reduction reduction_from_json(const json& j) {
  const std::string path = "reduction";
  const std::string name = require_string(j, "name", path);
  const auto inputs = inputs_from(j, path);
  if (name == "mean") return mean_reduction(inputs);
  if (name == "sum") return sum_reduction(inputs);
  schema_fail(path + ".name", "unknown reduction '" + name + "'");
}

ScmGraph graph_from_json(const json& j) {
  ScmGraph g;
  if (j.contains("plates")) {
    const json& pj = j.at("plates");
    if (!pj.is_object()) schema_fail("plates", "expected an object");
    for (const auto& [name, size] : pj.items()) {
      if (!size.is_number_unsigned() || size.get<std::size_t>() == 0)
        schema_fail("plates." + name, "size must be a positive integer");
      g.plates[name] = size.get<std::size_t>();
    }
  }
  const json& nodes = require(j, "nodes", "graph");
  if (!nodes.is_array()) schema_fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const json& nj = nodes[i];
    NodeSpec spec;
    spec.id = require_string(nj, "id", path);
    if (nj.contains("plate")) {
      spec.plate = nj.at("plate").get<std::string>();
      if (!g.plates.count(*spec.plate))
        schema_fail(path + ".plate", "undeclared plate '" + *spec.plate + "'");
    }
    if (nj.contains("step")) spec.step = nj.at("step").get<int>();
    const int mechs = nj.contains("prior") + nj.contains("equation") +
                      nj.contains("reduction");
    if (mechs != 1)
      schema_fail(path, "need exactly one of prior/equation/reduction");
    try {
      if (nj.contains("prior"))
        spec.mech = prior_from_json(nj.at("prior"));
      else if (nj.contains("equation"))
        spec.mech = equation_from_json(nj.at("equation"));
      else
        spec.mech = reduction_from_json(nj.at("reduction"));
    } catch (const ConfigSchemaError& e) {
      schema_fail(path, e.what());
    }
    g.nodes.push_back(std::move(spec));
  }
  validate_and_order(g);
  return g;
}

ScmGraph load_graph_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigSchemaError("cannot open graph file " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ConfigSchemaError(path + ": " + e.what());
  }
  return graph_from_json(j);
}

json graph_to_json(const ScmGraph& graph) {
  json j;
  j["plates"] = json::object();
  for (const auto& [name, size] : graph.plates) j["plates"][name] = size;
  j["nodes"] = json::array();
  for (const auto& n : graph.nodes) {
    json nj;
    nj["id"] = n.id;
    if (n.plate) nj["plate"] = *n.plate;
    if (n.step) nj["step"] = *n.step;
    if (const auto* p = std::get_if<NoisePrior>(&n.mech)) {
      nj["prior"] = prior_to_json(*p);
    } else if (const auto* e = std::get_if<Equation>(&n.mech)) {
      json ej;
      ej["name"] = e->name;
      ej["inputs"] = e->inputs;
      ej["kind"] = kind_to_string(e->kind);
      if (!e->params.empty()) {
        const json parsed = json::parse(e->params, nullptr, false);
        ej["params"] = parsed.is_discarded() ? json(e->params) : parsed;
      }
      nj["equation"] = std::move(ej);
    } else if (const auto* r = std::get_if<Reduction>(&n.mech)) {
      json rj;
      rj["name"] = r->name;
      rj["inputs"] = r->inputs;
      if (!r->params.empty()) {
        const json parsed = json::parse(r->params, nullptr, false);
        rj["params"] = parsed.is_discarded() ? json(r->params) : parsed;
      }
      nj["reduction"] = std::move(rj);
    }
    j["nodes"].push_back(std::move(nj));
  }
  return j;
}

Intervention intervention_from_json(const json& j) {
  if (j.is_array()) {
    std::vector<Intervention> parts;
    for (const auto& e : j) parts.push_back(intervention_from_json(e));
    return compose(parts);
  }
  if (!j.is_object()) throw ConfigSchemaError("intervention: expected object");
  if (j.contains("do")) {
    const json& dj = j.at("do");
    return Intervention::atomic(require_string(dj, "node", "do"),
                                require_number(dj, "value", "do"));
  }
  if (j.contains("do_policy")) {
    const json& dj = j.at("do_policy");
    return Intervention::policy(require_string(dj, "node", "do_policy"),
                                equation_from_json(require(dj, "equation",
                                                           "do_policy")));
  }
  if (j.contains("do_prior")) {
    const json& dj = j.at("do_prior");
    return Intervention::replace_prior(
        require_string(dj, "node", "do_prior"),
        prior_from_json(require(dj, "prior", "do_prior")));
  }
  throw ConfigSchemaError("intervention: need one of do/do_policy/do_prior");
}

}  // namespace scmdyn
