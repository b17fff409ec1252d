#pragma once

#include <string>

#include <json.hpp>

#include "scmdyn/graph.hpp"
#include "scmdyn/intervene.hpp"

namespace scmdyn {

// Declarative graph description: plates plus a node list where each node
// carries exactly one of "prior", "equation", "reduction". Equations and
// reductions are looked up by registered name with a params object.
ScmGraph graph_from_json(const nlohmann::json& j);
ScmGraph load_graph_json(const std::string& path);
nlohmann::json graph_to_json(const ScmGraph& graph);

// Equation / reduction registries keyed by name. Built-ins:
//   equations: constant(value), identity(input), linear(weights, bias),
//              bernoulli_table(table) — binary node with U = inputs[0] and
//              P(1) looked up by the remaining parents' bit pattern.
//   reductions: mean, sum.
Equation equation_from_json(const nlohmann::json& j);
Reduction reduction_from_json(const nlohmann::json& j);

NoisePrior prior_from_json(const nlohmann::json& j);
nlohmann::json prior_to_json(const NoisePrior& p);

// {"do": {"node", "value"}} | {"do_policy": {"node", "equation"}} |
// {"do_prior": {"node", "prior"}}, or a list of those.
Intervention intervention_from_json(const nlohmann::json& j);

}  // namespace scmdyn
