#include "scmdyn/intervene.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "scmdyn/errors.hpp"

namespace scmdyn {

Intervention Intervention::atomic(std::string node, double value) {
  Intervention iv;
  iv.parts.push_back(Atomic{std::move(node), value});
  return iv;
}

Intervention Intervention::policy(std::string node, Equation equation) {
  Intervention iv;
  iv.parts.push_back(PolicyReplace{std::move(node), std::move(equation)});
  return iv;
}

Intervention Intervention::replace_prior(std::string node, NoisePrior prior) {
  Intervention iv;
  iv.parts.push_back(PriorReplace{std::move(node), prior});
  return iv;
}

const std::string& target_of(const Intervention::Part& part) {
  return std::visit([](const auto& p) -> const std::string& { return p.node; },
                    part);
}

std::string Intervention::describe() const {
  if (parts.empty()) return "identity";
  std::ostringstream os;
  bool first = true;
  for (const auto& part : parts) {
    if (!first) os << ", ";
    first = false;
    if (const auto* a = std::get_if<Atomic>(&part)) {
      os << "do(" << a->node << "=" << a->value << ")";
    } else if (const auto* p = std::get_if<PolicyReplace>(&part)) {
      os << "do(f_" << p->node << " -> " << p->equation.name;
      if (!p->equation.params.empty()) os << "[" << p->equation.params << "]";
      os << ")";
    } else {
      os << "do(prior_" << std::get<PriorReplace>(part).node << " -> ...)";
    }
  }
  return os.str();
}

Intervention compose(const std::vector<Intervention>& interventions) {
  Intervention out;
  std::set<std::string> targets;
  for (const auto& iv : interventions) {
    for (const auto& part : iv.parts) {
      const std::string& t = target_of(part);
      if (!targets.insert(t).second)
        throw ConflictError("duplicate intervention target " + t);
      out.parts.push_back(part);
    }
  }
  return out;
}

namespace {

void check_kind(const Equation& eq, double value, const std::string& node) {
  switch (eq.kind) {
    case ValueKind::Binary:
      if (value != 0.0 && value != 1.0)
        throw KindMismatchError(node + " is binary, got " + std::to_string(value));
      break;
    case ValueKind::Integer:
      if (value != std::floor(value))
        throw KindMismatchError(node + " is integer, got " + std::to_string(value));
      break;
    case ValueKind::Real:
      break;
  }
}

}  // namespace

ScmGraph apply(const ScmGraph& graph, const Intervention& intervention) {
  // Composites must not hit the same node twice even when built by hand.
  std::set<std::string> targets;
  for (const auto& part : intervention.parts)
    if (!targets.insert(target_of(part)).second)
      throw ConflictError("duplicate intervention target " + target_of(part));

  ScmGraph out = graph;
  for (const auto& part : intervention.parts) {
    const std::string& id = target_of(part);
    NodeSpec* node = nullptr;
    for (auto& n : out.nodes)
      if (n.id == id) node = &n;
    if (!node) throw UnknownNodeError(id);

    if (const auto* a = std::get_if<Intervention::Atomic>(&part)) {
      if (node->exogenous())
        throw KindMismatchError(
            id + " is exogenous; use a prior replacement instead");
      check_kind(std::get<Equation>(node->mech), a->value, id);
      Equation constant = Equation::constant(a->value, std::get<Equation>(node->mech).kind);
      node->mech = std::move(constant);
    } else if (const auto* p = std::get_if<Intervention::PolicyReplace>(&part)) {
      if (node->exogenous())
        throw KindMismatchError(id + " is exogenous; replace its prior instead");
      for (const auto& in : p->equation.inputs)
        if (!out.find(in))
          throw UnknownNodeError("replacement for " + id + " reads unknown node " + in);
      node->mech = p->equation;
    } else {
      const auto& pr = std::get<Intervention::PriorReplace>(part);
      if (!node->exogenous())
        throw KindMismatchError(id + " is endogenous; use a policy replacement");
      pr.prior.validate();
      node->mech = pr.prior;
    }
  }
  validate_and_order(out);  // CycleError if a replacement loops back
  return out;
}

ScmGraph do_atomic(const ScmGraph& graph, const std::string& node, double value) {
  return apply(graph, Intervention::atomic(node, value));
}

ScmGraph do_policy(const ScmGraph& graph, const std::string& node,
                   const Equation& replacement) {
  return apply(graph, Intervention::policy(node, replacement));
}

Estimate interventional_estimate(const ScmGraph& graph,
                                 const Intervention& intervention,
                                 const std::function<double(const World&)>& query,
                                 std::size_t n, std::uint64_t seed,
                                 unsigned jobs) {
  return estimate(apply(graph, intervention), query, n, seed, jobs);
}

}  // namespace scmdyn
