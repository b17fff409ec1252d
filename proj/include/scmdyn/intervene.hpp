#pragma once

#include <string>
#include <variant>
#include <vector>

#include "scmdyn/engine.hpp"
#include "scmdyn/graph.hpp"

namespace scmdyn {

// A graph transformation: value-setting, equation replacement, prior
// replacement for exogenous nodes, or a composition of those. The empty
// composition is the identity.
struct Intervention {
  struct Atomic {
    std::string node;
    double value;
  };
  struct PolicyReplace {
    std::string node;
    Equation equation;
  };
  struct PriorReplace {
    std::string node;
    NoisePrior prior;
  };
  using Part = std::variant<Atomic, PolicyReplace, PriorReplace>;

  std::vector<Part> parts;

  static Intervention identity() { return {}; }
  static Intervention atomic(std::string node, double value);
  static Intervention policy(std::string node, Equation equation);
  static Intervention replace_prior(std::string node, NoisePrior prior);

  std::string describe() const;
};

const std::string& target_of(const Intervention::Part& part);

// Rejects duplicate targets; members with distinct targets commute.
Intervention compose(const std::vector<Intervention>& interventions);

ScmGraph apply(const ScmGraph& graph, const Intervention& intervention);

ScmGraph do_atomic(const ScmGraph& graph, const std::string& node, double value);
ScmGraph do_policy(const ScmGraph& graph, const std::string& node,
                   const Equation& replacement);

Estimate interventional_estimate(const ScmGraph& graph,
                                 const Intervention& intervention,
                                 const std::function<double(const World&)>& query,
                                 std::size_t n, std::uint64_t seed,
                                 unsigned jobs = 0);

}  // namespace scmdyn
