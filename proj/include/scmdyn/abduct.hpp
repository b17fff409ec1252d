#pragma once

#include <map>
#include <string>
#include <vector>

#include "scmdyn/engine.hpp"
#include "scmdyn/graph.hpp"
#include "scmdyn/intervene.hpp"

namespace scmdyn {

// Posterior over every exogenous node instance given an observed world.
struct NoisePosterior {
  std::map<std::string, std::vector<Posterior>> per_node;

  ExogenousAssignment sample(const ScmGraph& graph, std::uint64_t seed,
                             std::uint64_t draw_index) const;
};

// Infers noise posteriors from a (possibly partial) observation. Mechanisms
// with analytic inverses contribute point masses or truncated regions;
// everything the observation leaves unidentified falls back to its prior.
// Throws InconsistentObservationError when no noise value can reproduce the
// observation.
NoisePosterior abduct(const ScmGraph& graph, const Observation& observed);

// Abduct-then-act: m worlds sampled from the posterior and pushed through
// the intervened graph.
std::vector<World> counterfactual_worlds(const ScmGraph& graph,
                                         const Observation& factual,
                                         const Intervention& intervention,
                                         std::size_t m, std::uint64_t seed);

}  // namespace scmdyn
