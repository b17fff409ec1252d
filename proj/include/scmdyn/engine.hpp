#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scmdyn/graph.hpp"

namespace scmdyn {

// Values of some node instances; a column per node id. Partial by design
// (abduction accepts worlds with missing nodes).
using Observation = std::map<std::string, std::vector<double>>;

// Complete assignment of every node instance for one simulation run.
struct World {
  Observation values;
  std::uint64_t seed = 0;
  std::uint64_t world_index = 0;
  std::uint64_t graph_fingerprint = 0;

  double scalar(const std::string& id) const;
  const std::vector<double>& column(const std::string& id) const;
};

// One value per exogenous node instance.
using ExogenousAssignment = Observation;

// Substream for one exogenous instance: (seed, world, node, plate index).
rng::Key exogenous_key(std::uint64_t seed, std::uint64_t world_index,
                       const std::string& node_id, std::size_t plate_index);

std::vector<ExogenousAssignment> sample_exogenous(const ScmGraph& graph,
                                                  std::size_t n_worlds,
                                                  std::uint64_t seed);

World evaluate(const ScmGraph& graph, const ExogenousAssignment& exo,
               std::uint64_t seed = 0, std::uint64_t world_index = 0);

std::vector<World> sample_worlds(const ScmGraph& graph, std::size_t n,
                                 std::uint64_t seed, unsigned jobs = 0);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

Estimate estimate(const ScmGraph& graph,
                  const std::function<double(const World&)>& query,
                  std::size_t n, std::uint64_t seed, unsigned jobs = 0);

Estimate mean_and_se(const std::vector<double>& xs);

void write_worlds_csv(const std::vector<World>& worlds, const ScmGraph& graph,
                      const std::string& path);

// Deterministic helper: runs body(i) for i in [0, n) on up to `jobs`
// threads. Bodies must be independent; results never depend on schedule.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace scmdyn
