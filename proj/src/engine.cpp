#include "scmdyn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "scmdyn/errors.hpp"

namespace scmdyn {

double World::scalar(const std::string& id) const {
  const auto& col = column(id);
  if (col.size() != 1)
    throw UnknownNodeError(id + " is not a scalar node instance");
  return col[0];
}

const std::vector<double>& World::column(const std::string& id) const {
  auto it = values.find(id);
  if (it == values.end()) throw UnknownNodeError(id + " missing from world");
  return it->second;
}

rng::Key exogenous_key(std::uint64_t seed, std::uint64_t world_index,
                       const std::string& node_id, std::size_t plate_index) {
  return rng::key(seed)
      .with(world_index)
      .with(rng::fnv1a(node_id))
      .with(plate_index);
}

std::vector<ExogenousAssignment> sample_exogenous(const ScmGraph& graph,
                                                  std::size_t n_worlds,
                                                  std::uint64_t seed) {
  validate_and_order(graph);
  std::vector<ExogenousAssignment> out(n_worlds);
  for (std::size_t w = 0; w < n_worlds; ++w) {
    for (const auto& node : graph.nodes) {
      if (!node.exogenous()) continue;
      const auto& prior = std::get<NoisePrior>(node.mech);
      const std::size_t count = graph.instance_count(node);
      std::vector<double> col(count);
      for (std::size_t i = 0; i < count; ++i)
        col[i] = prior.sample(exogenous_key(seed, w, node.id, i));
      out[w].emplace(node.id, std::move(col));
    }
  }
  return out;
}

World evaluate(const ScmGraph& graph, const ExogenousAssignment& exo,
               std::uint64_t seed, std::uint64_t world_index) {
  const auto order = validate_and_order(graph);
  World world;
  world.seed = seed;
  world.world_index = world_index;
  world.graph_fingerprint = graph.fingerprint();

  for (const auto& id : order) {
    const NodeSpec& node = graph.at(id);
    const std::size_t count = graph.instance_count(node);
    if (node.exogenous()) {
      auto it = exo.find(id);
      if (it == exo.end() || it->second.size() != count)
        throw IncompleteExogenousError("no assignment for " + id);
      world.values[id] = it->second;
      continue;
    }
    std::vector<double> col(count);
    if (const auto* eq = std::get_if<Equation>(&node.mech)) {
      std::vector<const std::vector<double>*> parents;
      parents.reserve(eq->inputs.size());
      for (const auto& pid : eq->inputs) parents.push_back(&world.column(pid));
      std::vector<double> args(eq->inputs.size());
      for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t p = 0; p < parents.size(); ++p)
          args[p] = parents[p]->size() == 1 ? (*parents[p])[0] : (*parents[p])[i];
        col[i] = eq->fn(args);
      }
    } else {
      const auto& rd = std::get<Reduction>(node.mech);
      std::vector<std::span<const double>> parents;
      parents.reserve(rd.inputs.size());
      for (const auto& pid : rd.inputs)
        parents.emplace_back(world.column(pid));
      for (std::size_t i = 0; i < count; ++i) col[i] = rd.fn(i, parents);
    }
    world.values[id] = std::move(col);
  }
  return world;
}

void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += jobs) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

std::vector<World> sample_worlds(const ScmGraph& graph, std::size_t n,
                                 std::uint64_t seed, unsigned jobs) {
  auto exo = sample_exogenous(graph, n, seed);
  std::vector<World> worlds(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    worlds[i] = evaluate(graph, exo[i], seed, i);
  });
  return worlds;
}

Estimate mean_and_se(const std::vector<double>& xs) {
  if (xs.size() < 2)
    throw InsufficientSamplesError("need n >= 2 samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size())), xs.size()};
}

Estimate estimate(const ScmGraph& graph,
                  const std::function<double(const World&)>& query,
                  std::size_t n, std::uint64_t seed, unsigned jobs) {
  if (n < 2) throw InsufficientSamplesError("estimate requires n >= 2");
  auto exo = sample_exogenous(graph, n, seed);
  std::vector<double> qs(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    qs[i] = query(evaluate(graph, exo[i], seed, i));
  });
  return mean_and_se(qs);
}

void write_worlds_csv(const std::vector<World>& worlds, const ScmGraph& graph,
                      const std::string& path) {
  std::ofstream os(path);
  os << "world_id,step,plate_index,node_id,value\n";
  for (const auto& w : worlds) {
    for (const auto& node : graph.nodes) {
      auto it = w.values.find(node.id);
      if (it == w.values.end()) continue;
      const int step = node.step.value_or(0);
      for (std::size_t i = 0; i < it->second.size(); ++i)
        os << w.world_index << "," << step << "," << i << "," << node.id << ","
           << it->second[i] << "\n";
    }
  }
}

}  // namespace scmdyn
