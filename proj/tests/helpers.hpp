#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "scmdyn/engine.hpp"
#include "scmdyn/graph.hpp"

namespace testutil {

// Composite Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Exact expectation of query on a graph whose exogenous nodes are all
// unplated Bernoulli: enumerate every noise configuration with its product
// probability and push it through the deterministic equations.
inline double enumerate_binary(const scmdyn::ScmGraph& g,
                               const std::function<double(const scmdyn::World&)>& query) {
  std::vector<std::pair<std::string, double>> exo;  // id, P(bit = 1)
  for (const auto& n : g.nodes)
    if (n.exogenous())
      exo.emplace_back(n.id, std::get<scmdyn::NoisePrior>(n.mech).a);
  double total = 0.0;
  const std::size_t combos = std::size_t{1} << exo.size();
  for (std::size_t bits = 0; bits < combos; ++bits) {
    scmdyn::ExogenousAssignment assign;
    double prob = 1.0;
    for (std::size_t i = 0; i < exo.size(); ++i) {
      const double v = (bits >> i) & 1 ? 1.0 : 0.0;
      prob *= v == 1.0 ? exo[i].second : 1.0 - exo[i].second;
      assign[exo[i].first] = {v};
    }
    if (prob == 0.0) continue;
    total += prob * query(scmdyn::evaluate(g, assign));
  }
  return total;
}

// One-sample Kolmogorov-Smirnov statistic against Uniform(0,1).
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, std::abs((i + 1) / n - xs[i]));
    d = std::max(d, std::abs(xs[i] - i / n));
  }
  return d;
}

}  // namespace testutil
