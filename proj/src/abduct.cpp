#include "scmdyn/abduct.hpp"

#include <cmath>
#include <limits>

#include "scmdyn/errors.hpp"

namespace scmdyn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEdgeTol = 1e-12;

bool value_matches(double computed, double observed, ValueKind kind) {
  if (kind == ValueKind::Real) {
    const double tol = 1e-9 * std::max(1.0, std::abs(observed));
    return std::abs(computed - observed) <= tol;
  }
  return computed == observed;
}

// Intersection of posterior constraints; nullopt = contradiction.
std::optional<Posterior> intersect(const Posterior& a, const Posterior& b) {
  if (a.kind == Posterior::Kind::Unconstrained) return b;
  if (b.kind == Posterior::Kind::Unconstrained) return a;
  if (a.kind == Posterior::Kind::PointMass && b.kind == Posterior::Kind::PointMass)
    return std::abs(a.a - b.a) <= kEdgeTol ? std::optional<Posterior>(a)
                                           : std::nullopt;
  if (a.kind == Posterior::Kind::PointMass || b.kind == Posterior::Kind::PointMass) {
    const Posterior& pm = a.kind == Posterior::Kind::PointMass ? a : b;
    const Posterior& tu = a.kind == Posterior::Kind::PointMass ? b : a;
    if (pm.a >= tu.a - kEdgeTol && pm.a <= tu.b + kEdgeTol) return pm;
    return std::nullopt;
  }
  const double lo = std::max(a.a, b.a);
  const double hi = std::min(a.b, b.b);
  if (lo > hi + kEdgeTol) return std::nullopt;
  if (hi - lo <= kEdgeTol) return Posterior::point(0.5 * (lo + hi));
  return Posterior::truncated_uniform(lo, hi);
}

struct Columns {
  std::map<std::string, std::vector<double>> vals;  // NaN = unknown

  bool known(const std::string& id, std::size_t i) const {
    return !std::isnan(vals.at(id)[i]);
  }
};

}  // namespace

NoisePosterior abduct(const ScmGraph& graph, const Observation& observed) {
  validate_and_order(graph);

  Columns cols;
  for (const auto& node : graph.nodes)
    cols.vals[node.id].assign(graph.instance_count(node), kNaN);
  for (const auto& [id, col] : observed) {
    auto it = cols.vals.find(id);
    if (it == cols.vals.end()) continue;  // observation may carry extra nodes
    if (col.size() != it->second.size())
      throw InconsistentObservationError("column size mismatch for " + id);
    it->second = col;
  }

  NoisePosterior posterior;
  for (const auto& node : graph.nodes) {
    if (!node.exogenous()) continue;
    const auto& prior = std::get<NoisePrior>(node.mech);
    auto& ps = posterior.per_node[node.id];
    ps.assign(graph.instance_count(node), Posterior::unconstrained(prior));
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (cols.known(node.id, i)) ps[i] = Posterior::point(cols.vals[node.id][i]);
  }

  auto constrain = [&](const std::string& exo_id, std::size_t idx,
                       const Posterior& c) -> bool {
    Posterior& cur = posterior.per_node.at(exo_id)[idx];
    auto merged = intersect(cur, c);
    if (!merged)
      throw InconsistentObservationError("contradictory constraints on " +
                                         exo_id);
    const bool changed = merged->kind != cur.kind || merged->a != cur.a ||
                         merged->b != cur.b;
    cur = *merged;
    if (cur.kind == Posterior::Kind::PointMass && !cols.known(exo_id, idx)) {
      cols.vals[exo_id][idx] = cur.a;
      return true;
    }
    return changed;
  };

  bool changed = true;
  std::size_t rounds = 0;
  while (changed && rounds++ <= graph.nodes.size() + 2) {
    changed = false;
    for (const auto& node : graph.nodes) {
      if (node.exogenous()) continue;
      const std::size_t count = graph.instance_count(node);
      if (const auto* eq = std::get_if<Equation>(&node.mech)) {
        std::vector<double> args(eq->inputs.size());
        for (std::size_t i = 0; i < count; ++i) {
          bool all_known = true;
          for (std::size_t p = 0; p < eq->inputs.size(); ++p) {
            const auto& pc = cols.vals.at(eq->inputs[p]);
            args[p] = pc.size() == 1 ? pc[0] : pc[i];
            all_known = all_known && !std::isnan(args[p]);
          }
          const bool out_known = cols.known(node.id, i);
          if (all_known) {
            const double v = eq->fn(args);
            if (out_known) {
              if (!value_matches(v, cols.vals[node.id][i], eq->kind))
                throw InconsistentObservationError(
                    node.id + " disagrees with its mechanism");
            } else {
              cols.vals[node.id][i] = v;
              changed = true;
            }
          }
          if (out_known && eq->invert) {
            auto res = eq->invert(cols.vals[node.id][i], args);
            if (!res)
              throw InconsistentObservationError(
                  "no noise value can produce observed " + node.id);
            for (const auto& c : *res) {
              const std::string& in_id = eq->inputs[c.input_pos];
              const NodeSpec& in_node = graph.at(in_id);
              const std::size_t idx = in_node.plate ? i : 0;
              if (in_node.exogenous()) {
                if (constrain(in_id, idx, c.post)) changed = true;
              } else if (c.post.kind == Posterior::Kind::PointMass &&
                         !cols.known(in_id, idx)) {
                // Inverse through an endogenous parent (e.g. a recovered
                // context); recorded as a known value, not a posterior.
                cols.vals[in_id][idx] = c.post.a;
                changed = true;
              }
            }
          }
        }
      } else {
        const auto& rd = std::get<Reduction>(node.mech);
        bool parents_known = true;
        std::vector<std::span<const double>> parents;
        for (const auto& pid : rd.inputs) {
          const auto& pc = cols.vals.at(pid);
          for (double v : pc) parents_known = parents_known && !std::isnan(v);
          parents.emplace_back(pc);
        }
        if (!parents_known) continue;
        for (std::size_t i = 0; i < count; ++i) {
          const double v = rd.fn(i, parents);
          if (cols.known(node.id, i)) {
            if (!value_matches(v, cols.vals[node.id][i], ValueKind::Real))
              throw InconsistentObservationError(
                  node.id + " disagrees with its reduction");
          } else {
            cols.vals[node.id][i] = v;
            changed = true;
          }
        }
      }
    }
  }
  return posterior;
}

ExogenousAssignment NoisePosterior::sample(const ScmGraph& graph,
                                           std::uint64_t seed,
                                           std::uint64_t draw_index) const {
  ExogenousAssignment exo;
  const rng::Key base = rng::key(seed).with(0x504f5354ull).with(draw_index);
  for (const auto& node : graph.nodes) {
    if (!node.exogenous()) continue;
    const std::size_t count = graph.instance_count(node);
    std::vector<double> col(count);
    auto it = per_node.find(node.id);
    const rng::Key nk = base.with(rng::fnv1a(node.id));
    for (std::size_t i = 0; i < count; ++i) {
      if (it != per_node.end() && i < it->second.size())
        col[i] = it->second[i].sample(nk.with(i));
      else
        col[i] = std::get<NoisePrior>(node.mech).sample(nk.with(i));
    }
    exo.emplace(node.id, std::move(col));
  }
  return exo;
}

std::vector<World> counterfactual_worlds(const ScmGraph& graph,
                                         const Observation& factual,
                                         const Intervention& intervention,
                                         std::size_t m, std::uint64_t seed) {
  const NoisePosterior posterior = abduct(graph, factual);
  const ScmGraph intervened = apply(graph, intervention);
  std::vector<World> out;
  out.reserve(m);
  for (std::size_t d = 0; d < m; ++d)
    out.push_back(
        evaluate(intervened, posterior.sample(intervened, seed, d), seed, d));
  return out;
}

}  // namespace scmdyn
