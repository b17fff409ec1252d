#include "scmdyn/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "scmdyn/errors.hpp"

namespace scmdyn {

void NoisePrior::validate() const {
  switch (family) {
    case Family::Uniform:
      if (!(a < b)) throw InvalidPriorError("Uniform requires lo < hi");
      break;
    case Family::Bernoulli:
      if (!(a >= 0.0 && a <= 1.0))
        throw InvalidPriorError("Bernoulli requires 0 <= p <= 1");
      break;
    case Family::Gaussian:
      if (!(b >= 0.0)) throw InvalidPriorError("Gaussian requires stddev >= 0");
      break;
  }
}

double NoisePrior::sample(rng::Key k) const {
  switch (family) {
    case Family::Uniform:
      return a + rng::uniform01(k) * (b - a);
    case Family::Bernoulli:
      return rng::uniform01(k) < a ? 1.0 : 0.0;
    case Family::Gaussian:
      return a + b * rng::gaussian(k);
  }
  return 0.0;
}

double NoisePrior::mean() const {
  switch (family) {
    case Family::Uniform:
      return 0.5 * (a + b);
    case Family::Bernoulli:
    case Family::Gaussian:
      return a;
  }
  return 0.0;
}

double NoisePrior::variance() const {
  switch (family) {
    case Family::Uniform:
      return (b - a) * (b - a) / 12.0;
    case Family::Bernoulli:
      return a * (1.0 - a);
    case Family::Gaussian:
      return b * b;
  }
  return 0.0;
}

double Posterior::sample(rng::Key k) const {
  switch (kind) {
    case Kind::PointMass:
      return a;
    case Kind::TruncatedUniform:
      return a + rng::uniform01(k) * (b - a);
    case Kind::Unconstrained:
      return prior.sample(k);
  }
  return 0.0;
}

Equation Equation::constant(double v, ValueKind kind) {
  Equation eq;
  eq.kind = kind;
  eq.fn = [v](std::span<const double>) { return v; };
  eq.name = "constant";
  std::ostringstream os;
  os << v;
  eq.params = os.str();
  return eq;
}

const NodeSpec* ScmGraph::find(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const NodeSpec& ScmGraph::at(const std::string& id) const {
  const NodeSpec* n = find(id);
  if (!n) throw UnknownNodeError(id);
  return *n;
}

std::size_t ScmGraph::instance_count(const NodeSpec& n) const {
  if (!n.plate) return 1;
  auto it = plates.find(*n.plate);
  if (it == plates.end()) throw PlateMismatchError("undeclared plate " + *n.plate);
  return it->second;
}

std::vector<std::string> ScmGraph::parent_ids(const NodeSpec& n) const {
  if (const auto* eq = std::get_if<Equation>(&n.mech)) return eq->inputs;
  if (const auto* rd = std::get_if<Reduction>(&n.mech)) return rd->inputs;
  return {};
}

std::uint64_t ScmGraph::fingerprint() const {
  std::ostringstream os;
  for (const auto& [p, s] : plates) os << "plate:" << p << "=" << s << ";";
  for (const auto& n : nodes) {
    os << "node:" << n.id << ":" << (n.plate ? *n.plate : "-") << ":";
    if (const auto* pr = std::get_if<NoisePrior>(&n.mech)) {
      os << "prior:" << static_cast<int>(pr->family) << ":" << pr->a << ":" << pr->b;
    } else if (const auto* eq = std::get_if<Equation>(&n.mech)) {
      os << "eq:" << eq->name << "(" << eq->params << ")";
      for (const auto& in : eq->inputs) os << "<" << in;
    } else if (const auto* rd = std::get_if<Reduction>(&n.mech)) {
      os << "red:" << rd->name << "(" << rd->params << ")";
      for (const auto& in : rd->inputs) os << "<" << in;
    }
    os << ";";
  }
  return rng::fnv1a(os.str());
}

namespace {

// Plate discipline: a pointwise equation may read parents on its own plate
// or unplated parents; any cross-plate read must go through a Reduction.
void check_plates(const ScmGraph& g) {
  for (const auto& n : g.nodes) g.instance_count(n);
  for (const auto& n : g.nodes) {
    if (const auto* eq = std::get_if<Equation>(&n.mech)) {
      for (const auto& pid : eq->inputs) {
        const NodeSpec& p = g.at(pid);
        if (p.plate && p.plate != n.plate)
          throw PlateMismatchError(n.id + " reads " + pid +
                                   " across plates without a reduction");
      }
    }
  }
  for (const auto& [pid, size] : g.plates) {
    (void)size;
    if (pid.empty()) throw PlateMismatchError("empty plate id");
  }
}

}  // namespace

std::vector<std::string> validate_and_order(const ScmGraph& graph) {
  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, std::size_t> indegree;
  for (const auto& n : graph.nodes) {
    if (indegree.count(n.id))
      throw DanglingParentError("duplicate node id " + n.id);
    indegree[n.id] = 0;
  }
  for (const auto& n : graph.nodes) {
    for (const auto& pid : graph.parent_ids(n)) {
      if (!graph.find(pid))
        throw DanglingParentError(n.id + " depends on unknown node " + pid);
      children[pid].push_back(n.id);
      ++indegree[n.id];
    }
    if (n.exogenous()) std::get<NoisePrior>(n.mech).validate();
  }
  check_plates(graph);

  std::set<std::string> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.insert(id);

  std::vector<std::string> order;
  order.reserve(graph.nodes.size());
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& c : children[id])
      if (--indegree[c] == 0) ready.insert(c);
  }
  if (order.size() != graph.nodes.size()) {
    // Recover one cycle for the error message by walking unresolved nodes.
    std::string start;
    for (const auto& [id, deg] : indegree)
      if (deg > 0) { start = id; break; }
    std::vector<std::string> path{start};
    std::set<std::string> seen{start};
    std::string cur = start;
    while (true) {
      std::string next;
      for (const auto& pid : graph.parent_ids(graph.at(cur)))
        if (indegree[pid] > 0) { next = pid; break; }
      if (next.empty() || seen.count(next)) {
        path.push_back(next.empty() ? cur : next);
        break;
      }
      path.push_back(next);
      seen.insert(next);
      cur = next;
    }
    std::string msg = "cycle:";
    for (auto it = path.rbegin(); it != path.rend(); ++it) msg += " " + *it;
    throw CycleError(msg);
  }
  return order;
}

std::vector<std::string> orphan_exogenous(const ScmGraph& graph) {
  std::set<std::string> consumed;
  for (const auto& n : graph.nodes)
    for (const auto& pid : graph.parent_ids(n)) consumed.insert(pid);
  std::vector<std::string> orphans;
  for (const auto& n : graph.nodes)
    if (n.exogenous() && !consumed.count(n.id)) orphans.push_back(n.id);
  return orphans;
}

}  // namespace scmdyn
