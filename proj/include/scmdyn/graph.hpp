#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scmdyn/rng.hpp"

namespace scmdyn {

enum class ValueKind { Real, Binary, Integer };

struct NoisePrior {
  enum class Family { Uniform, Bernoulli, Gaussian };

  Family family = Family::Uniform;
  double a = 0.0;  // Uniform lo / Bernoulli p / Gaussian mean
  double b = 1.0;  // Uniform hi / Gaussian stddev

  static NoisePrior uniform(double lo, double hi) { return {Family::Uniform, lo, hi}; }
  static NoisePrior bernoulli(double p) { return {Family::Bernoulli, p, 0.0}; }
  static NoisePrior gaussian(double mean, double stddev) { return {Family::Gaussian, mean, stddev}; }

  void validate() const;  // throws InvalidPriorError
  double sample(rng::Key k) const;
  double mean() const;
  double variance() const;
};

// Posterior over one exogenous node instance, produced by abduction.
struct Posterior {
  enum class Kind { PointMass, TruncatedUniform, Unconstrained };

  Kind kind = Kind::Unconstrained;
  double a = 0.0;  // PointMass value / TruncatedUniform lo
  double b = 0.0;  // TruncatedUniform hi
  NoisePrior prior;

  static Posterior point(double v) { return {Kind::PointMass, v, v, {}}; }
  static Posterior truncated_uniform(double lo, double hi) {
    return {Kind::TruncatedUniform, lo, hi, {}};
  }
  static Posterior unconstrained(NoisePrior p) {
    return {Kind::Unconstrained, 0.0, 0.0, p};
  }

  double sample(rng::Key k) const;
};

// One posterior constraint emitted by an equation's analytic inverse:
// "input number `input_pos` must lie in `post`".
struct AbductionConstraint {
  std::size_t input_pos;
  Posterior post;
};

// Deterministic structural equation over scalar parent values. `invert`,
// when present, maps an observed output plus the known parent values
// (NaN = unknown) to posterior constraints on noise inputs; nullopt means
// no noise value can produce the observation.
struct Equation {
  std::vector<std::string> inputs;
  ValueKind kind = ValueKind::Real;
  std::function<double(std::span<const double>)> fn;
  std::function<std::optional<std::vector<AbductionConstraint>>(
      double out, std::span<const double> parents)>
      invert;
  std::string name;    // registered name, used for serialization and equality
  std::string params;  // canonical parameter string

  static Equation constant(double v, ValueKind kind = ValueKind::Real);
};

// Scalar node computed from entire columns of (possibly plated) parents.
// `index` is the node's own plate index; parents arrive as full columns.
struct Reduction {
  std::vector<std::string> inputs;
  std::function<double(std::size_t index,
                       std::span<const std::span<const double>> parents)>
      fn;
  std::string name;
  std::string params;
};

struct NodeSpec {
  std::string id;
  std::optional<std::string> plate;
  std::variant<NoisePrior, Equation, Reduction> mech;
  std::optional<int> step;  // time index for unrolled multi-step models

  bool exogenous() const { return std::holds_alternative<NoisePrior>(mech); }
};

struct ScmGraph {
  std::vector<NodeSpec> nodes;
  std::map<std::string, std::size_t> plates;

  const NodeSpec* find(const std::string& id) const;
  const NodeSpec& at(const std::string& id) const;  // throws UnknownNodeError
  std::size_t instance_count(const NodeSpec& n) const;
  std::vector<std::string> parent_ids(const NodeSpec& n) const;
  std::uint64_t fingerprint() const;
};

// Topological order of node ids with deterministic lexicographic tie-break.
// Validates acyclicity, parent existence, and plate discipline.
std::vector<std::string> validate_and_order(const ScmGraph& graph);

// Exogenous nodes with no endogenous consumer; a warning, not an error.
std::vector<std::string> orphan_exogenous(const ScmGraph& graph);

}  // namespace scmdyn
