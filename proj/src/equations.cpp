#include "scmdyn/equations.hpp"

#include <cmath>
#include <limits>

#include "scmdyn/errors.hpp"

namespace scmdyn {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw EquationDomainError("logit argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

namespace {

double checked_prob(double p, const std::string& name) {
  if (!(p >= 0.0 && p <= 1.0) || std::isnan(p))
    throw EquationDomainError(name + ": probability outside [0,1]");
  return p;
}

bool any_nan(std::span<const double> xs) {
  for (double x : xs)
    if (std::isnan(x)) return true;
  return false;
}

}  // namespace

Equation binary_outcome_equation(
    std::vector<std::string> inputs,
    std::function<double(std::span<const double> rest)> success_prob,
    std::string name, std::string params, bool literal_logistic) {
  Equation eq;
  eq.inputs = std::move(inputs);
  eq.kind = ValueKind::Binary;
  eq.name = std::move(name);
  eq.params = std::move(params);
  auto threshold = [success_prob, literal_logistic,
                    label = eq.name](std::span<const double> rest) {
    const double p = checked_prob(success_prob(rest), label);
    if (!literal_logistic) return 1.0 - p;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    return logistic(0.5 - logit(p));
  };
  eq.fn = [threshold](std::span<const double> args) {
    return args[0] > threshold(args.subspan(1)) ? 1.0 : 0.0;
  };
  eq.invert = [threshold](double out, std::span<const double> parents)
      -> std::optional<std::vector<AbductionConstraint>> {
    if (any_nan(parents.subspan(1))) return std::vector<AbductionConstraint>{};
    const double t = threshold(parents.subspan(1));
    if (out == 1.0) {
      if (t >= 1.0) return std::nullopt;
      return std::vector<AbductionConstraint>{
          {0, Posterior::truncated_uniform(std::max(t, 0.0), 1.0)}};
    }
    if (t <= 0.0) return std::nullopt;
    return std::vector<AbductionConstraint>{
        {0, Posterior::truncated_uniform(0.0, std::min(t, 1.0))}};
  };
  return eq;
}

Equation action_threshold_equation(
    std::vector<std::string> inputs,
    std::function<double(std::span<const double> context)> prob_one,
    std::string name, std::string params) {
  Equation eq;
  const std::size_t n_ctx = inputs.size() - 1;
  eq.inputs = std::move(inputs);
  eq.kind = ValueKind::Binary;
  eq.name = std::move(name);
  eq.params = std::move(params);
  auto prob = [prob_one, label = eq.name](std::span<const double> ctx) {
    return checked_prob(prob_one(ctx), label);
  };
  eq.fn = [prob, n_ctx](std::span<const double> args) {
    return args[n_ctx] < prob(args.first(n_ctx)) ? 1.0 : 0.0;
  };
  eq.invert = [prob, n_ctx](double out, std::span<const double> parents)
      -> std::optional<std::vector<AbductionConstraint>> {
    if (any_nan(parents.first(n_ctx)))
      return std::vector<AbductionConstraint>{};
    const double p = prob(parents.first(n_ctx));
    if (out == 1.0) {
      if (p <= 0.0) return std::nullopt;
      return std::vector<AbductionConstraint>{
          {n_ctx, Posterior::truncated_uniform(0.0, p)}};
    }
    if (p >= 1.0) return std::nullopt;
    return std::vector<AbductionConstraint>{
        {n_ctx, Posterior::truncated_uniform(p, 1.0)}};
  };
  return eq;
}

Equation identity_equation(std::string input, ValueKind kind) {
  Equation eq;
  eq.inputs = {input};
  eq.kind = kind;
  eq.name = "identity";
  eq.fn = [](std::span<const double> args) { return args[0]; };
  eq.invert = [](double out, std::span<const double>)
      -> std::optional<std::vector<AbductionConstraint>> {
    return std::vector<AbductionConstraint>{{0, Posterior::point(out)}};
  };
  return eq;
}

Reduction mean_reduction(std::vector<std::string> inputs) {
  Reduction rd;
  rd.inputs = std::move(inputs);
  rd.name = "mean";
  rd.fn = [](std::size_t, std::span<const std::span<const double>> parents) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& col : parents) {
      for (double v : col) sum += v;
      n += col.size();
    }
    return n ? sum / static_cast<double>(n) : 0.0;
  };
  return rd;
}

Reduction sum_reduction(std::vector<std::string> inputs) {
  Reduction rd;
  rd.inputs = std::move(inputs);
  rd.name = "sum";
  rd.fn = [](std::size_t, std::span<const std::span<const double>> parents) {
    double sum = 0.0;
    for (const auto& col : parents)
      for (double v : col) sum += v;
    return sum;
  };
  return rd;
}

}  // namespace scmdyn
