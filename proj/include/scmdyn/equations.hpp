#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scmdyn/graph.hpp"

namespace scmdyn {

double logistic(double z);
double logit(double p);

// Binary node Y = 1(U > 1 - p(rest)) with U = inputs[0]; marginally
// P(Y=1) = p(rest). Abduction yields the truncated uniform region of U
// consistent with the observed bit.
//
// With `literal_logistic` set, the threshold is instead
// sigmoid(0.5 - logit(p)), i.e. 1(logit(p) + logit(U) > 0.5). That form
// does not have marginal P(Y=1) = p; it exists as a configuration switch.
Equation binary_outcome_equation(
    std::vector<std::string> inputs,
    std::function<double(std::span<const double> rest)> success_prob,
    std::string name, std::string params, bool literal_logistic = false);

// Binary action A = 1(U < p(context)) with U = inputs.back(); P(A=1) =
// p(context). Abduction constrains U to the region consistent with A.
Equation action_threshold_equation(
    std::vector<std::string> inputs,
    std::function<double(std::span<const double> context)> prob_one,
    std::string name, std::string params);

Equation identity_equation(std::string input, ValueKind kind = ValueKind::Real);

Reduction mean_reduction(std::vector<std::string> inputs);
Reduction sum_reduction(std::vector<std::string> inputs);

}  // namespace scmdyn
