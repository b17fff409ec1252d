#pragma once

#include <string>
#include <vector>

#include "scmdyn/graph.hpp"
#include "scmdyn/ope.hpp"

namespace scmdyn::bandit {

struct BanditParams {
  double sigma = 5.0;
  enum class PriorFamily { Uniform, Gaussian } prior_family = PriorFamily::Uniform;
  // The confounded variant fixes U_c ~ U(0,1) and adds U_h ~ U(-3,3).
  bool confounded = false;
  bool observation_noise = false;

  NoisePrior context_prior() const;
};

// 5-node graph (U_c, U_a, U_o, A, O), or 6-node with U_h. A starts as an
// unset policy slot; O = A(1-c) + (1-A)c with c the effective context.
// U_o is sampled but only enters O when observation_noise is set.
ScmGraph build_bandit_scm(const BanditParams& params);

enum class PolicyId {
  P1,         // noisy optimal
  P2,         // nearly optimal on easy contexts, very noisy otherwise
  P3,         // optimal, resolved argmax form: A = 1 iff context <= 1/2
  P3Literal,  // as printed: A = 1 iff context > 1/2 (anti-optimal)
  Constant0,
  Constant1,
};

Policy make_policy(PolicyId id, const BanditParams& params);

// Effective context recovered from a logged (A, O) pair, falling back to
// summing logged context nodes when the action pair is absent.
double observed_context(const Observation& obs);

std::vector<EvaluationReport> compare_policies_model_based(
    const BanditParams& params, const std::vector<PolicyId>& policies,
    std::size_t n, std::uint64_t seed);

enum class MismatchProtocol { MisspecifiedPrior, OmittedVariable };

struct OpeComparison {
  std::vector<SweepRow> rows;
  std::map<std::string, double> mae;
};

OpeComparison compare_ope_methods(MismatchProtocol protocol,
                                  const BanditParams& params,
                                  std::uint64_t seed,
                                  std::size_t n_logs = 5000,
                                  std::size_t n_eval = 5000);

}  // namespace scmdyn::bandit
