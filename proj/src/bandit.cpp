#include "scmdyn/bandit.hpp"

#include <cmath>
#include <sstream>

#include "scmdyn/equations.hpp"
#include "scmdyn/errors.hpp"

namespace scmdyn::bandit {

NoisePrior BanditParams::context_prior() const {
  if (confounded) return NoisePrior::uniform(0.0, 1.0);
  if (sigma <= 0.0) throw InvalidParamsError("sigma must be positive");
  if (prior_family == PriorFamily::Uniform)
    return NoisePrior::uniform((1.0 - sigma) / 2.0, (1.0 + sigma) / 2.0);
  return NoisePrior::gaussian(0.0, sigma);
}

ScmGraph build_bandit_scm(const BanditParams& params) {
  ScmGraph g;
  g.nodes.push_back({"U_c", std::nullopt, params.context_prior()});
  if (params.confounded)
    g.nodes.push_back({"U_h", std::nullopt, NoisePrior::uniform(-3.0, 3.0)});
  g.nodes.push_back({"U_a", std::nullopt, NoisePrior::uniform(0.0, 1.0)});
  g.nodes.push_back({"U_o", std::nullopt, NoisePrior::gaussian(0.0, 1.0)});

  // Policy slot; replaced by do(f_A -> pi) before sampling.
  Equation slot = Equation::constant(0.0, ValueKind::Binary);
  slot.name = "unset-policy";
  g.nodes.push_back({"A", std::nullopt, std::move(slot)});

  // O = A (1 - c) + (1 - A) c with c the sum of context inputs.
  Equation o;
  o.inputs = {"A", "U_c"};
  if (params.confounded) o.inputs.push_back("U_h");
  if (params.observation_noise) o.inputs.push_back("U_o");
  const bool confounded = params.confounded;
  const bool obs_noise = params.observation_noise;
  const std::size_t n_ctx = confounded ? 2 : 1;
  o.kind = ValueKind::Real;
  o.name = obs_noise ? "bandit-feedback-noisy" : "bandit-feedback";
  o.fn = [n_ctx, obs_noise](std::span<const double> args) {
    double c = 0.0;
    for (std::size_t i = 0; i < n_ctx; ++i) c += args[1 + i];
    double out = args[0] == 1.0 ? 1.0 - c : c;
    if (obs_noise) out += args[1 + n_ctx];
    return out;
  };
  if (!obs_noise) {
    // c is identified from (A, O); attribute it to whichever context
    // input is still unknown once the others are pinned down.
    o.invert = [n_ctx](double out, std::span<const double> parents)
        -> std::optional<std::vector<AbductionConstraint>> {
      if (std::isnan(parents[0])) return std::vector<AbductionConstraint>{};
      const double c = parents[0] == 1.0 ? 1.0 - out : out;
      double known_sum = 0.0;
      std::size_t unknown = 0, unknown_pos = 0;
      for (std::size_t i = 0; i < n_ctx; ++i) {
        if (std::isnan(parents[1 + i])) {
          ++unknown;
          unknown_pos = 1 + i;
        } else {
          known_sum += parents[1 + i];
        }
      }
      if (unknown != 1) return std::vector<AbductionConstraint>{};
      return std::vector<AbductionConstraint>{
          {unknown_pos, Posterior::point(c - known_sum)}};
    };
  }
  g.nodes.push_back({"O", std::nullopt, std::move(o)});
  validate_and_order(g);
  return g;
}

namespace {

double policy_prob_one(PolicyId id, double c) {
  switch (id) {
    case PolicyId::P1:
      return c > 0.5 ? 0.25 : 0.75;
    case PolicyId::P2:
      if (c > 0.75) return 0.1;
      if (c < 0.25) return 0.9;
      return 0.5;
    case PolicyId::P3:
      return c <= 0.5 ? 1.0 : 0.0;
    case PolicyId::P3Literal:
      return c > 0.5 ? 1.0 : 0.0;
    case PolicyId::Constant0:
      return 0.0;
    case PolicyId::Constant1:
      return 1.0;
  }
  return 0.0;
}

std::string policy_name(PolicyId id) {
  switch (id) {
    case PolicyId::P1: return "P1";
    case PolicyId::P2: return "P2";
    case PolicyId::P3: return "P3";
    case PolicyId::P3Literal: return "P3-literal";
    case PolicyId::Constant0: return "A=0";
    case PolicyId::Constant1: return "A=1";
  }
  return "?";
}

}  // namespace

double observed_context(const Observation& obs) {
  auto a = obs.find("A");
  auto o = obs.find("O");
  if (a != obs.end() && o != obs.end())
    return a->second[0] == 1.0 ? 1.0 - o->second[0] : o->second[0];
  double c = 0.0;
  bool found = false;
  for (const char* id : {"U_c", "U_h"}) {
    auto it = obs.find(id);
    if (it != obs.end()) {
      c += it->second[0];
      found = true;
    }
  }
  if (!found) throw UnknownNodeError("cannot recover bandit context");
  return c;
}

Policy make_policy(PolicyId id, const BanditParams& params) {
  Policy pol;
  pol.name = policy_name(id);
  pol.action_node = "A";
  std::vector<std::string> inputs = {"U_c"};
  if (params.confounded) inputs.push_back("U_h");
  inputs.push_back("U_a");
  pol.equation = action_threshold_equation(
      std::move(inputs),
      [id](std::span<const double> ctx) {
        double c = 0.0;
        for (double v : ctx) c += v;
        return policy_prob_one(id, c);
      },
      "policy", pol.name);
  pol.prob = [id](double c, double action) {
    const double p1 = policy_prob_one(id, c);
    return action == 1.0 ? p1 : 1.0 - p1;
  };
  pol.context_from_obs = observed_context;
  return pol;
}

std::vector<EvaluationReport> compare_policies_model_based(
    const BanditParams& params, const std::vector<PolicyId>& policies,
    std::size_t n, std::uint64_t seed) {
  const ScmGraph g = build_bandit_scm(params);
  std::vector<EvaluationReport> out;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const Policy pol = make_policy(policies[i], params);
    auto rep = value_model_based(
        g, pol.as_intervention(), [](const World& w) { return w.scalar("O"); },
        n, rng::key(seed).with(i).state, "E[O] under " + pol.name);
    rep.metadata["policy"] = pol.name;
    out.push_back(std::move(rep));
  }
  return out;
}

OpeComparison compare_ope_methods(MismatchProtocol protocol,
                                  const BanditParams& params,
                                  std::uint64_t seed, std::size_t n_logs,
                                  std::size_t n_eval) {
  SweepSpec spec;
  spec.query_node = "O";
  spec.logged_nodes = {"A", "O"};
  spec.n_logs = n_logs;
  spec.n_eval = n_eval;
  spec.seed = seed;

  const std::vector<PolicyId> ids = {PolicyId::P1, PolicyId::P2, PolicyId::P3};

  if (protocol == MismatchProtocol::MisspecifiedPrior) {
    spec.truth = build_bandit_scm(params);
    for (PolicyId id : ids) {
      spec.policies_truth.push_back(make_policy(id, params));
      spec.policies_model.push_back(make_policy(id, params));
    }
    for (double sigma : {1.0, 3.0, 7.0, 9.0}) {
      for (auto family : {BanditParams::PriorFamily::Uniform,
                          BanditParams::PriorFamily::Gaussian}) {
        BanditParams mis = params;
        mis.sigma = sigma;
        mis.prior_family = family;
        std::ostringstream label;
        label << (family == BanditParams::PriorFamily::Uniform ? "uniform"
                                                               : "gaussian")
              << ":" << sigma;
        spec.models.emplace_back(label.str(), build_bandit_scm(mis));
      }
    }
  } else {
    BanditParams truth_params = params;
    truth_params.confounded = true;
    spec.truth = build_bandit_scm(truth_params);
    BanditParams model_params = params;
    model_params.confounded = false;
    model_params.sigma = 1.0;  // model context prior: U_c ~ U(0,1)
    model_params.prior_family = BanditParams::PriorFamily::Uniform;
    for (PolicyId id : ids) {
      spec.policies_truth.push_back(make_policy(id, truth_params));
      spec.policies_model.push_back(make_policy(id, model_params));
    }
    spec.models.emplace_back("omitted_variable:", build_bandit_scm(model_params));
  }

  OpeComparison out;
  out.rows = mismatch_sweep(spec);
  out.mae = aggregate_mae(out.rows);
  return out;
}

}  // namespace scmdyn::bandit
