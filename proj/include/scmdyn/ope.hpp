#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scmdyn/abduct.hpp"
#include "scmdyn/engine.hpp"
#include "scmdyn/graph.hpp"
#include "scmdyn/intervene.hpp"

namespace scmdyn {

// A decision rule for one action node: the structural equation that
// realizes it, plus the pieces importance sampling needs — the action
// probability pi(a|context) and how to read the context back out of a
// logged record.
struct Policy {
  std::string name;
  std::string action_node;
  Equation equation;
  std::function<double(double context, double action)> prob;
  std::function<double(const Observation&)> context_from_obs;

  Intervention as_intervention() const {
    return Intervention::policy(action_node, equation);
  }
};

struct LoggedRecord {
  Observation values;
  std::map<std::string, double> behavior_prob;  // action node -> pi_obs(a|ctx)
};

struct LoggedDataset {
  std::vector<LoggedRecord> records;
};

struct EvaluationReport {
  std::string method;    // "MB", "IS", "IS-unnormalized", "CF"
  std::string estimand;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_used = 0;
  std::map<std::string, std::string> metadata;
};

// Generate a logged dataset by running `behavior` on `graph`; records the
// listed nodes plus the probability the behavior policy assigned to the
// action actually taken.
LoggedDataset generate_logs(const ScmGraph& graph, const Policy& behavior,
                            const std::vector<std::string>& logged_nodes,
                            std::size_t n, std::uint64_t seed);

EvaluationReport value_model_based(const ScmGraph& graph,
                                   const Intervention& target_policy,
                                   const std::function<double(const World&)>& query,
                                   std::size_t n, std::uint64_t seed,
                                   const std::string& estimand = "query");

struct ImportanceSamplingResult {
  EvaluationReport self_normalized;  // default reported variant
  EvaluationReport unnormalized;
};

ImportanceSamplingResult value_importance_sampling(
    const LoggedDataset& dataset, const Policy& target_policy,
    const std::function<double(const Observation&)>& query,
    const std::string& estimand = "query");

// `graph` must be the model with the behavior policy already in its decision
// slot: each record is abduced against it, so a mechanism that contradicts
// the logged actions marks every record inconsistent.
EvaluationReport value_counterfactual(
    const ScmGraph& graph, const LoggedDataset& dataset,
    const Policy& target_policy,
    const std::function<double(const World&)>& query, std::size_t m_posterior,
    std::uint64_t seed, const std::string& estimand = "query");

// One cell of the model-mismatch protocol.
struct SweepRow {
  std::string method;
  std::string model_label;   // misspecified-prior label
  std::string behavior;
  std::string target;
  double estimate = 0.0;
  double truth = 0.0;
  double abs_error = 0.0;
  double std_error = 0.0;
};

struct SweepSpec {
  ScmGraph truth;
  // Policies indexed in lockstep: truth-side equations act on the true
  // graph, model-side equations on the evaluation graphs.
  std::vector<Policy> policies_truth;
  std::vector<Policy> policies_model;
  std::vector<std::pair<std::string, ScmGraph>> models;
  std::vector<std::string> methods{"IS", "MB", "CF"};
  std::string query_node = "O";
  std::vector<std::string> logged_nodes;
  std::size_t n_logs = 5000;
  std::size_t n_eval = 5000;
  std::size_t m_posterior = 1;
  std::size_t truth_factor = 10;  // ground-truth sample multiplier
  std::uint64_t seed = 0;
};

std::vector<SweepRow> mismatch_sweep(const SweepSpec& spec);

// Aggregate mean absolute error per method.
std::map<std::string, double> aggregate_mae(const std::vector<SweepRow>& rows);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_reports_csv(const std::vector<EvaluationReport>& reports,
                       const std::string& path);

void write_dataset_jsonl(const LoggedDataset& dataset, const std::string& path);
LoggedDataset read_dataset_jsonl(const std::string& path);

}  // namespace scmdyn
