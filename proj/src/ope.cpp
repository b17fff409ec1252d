#include "scmdyn/ope.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "scmdyn/errors.hpp"

namespace scmdyn {

LoggedDataset generate_logs(const ScmGraph& graph, const Policy& behavior,
                            const std::vector<std::string>& logged_nodes,
                            std::size_t n, std::uint64_t seed) {
  const ScmGraph logged_graph = apply(graph, behavior.as_intervention());
  const auto worlds = sample_worlds(logged_graph, n, seed);
  LoggedDataset out;
  out.records.reserve(n);
  for (const auto& w : worlds) {
    LoggedRecord rec;
    for (const auto& id : logged_nodes) rec.values[id] = w.column(id);
    const double action = w.scalar(behavior.action_node);
    const double ctx = behavior.context_from_obs(w.values);
    const double p = behavior.prob(ctx, action);
    if (!(p > 0.0 && p <= 1.0))
      throw UnsupportedActionError("behavior probability " + std::to_string(p) +
                                   " for logged action");
    rec.behavior_prob[behavior.action_node] = p;
    out.records.push_back(std::move(rec));
  }
  return out;
}

EvaluationReport value_model_based(const ScmGraph& graph,
                                   const Intervention& target_policy,
                                   const std::function<double(const World&)>& query,
                                   std::size_t n, std::uint64_t seed,
                                   const std::string& estimand) {
  const Estimate est = interventional_estimate(graph, target_policy, query, n, seed);
  EvaluationReport rep;
  rep.method = "MB";
  rep.estimand = estimand;
  rep.mean = est.mean;
  rep.std_error = est.std_error;
  rep.n_used = est.n;
  rep.metadata["seed"] = std::to_string(seed);
  rep.metadata["intervention"] = target_policy.describe();
  return rep;
}

ImportanceSamplingResult value_importance_sampling(
    const LoggedDataset& dataset, const Policy& target_policy,
    const std::function<double(const Observation&)>& query,
    const std::string& estimand) {
  if (dataset.records.empty()) throw EmptyDatasetError("no logged records");
  const std::size_t n = dataset.records.size();
  std::vector<double> w(n), q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = dataset.records[i];
    auto it = rec.behavior_prob.find(target_policy.action_node);
    if (it == rec.behavior_prob.end())
      throw UnsupportedActionError("behavior probability missing for action node " +
                                   target_policy.action_node);
    if (!(it->second > 0.0 && it->second <= 1.0))
      throw UnsupportedActionError("behavior probability outside (0,1]");
    const auto& acol = rec.values.at(target_policy.action_node);
    const double action = acol[0];
    const double ctx = target_policy.context_from_obs(rec.values);
    w[i] = target_policy.prob(ctx, action) / it->second;
    q[i] = query(rec.values);
  }

  double sum_w = 0.0, sum_wq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_w += w[i];
    sum_wq += w[i] * q[i];
  }

  ImportanceSamplingResult res;

  {
    std::vector<double> wq(n);
    for (std::size_t i = 0; i < n; ++i) wq[i] = w[i] * q[i];
    const Estimate est = mean_and_se(wq);
    res.unnormalized = {"IS-unnormalized", estimand, est.mean, est.std_error, n, {}};
  }
  {
    if (sum_w <= 0.0)
      throw UnsupportedActionError("all importance weights are zero");
    const double mu = sum_wq / sum_w;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      ss += w[i] * w[i] * (q[i] - mu) * (q[i] - mu);
    const double se = std::sqrt(ss) / sum_w;  // delta method
    res.self_normalized = {"IS", estimand, mu, se, n, {}};
  }
  return res;
}

EvaluationReport value_counterfactual(
    const ScmGraph& graph, const LoggedDataset& dataset,
    const Policy& target_policy,
    const std::function<double(const World&)>& query, std::size_t m_posterior,
    std::uint64_t seed, const std::string& estimand) {
  if (dataset.records.empty()) throw EmptyDatasetError("no logged records");
  const Intervention target = target_policy.as_intervention();
  std::vector<double> per_world;
  per_world.reserve(dataset.records.size());
  std::size_t inconsistent = 0;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const std::uint64_t rec_seed = rng::key(seed).with(i).state;
    try {
      const auto cfs = counterfactual_worlds(graph, dataset.records[i].values,
                                             target, m_posterior, rec_seed);
      double mean = 0.0;
      for (const auto& w : cfs) mean += query(w);
      per_world.push_back(mean / static_cast<double>(cfs.size()));
    } catch (const InconsistentObservationError&) {
      ++inconsistent;
    }
  }
  if (per_world.empty())
    throw AllWorldsInconsistentError(
        "every logged world is inconsistent with the model");
  const Estimate est = per_world.size() >= 2
                           ? mean_and_se(per_world)
                           : Estimate{per_world[0], 0.0, 1};
  EvaluationReport rep;
  rep.method = "CF";
  rep.estimand = estimand;
  rep.mean = est.mean;
  rep.std_error = est.std_error;
  rep.n_used = per_world.size();
  rep.metadata["excluded_inconsistent"] = std::to_string(inconsistent);
  rep.metadata["m_posterior"] = std::to_string(m_posterior);
  return rep;
}

std::vector<SweepRow> mismatch_sweep(const SweepSpec& spec) {
  if (spec.policies_truth.size() < 2)
    throw InvalidParamsError("mismatch sweep needs at least 2 policies");
  if (spec.policies_truth.size() != spec.policies_model.size())
    throw InvalidParamsError("truth/model policy lists must pair up");

  const std::size_t np = spec.policies_truth.size();
  const auto query_world = [&](const World& w) {
    return w.scalar(spec.query_node);
  };
  const auto query_obs = [&](const Observation& o) {
    return o.at(spec.query_node)[0];
  };

  // Logs per behavior policy and ground truth per target, shared across cells.
  std::vector<LoggedDataset> logs(np);
  std::vector<double> truth_value(np);
  for (std::size_t i = 0; i < np; ++i) {
    logs[i] = generate_logs(spec.truth, spec.policies_truth[i],
                            spec.logged_nodes, spec.n_logs,
                            rng::key(spec.seed).with(0x4c4f47ull).with(i).state);
    truth_value[i] =
        interventional_estimate(spec.truth,
                                spec.policies_truth[i].as_intervention(),
                                query_world, spec.n_eval * spec.truth_factor,
                                rng::key(spec.seed).with(0x545255ull).with(i).state)
            .mean;
  }

  std::vector<SweepRow> rows;
  for (std::size_t mi = 0; mi < spec.models.size(); ++mi) {
    const auto& [label, model] = spec.models[mi];
    for (std::size_t b = 0; b < np; ++b) {
      for (std::size_t t = 0; t < np; ++t) {
        const std::uint64_t cell_seed =
            rng::key(spec.seed).with(mi).with(b * np + t).state;
        for (const auto& method : spec.methods) {
          SweepRow row;
          row.method = method;
          row.model_label = label;
          row.behavior = spec.policies_truth[b].name;
          row.target = spec.policies_truth[t].name;
          row.truth = truth_value[t];
          if (method == "IS") {
            const auto is = value_importance_sampling(
                logs[b], spec.policies_model[t], query_obs, spec.query_node);
            row.estimate = is.self_normalized.mean;
            row.std_error = is.self_normalized.std_error;
          } else if (method == "MB") {
            const auto mb = value_model_based(
                model, spec.policies_model[t].as_intervention(), query_world,
                spec.n_eval, cell_seed, spec.query_node);
            row.estimate = mb.mean;
            row.std_error = mb.std_error;
          } else if (method == "CF") {
            // Abduction must run on the graph that generated the logs: the
            // model with the behavior policy in the decision slot.
            const auto cf = value_counterfactual(
                apply(model, spec.policies_model[b].as_intervention()), logs[b],
                spec.policies_model[t], query_world, spec.m_posterior,
                cell_seed, spec.query_node);
            row.estimate = cf.mean;
            row.std_error = cf.std_error;
          } else {
            throw InvalidParamsError("unknown method " + method);
          }
          row.abs_error = std::abs(row.estimate - row.truth);
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::map<std::string, double> aggregate_mae(const std::vector<SweepRow>& rows) {
  std::map<std::string, double> sum;
  std::map<std::string, std::size_t> count;
  for (const auto& r : rows) {
    sum[r.method] += r.abs_error;
    ++count[r.method];
  }
  std::map<std::string, double> mae;
  for (const auto& [m, s] : sum) mae[m] = s / static_cast<double>(count[m]);
  return mae;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream os(path);
  os << "method,prior_family,sigma,behavior,target,abs_error,std_error\n";
  for (const auto& r : rows) {
    std::string family = r.model_label, sigma;
    if (auto pos = r.model_label.find(':'); pos != std::string::npos) {
      family = r.model_label.substr(0, pos);
      sigma = r.model_label.substr(pos + 1);
    }
    os << r.method << "," << family << "," << sigma << "," << r.behavior << ","
       << r.target << "," << r.abs_error << "," << r.std_error << "\n";
  }
}

void write_reports_csv(const std::vector<EvaluationReport>& reports,
                       const std::string& path) {
  std::ofstream os(path);
  os << "method,estimand,mean,std_error,n_used\n";
  for (const auto& r : reports)
    os << r.method << "," << r.estimand << "," << r.mean << "," << r.std_error
       << "," << r.n_used << "\n";
}

void write_dataset_jsonl(const LoggedDataset& dataset, const std::string& path) {
  std::ofstream os(path);
  std::size_t id = 0;
  for (const auto& rec : dataset.records) {
    nlohmann::json j;
    j["world_id"] = id++;
    for (const auto& [node, col] : rec.values) {
      if (col.size() == 1)
        j["nodes"][node] = col[0];
      else
        j["nodes"][node] = col;
    }
    j["behavior_prob"] = rec.behavior_prob;
    os << j.dump() << "\n";
  }
}

LoggedDataset read_dataset_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw EmptyDatasetError("cannot open " + path);
  LoggedDataset out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    LoggedRecord rec;
    for (const auto& [node, v] : j.at("nodes").items()) {
      if (v.is_array())
        rec.values[node] = v.get<std::vector<double>>();
      else
        rec.values[node] = {v.get<double>()};
    }
    for (const auto& [node, p] : j.at("behavior_prob").items())
      rec.behavior_prob[node] = p.get<double>();
    out.records.push_back(std::move(rec));
  }
  if (out.records.empty()) throw EmptyDatasetError(path + " has no records");
  return out;
}

}  // namespace scmdyn
