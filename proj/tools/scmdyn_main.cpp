#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scmdyn/bandit.hpp"
#include "scmdyn/engine.hpp"
#include "scmdyn/errors.hpp"
#include "scmdyn/lending.hpp"
#include "scmdyn/ope.hpp"
#include "scmdyn/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scmdyn;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  json config;
  fs::path out_dir;
  unsigned jobs = 0;
  std::vector<std::pair<std::string, std::string>> manifest_outputs;
  std::vector<std::uint64_t> fingerprints;
};

json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigSchemaError("cannot open config " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigSchemaError(std::string("config parse: ") + e.what());
  }
}

std::uint64_t require_seed(const json& config) {
  if (!config.contains("seed") || !config.at("seed").is_number_unsigned())
    throw ConfigSchemaError("seed: required (explicit, unsigned integer)");
  return config.at("seed").get<std::uint64_t>();
}

std::string model_name(const json& config) {
  if (!config.contains("model"))
    throw ConfigSchemaError("model: required (lending | bandit | custom)");
  const json& m = config.at("model");
  if (m.is_string()) return m.get<std::string>();
  if (m.is_object() && m.contains("custom_graph")) return "custom";
  throw ConfigSchemaError("model: expected a name or {\"custom_graph\": path}");
}

// Outputs land atomically: the writer fills a temp file which is renamed
// into place only on success.
template <typename Writer>
void atomic_write(RunContext& ctx, const std::string& filename, Writer&& write) {
  fs::create_directories(ctx.out_dir);
  const fs::path target = ctx.out_dir / filename;
  const fs::path tmp = ctx.out_dir / (filename + ".tmp");
  write(tmp.string());
  fs::rename(tmp, target);
  std::uint64_t h = rng::fnv1a(filename);
  ctx.manifest_outputs.emplace_back(filename, std::to_string(h));
}

void write_manifest(RunContext& ctx, const std::string& subcommand) {
  json m;
  m["tool"] = "scmdyn";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["config_hash"] = rng::fnv1a(ctx.config.dump());
  m["config"] = ctx.config;
  m["graph_fingerprints"] = ctx.fingerprints;
  json outs = json::array();
  for (const auto& [name, _] : ctx.manifest_outputs) outs.push_back(name);
  m["outputs"] = outs;
  const fs::path tmp = ctx.out_dir / "run_manifest.json.tmp";
  {
    std::ofstream os(tmp);
    os << m.dump(2) << "\n";
  }
  fs::rename(tmp, ctx.out_dir / "run_manifest.json");
}

// ---- bandit plumbing --------------------------------------------------

bandit::BanditParams bandit_params(const json& config) {
  bandit::BanditParams p;
  if (!config.contains("params")) return p;
  const json& pj = config.at("params");
  if (pj.contains("sigma")) p.sigma = pj.at("sigma").get<double>();
  if (pj.contains("prior_family")) {
    const std::string f = pj.at("prior_family").get<std::string>();
    if (f == "uniform")
      p.prior_family = bandit::BanditParams::PriorFamily::Uniform;
    else if (f == "gaussian")
      p.prior_family = bandit::BanditParams::PriorFamily::Gaussian;
    else
      throw ConfigSchemaError("params.prior_family: unknown '" + f + "'");
  }
  if (pj.contains("confounded")) p.confounded = pj.at("confounded").get<bool>();
  if (pj.contains("observation_noise"))
    p.observation_noise = pj.at("observation_noise").get<bool>();
  return p;
}

bandit::PolicyId policy_id(const std::string& name) {
  if (name == "P1") return bandit::PolicyId::P1;
  if (name == "P2") return bandit::PolicyId::P2;
  if (name == "P3") return bandit::PolicyId::P3;
  if (name == "P3-literal") return bandit::PolicyId::P3Literal;
  if (name == "A=0") return bandit::PolicyId::Constant0;
  if (name == "A=1") return bandit::PolicyId::Constant1;
  throw ConfigSchemaError("policy: unknown '" + name + "'");
}

std::vector<bandit::PolicyId> policy_list(const json& config) {
  if (!config.contains("policies"))
    return {bandit::PolicyId::P1, bandit::PolicyId::P2, bandit::PolicyId::P3};
  std::vector<bandit::PolicyId> out;
  for (const auto& p : config.at("policies"))
    out.push_back(policy_id(p.get<std::string>()));
  if (out.empty()) throw ConfigSchemaError("policies: empty list");
  return out;
}

// ---- lending plumbing -------------------------------------------------

lending::LendingParams lending_params(const json& config) {
  lending::LendingParams p;
  if (!config.contains("params")) return p;
  const json& pj = config.at("params");
  auto get = [&](const char* key, auto& field) {
    if (pj.contains(key))
      field = pj.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("u_plus", p.u_plus);
  get("u_minus", p.u_minus);
  get("c_plus", p.c_plus);
  get("c_minus", p.c_minus);
  get("gamma", p.gamma);
  get("n_units", p.n_units);
  get("steps", p.steps);
  get("literal_logistic", p.literal_logistic);
  get("constraint_tolerance", p.constraint_tolerance);
  get("grid_resolution", p.grid_resolution);
  p.validate();
  return p;
}

lending::GroupModel lending_groups(const json& config) {
  if (config.contains("params") && config.at("params").contains("curves_csv")) {
    const json& pj = config.at("params");
    const double theta =
        pj.contains("theta") ? pj.at("theta").get<double>() : 0.5;
    return lending::load_group_model_csv(
        pj.at("curves_csv").get<std::string>(), theta);
  }
  lending::GroupModel gm = lending::GroupModel::synthetic_default();
  if (config.contains("params") && config.at("params").contains("theta"))
    gm.theta = config.at("params").at("theta").get<double>();
  return gm;
}

lending::Criterion criterion_from(const std::string& name) {
  if (name == "MaxProf") return lending::Criterion::MaxProf;
  if (name == "DemPar") return lending::Criterion::DemPar;
  if (name == "EqOpp") return lending::Criterion::EqOpp;
  throw ConfigSchemaError("criterion: unknown '" + name + "'");
}

lending::ThresholdPolicy lending_policy(const lending::LendingModel& model,
                                        const json& config) {
  if (config.contains("tau")) {
    const auto tau = config.at("tau").get<std::vector<double>>();
    if (tau.size() != 2) throw ConfigSchemaError("tau: need two thresholds");
    lending::ThresholdPolicy pol;
    pol.tau = {tau[0], tau[1]};
    pol.gamma = model.params().gamma;
    return pol;
  }
  const std::string crit =
      config.contains("criterion") ? config.at("criterion").get<std::string>()
                                   : "MaxProf";
  return model.compute_thresholds(criterion_from(crit));
}

Intervention lending_extra(const lending::LendingModel& model,
                           const json& config) {
  if (!config.contains("interventions")) return Intervention::identity();
  std::vector<Intervention> parts;
  for (const auto& ij : config.at("interventions")) {
    if (ij.contains("bureau")) {
      const json& bj = ij.at("bureau");
      const std::string kind = bj.at("transform").get<std::string>();
      const double v = bj.at("value").get<double>();
      if (kind == "floor") {
        parts.push_back(model.credit_bureau_intervention(
            [v](double x) { return std::max(x, v); },
            "floor=" + std::to_string(v)));
      } else if (kind == "cap") {
        parts.push_back(model.credit_bureau_intervention(
            [v](double x) { return std::min(x, v); },
            "cap=" + std::to_string(v)));
      } else {
        throw ConfigSchemaError("interventions.bureau.transform: unknown '" +
                                kind + "'");
      }
    } else if (ij.contains("government")) {
      const auto bias =
          ij.at("government").at("bias").get<std::vector<double>>();
      if (bias.size() != 2)
        throw ConfigSchemaError("interventions.government.bias: need 2 values");
      parts.push_back(model.government_intervention({bias[0], bias[1]}));
    } else {
      throw ConfigSchemaError("interventions: need bureau or government");
    }
  }
  return compose(parts);
}

// ---- custom graph plumbing --------------------------------------------

ScmGraph custom_graph(const json& config) {
  const std::string path =
      config.at("model").at("custom_graph").get<std::string>();
  return load_graph_json(path);
}

Intervention custom_interventions(const json& config) {
  if (!config.contains("interventions")) return Intervention::identity();
  return intervention_from_json(config.at("interventions"));
}

// ---- subcommands ------------------------------------------------------

int run_simulate(RunContext& ctx) {
  const json& config = ctx.config;
  const std::uint64_t seed = require_seed(config);
  const std::size_t n =
      config.contains("n") ? config.at("n").get<std::size_t>() : 100;
  const std::string model = model_name(config);

  ScmGraph graph;
  if (model == "bandit") {
    const auto params = bandit_params(config);
    const auto ids = policy_list(config);
    graph = apply(bandit::build_bandit_scm(params),
                  bandit::make_policy(ids.front(), params).as_intervention());
  } else if (model == "lending") {
    const lending::LendingModel lm(lending_groups(config),
                                   lending_params(config));
    graph = apply(lm.build(),
                  compose({lm.threshold_intervention(lending_policy(lm, config)),
                           lending_extra(lm, config)}));
  } else if (model == "custom") {
    graph = apply(custom_graph(config), custom_interventions(config));
  } else {
    throw ConfigSchemaError("model: unknown '" + model + "'");
  }
  ctx.fingerprints.push_back(graph.fingerprint());

  const auto worlds = sample_worlds(graph, n, seed, ctx.jobs);
  atomic_write(ctx, "worlds.csv", [&](const std::string& p) {
    write_worlds_csv(worlds, graph, p);
  });
  write_manifest(ctx, "simulate");
  return 0;
}

int run_evaluate(RunContext& ctx) {
  const json& config = ctx.config;
  const std::uint64_t seed = require_seed(config);
  const std::string model = model_name(config);
  const std::string estimator =
      config.contains("estimator") ? config.at("estimator").get<std::string>()
                                   : "MB";

  if (model == "bandit") {
    const auto params = bandit_params(config);
    const std::size_t n =
        config.contains("n") ? config.at("n").get<std::size_t>() : 5000;
    std::vector<EvaluationReport> reports;
    if (estimator == "MB") {
      reports = bandit::compare_policies_model_based(params, policy_list(config),
                                                     n, seed);
    } else if (estimator == "IS" || estimator == "CF") {
      const auto behavior = bandit::make_policy(
          policy_id(config.at("behavior").get<std::string>()), params);
      const auto target = bandit::make_policy(
          policy_id(config.at("target").get<std::string>()), params);
      const std::size_t n_logs = config.contains("n_logs")
                                     ? config.at("n_logs").get<std::size_t>()
                                     : 5000;
      const ScmGraph graph = bandit::build_bandit_scm(params);
      ctx.fingerprints.push_back(graph.fingerprint());
      const auto logs = generate_logs(graph, behavior, {"A", "O"}, n_logs,
                                      rng::key(seed).with(0x4c4f47ull).state);
      if (estimator == "IS") {
        const auto is = value_importance_sampling(
            logs, target, [](const Observation& o) { return o.at("O")[0]; },
            "E[O] under " + target.name);
        reports = {is.self_normalized, is.unnormalized};
      } else {
        const std::size_t m = config.contains("m_posterior")
                                  ? config.at("m_posterior").get<std::size_t>()
                                  : 1;
        reports = {value_counterfactual(
            apply(graph, behavior.as_intervention()), logs, target,
            [](const World& w) { return w.scalar("O"); }, m,
            rng::key(seed).with(0x4346ull).state, "E[O] under " + target.name)};
      }
    } else {
      throw ConfigSchemaError("estimator: unknown '" + estimator + "'");
    }
    atomic_write(ctx, "reports.csv", [&](const std::string& p) {
      write_reports_csv(reports, p);
    });
  } else if (model == "lending") {
    const lending::LendingModel lm(lending_groups(config),
                                   lending_params(config));
    ctx.fingerprints.push_back(lm.build().fingerprint());
    const Intervention extra = lending_extra(lm, config);
    const std::size_t n_worlds = config.contains("n_worlds")
                                     ? config.at("n_worlds").get<std::size_t>()
                                     : 32;
    std::vector<std::pair<lending::ThresholdPolicy, lending::LendingEstimates>>
        rows;
    if (config.contains("criteria")) {
      for (const auto& cj : config.at("criteria")) {
        const auto pol =
            lm.compute_thresholds(criterion_from(cj.get<std::string>()));
        rows.emplace_back(pol, lm.evaluate_policy(pol, extra, n_worlds, seed));
      }
    } else {
      const auto pol = lending_policy(lm, config);
      rows.emplace_back(pol, lm.evaluate_policy(pol, extra, n_worlds, seed));
    }
    atomic_write(ctx, "policy.csv", [&](const std::string& p) {
      write_policy_csv(rows, p);
    });
  } else if (model == "custom") {
    const ScmGraph graph = custom_graph(config);
    ctx.fingerprints.push_back(graph.fingerprint());
    const std::string query = config.at("query").get<std::string>();
    if (!graph.find(query))
      throw ConfigSchemaError("query: unknown node '" + query + "'");
    const std::size_t n =
        config.contains("n") ? config.at("n").get<std::size_t>() : 5000;
    const auto rep = value_model_based(
        graph, custom_interventions(config),
        [&](const World& w) { return w.scalar(query); }, n, seed,
        "E[" + query + "]");
    atomic_write(ctx, "reports.csv", [&](const std::string& p) {
      write_reports_csv({rep}, p);
    });
  } else {
    throw ConfigSchemaError("model: unknown '" + model + "'");
  }
  write_manifest(ctx, "evaluate");
  return 0;
}

int run_sweep(RunContext& ctx) {
  const json& config = ctx.config;
  const std::uint64_t seed = require_seed(config);
  const std::string model = model_name(config);

  if (model == "bandit") {
    const std::string protocol = config.contains("protocol")
                                     ? config.at("protocol").get<std::string>()
                                     : "misspecified_prior";
    bandit::MismatchProtocol proto;
    if (protocol == "misspecified_prior")
      proto = bandit::MismatchProtocol::MisspecifiedPrior;
    else if (protocol == "omitted_variable")
      proto = bandit::MismatchProtocol::OmittedVariable;
    else
      throw ConfigSchemaError("protocol: unknown '" + protocol + "'");
    const std::size_t n_logs = config.contains("n_logs")
                                   ? config.at("n_logs").get<std::size_t>()
                                   : 5000;
    const std::size_t n_eval = config.contains("n_eval")
                                   ? config.at("n_eval").get<std::size_t>()
                                   : 5000;
    const auto cmp = bandit::compare_ope_methods(proto, bandit_params(config),
                                                 seed, n_logs, n_eval);
    atomic_write(ctx, "sweep.csv", [&](const std::string& p) {
      write_sweep_csv(cmp.rows, p);
    });
    atomic_write(ctx, "mae.csv", [&](const std::string& p) {
      std::ofstream os(p);
      os << "method,mae\n";
      for (const auto& [m, v] : cmp.mae) os << m << "," << v << "\n";
    });
  } else if (model == "lending") {
    const lending::LendingModel lm(lending_groups(config),
                                   lending_params(config));
    std::vector<std::size_t> steps = {1, 2, 3, 4, 5};
    if (config.contains("steps_list"))
      steps = config.at("steps_list").get<std::vector<std::size_t>>();
    const std::size_t n_worlds = config.contains("n_worlds")
                                     ? config.at("n_worlds").get<std::size_t>()
                                     : 16;
    const auto rows = lm.robustness_sweep(steps, n_worlds, seed);
    atomic_write(ctx, "sensitivity.csv", [&](const std::string& p) {
      lending::write_sensitivity_csv(rows, p);
    });
  } else {
    throw ConfigSchemaError("sweep supports lending and bandit models");
  }
  write_manifest(ctx, "sweep");
  return 0;
}

int run_validate(RunContext& ctx) {
  const json& config = ctx.config;
  const std::string model = model_name(config);
  ScmGraph graph;
  if (model == "bandit") {
    graph = bandit::build_bandit_scm(bandit_params(config));
  } else if (model == "lending") {
    graph = lending::LendingModel(lending_groups(config),
                                  lending_params(config))
                .build();
  } else if (model == "custom") {
    graph = apply(custom_graph(config), custom_interventions(config));
  } else {
    throw ConfigSchemaError("model: unknown '" + model + "'");
  }
  const auto order = validate_and_order(graph);
  std::cout << "ok: " << order.size() << " nodes, fingerprint "
            << graph.fingerprint() << "\n";
  for (const auto& id : orphan_exogenous(graph))
    std::cout << "warning: exogenous node " << id << " has no consumer\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SCM simulation and off-policy evaluation runner"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned jobs = 0;
  std::string subcommand;
  for (const char* name : {"simulate", "evaluate", "sweep", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker thread cap");
    sub->callback([&subcommand, name] { subcommand = name; });
  }
  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  try {
    ctx.config = load_config(config_path);
    if (out_dir.empty()) {
      const char* env = std::getenv("SCMDYN_OUT");
      out_dir = env ? env : ".";
    }
    ctx.out_dir = out_dir;
    ctx.jobs = jobs;
    if (subcommand == "simulate") return run_simulate(ctx);
    if (subcommand == "evaluate") return run_evaluate(ctx);
    if (subcommand == "sweep") return run_sweep(ctx);
    return run_validate(ctx);
  } catch (const std::exception& e) {
    json err;
    const std::string what = e.what();
    const auto colon = what.find(": ");
    err["error"] = colon == std::string::npos ? "Error" : what.substr(0, colon);
    err["message"] = what;
    err["subcommand"] = subcommand;
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
