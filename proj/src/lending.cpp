#include "scmdyn/lending.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_randist.h>

#include "scmdyn/equations.hpp"
#include "scmdyn/errors.hpp"

namespace scmdyn::lending {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string step_id(const char* base, std::size_t t) {
  return std::string(base) + std::to_string(t);
}

}  // namespace

GroupCurves GroupModel::beta_logistic(double alpha, double beta, double rho_mid,
                                      double rho_scale, double lo, double hi) {
  const double span = hi - lo;
  GroupCurves c;
  c.cdf = [=](double x) {
    const double z = std::clamp((x - lo) / span, 0.0, 1.0);
    return gsl_cdf_beta_P(z, alpha, beta);
  };
  c.quantile = [=](double u) {
    if (!(u >= 0.0 && u <= 1.0))
      throw EquationDomainError("quantile argument outside [0,1]");
    return lo + span * gsl_cdf_beta_Pinv(u, alpha, beta);
  };
  c.rho = [=](double x) { return logistic((x - rho_mid) / rho_scale); };
  c.density = [=](double x) {
    if (x < lo || x > hi) return 0.0;
    return gsl_ran_beta_pdf((x - lo) / span, alpha, beta) / span;
  };
  return c;
}

GroupModel GroupModel::synthetic_default() {
  GroupModel gm;
  gm.theta = 0.5;
  gm.score_lo = 300.0;
  gm.score_hi = 850.0;
  // Group 0 (disadvantaged): lower score distribution, repayment curve
  // centered lower as well. Group 1 (advantaged): higher scores.
  gm.groups[0] = beta_logistic(2.5, 6.0, 530.0, 80.0, gm.score_lo, gm.score_hi);
  gm.groups[1] = beta_logistic(6.0, 3.0, 536.0, 80.0, gm.score_lo, gm.score_hi);
  return gm;
}

GroupModel load_group_model_csv(const std::string& path, double theta) {
  std::ifstream is(path);
  if (!is) throw InvalidParamsError("cannot open curve file " + path);
  std::string header;
  std::getline(is, header);
  std::vector<double> score;
  std::array<std::vector<double>, 2> cdf, rho;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double v[5];
    char comma;
    ls >> v[0];
    for (int i = 1; i < 5; ++i) ls >> comma >> v[i];
    score.push_back(v[0]);
    cdf[0].push_back(v[1]);
    rho[0].push_back(v[2]);
    cdf[1].push_back(v[3]);
    rho[1].push_back(v[4]);
  }
  if (score.size() < 2) throw InvalidParamsError("curve file needs >= 2 rows");
  for (int j = 0; j < 2; ++j) {
    if (!std::is_sorted(cdf[j].begin(), cdf[j].end()))
      throw InvalidParamsError("cdf column must be nondecreasing");
    if (cdf[j].front() != 0.0 || cdf[j].back() != 1.0)
      throw InvalidParamsError("cdf must run from 0 to 1");
  }

  auto interp = [](std::vector<double> xs, std::vector<double> ys) {
    return [xs = std::move(xs), ys = std::move(ys)](double x) {
      if (x <= xs.front()) return ys.front();
      if (x >= xs.back()) return ys.back();
      auto it = std::upper_bound(xs.begin(), xs.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - xs.begin());
      const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
      return ys[i - 1] + w * (ys[i] - ys[i - 1]);
    };
  };

  GroupModel gm;
  gm.theta = theta;
  gm.score_lo = score.front();
  gm.score_hi = score.back();
  for (int j = 0; j < 2; ++j) {
    gm.groups[j].cdf = interp(score, cdf[j]);
    gm.groups[j].quantile = interp(cdf[j], score);
    gm.groups[j].rho = interp(score, rho[j]);
    gm.groups[j].density = {};  // finite differences on demand
  }
  return gm;
}

void LendingParams::validate() const {
  if (!(u_minus < 0.0 && 0.0 < u_plus))
    throw InvalidParamsError("require u_minus < 0 < u_plus");
  if (!(c_minus < 0.0 && 0.0 < c_plus))
    throw InvalidParamsError("require c_minus < 0 < c_plus");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw InvalidParamsError("gamma outside [0,1]");
  if (steps < 1) throw InvalidParamsError("steps must be >= 1");
  if (n_units < 1) throw InvalidParamsError("n_units must be >= 1");
  if (grid_resolution < 2) throw InvalidParamsError("grid too coarse");
}

LendingModel::LendingModel(GroupModel groups, LendingParams params)
    : groups_(std::move(groups)), params_(params) {
  params_.validate();
  if (!(groups_.score_lo < groups_.score_hi))
    throw InvalidParamsError("score bounds must satisfy lo < hi");
  if (!(groups_.theta >= 0.0 && groups_.theta <= 1.0))
    throw InvalidParamsError("theta outside [0,1]");
}

std::string LendingModel::final_score_node() const {
  return step_id("X", params_.steps);
}

Equation LendingModel::outcome_equation(
    std::size_t step, std::function<double(double, int)> rho) const {
  return binary_outcome_equation(
      {step_id("U_Y", step), step_id("X", step), "A"},
      [rho = std::move(rho)](std::span<const double> rest) {
        return rho(rest[0], static_cast<int>(rest[1]));
      },
      "repayment", "step=" + std::to_string(step), params_.literal_logistic);
}

Equation LendingModel::threshold_equation(std::size_t step,
                                          const ThresholdPolicy& policy) const {
  Equation eq;
  eq.inputs = {step_id("U_T", step), step_id("Xhat", step), "A"};
  eq.kind = ValueKind::Binary;
  eq.name = "threshold";
  std::ostringstream ps;
  ps << "tau0=" << policy.tau[0] << ",tau1=" << policy.tau[1]
     << ",gamma=" << policy.gamma;
  eq.params = ps.str();
  const auto tau = policy.tau;
  eq.fn = [tau](std::span<const double> args) {
    const double x = args[1];
    const double t = tau[static_cast<int>(args[2])];
    if (x > t) return 1.0;
    if (x < t) return 0.0;
    return args[0];  // tie-break Bernoulli(gamma)
  };
  eq.invert = [tau](double out, std::span<const double> parents)
      -> std::optional<std::vector<AbductionConstraint>> {
    if (std::isnan(parents[1]) || std::isnan(parents[2]))
      return std::vector<AbductionConstraint>{};
    const double x = parents[1];
    const double t = tau[static_cast<int>(parents[2])];
    if (x > t) return out == 1.0 ? std::optional(std::vector<AbductionConstraint>{})
                                 : std::nullopt;
    if (x < t) return out == 0.0 ? std::optional(std::vector<AbductionConstraint>{})
                                 : std::nullopt;
    return std::vector<AbductionConstraint>{{0, Posterior::point(out)}};
  };
  return eq;
}

ScmGraph LendingModel::build() const {
  const auto& gm = groups_;
  const std::size_t steps = params_.steps;
  ScmGraph g;
  g.plates["unit"] = params_.n_units;
  g.plates["group"] = 2;

  g.nodes.push_back({"U_A", "unit", NoisePrior::bernoulli(gm.theta)});
  g.nodes.push_back({"A", "unit", identity_equation("U_A", ValueKind::Binary)});

  // Initial scores via the inverse-CDF transform.
  g.nodes.push_back({"U_X0", "unit", NoisePrior::uniform(0.0, 1.0), 0});
  {
    Equation x0;
    x0.inputs = {"U_X0", "A"};
    x0.kind = ValueKind::Real;
    x0.name = "score-quantile";
    x0.fn = [gm](std::span<const double> args) {
      return gm.groups[static_cast<int>(args[1])].quantile(args[0]);
    };
    x0.invert = [gm](double out, std::span<const double> parents)
        -> std::optional<std::vector<AbductionConstraint>> {
      if (std::isnan(parents[1])) return std::vector<AbductionConstraint>{};
      const auto& grp = gm.groups[static_cast<int>(parents[1])];
      return std::vector<AbductionConstraint>{{0, Posterior::point(grp.cdf(out))}};
    };
    g.nodes.push_back({"X0", "unit", std::move(x0), 0});
  }

  auto default_rho = [gm](double x, int a) { return gm.groups[a].rho(x); };
  const ThresholdPolicy grant_all{{gm.score_lo - 1.0, gm.score_lo - 1.0},
                                  params_.gamma, Criterion::Manual};

  const double lo = gm.score_lo, hi = gm.score_hi;
  const double cp = params_.c_plus, cm = params_.c_minus;
  const double up = params_.u_plus, um = params_.u_minus;

  for (std::size_t t = 0; t < steps; ++t) {
    const int st = static_cast<int>(t);
    g.nodes.push_back({step_id("Xhat", t), "unit",
                       identity_equation(step_id("X", t)), st});
    g.nodes.push_back({step_id("U_T", t), "unit",
                       NoisePrior::bernoulli(params_.gamma), st});
    g.nodes.push_back({step_id("T", t), "unit",
                       threshold_equation(t, grant_all), st});
    g.nodes.push_back({step_id("U_Y", t), "unit",
                       NoisePrior::uniform(0.0, 1.0), st});
    g.nodes.push_back({step_id("Y", t), "unit",
                       outcome_equation(t, default_rho), st});
    {
      Equation u;
      u.inputs = {step_id("Y", t), step_id("T", t)};
      u.kind = ValueKind::Real;
      u.name = "loan-utility";
      u.fn = [up, um](std::span<const double> args) {
        if (args[1] != 1.0) return 0.0;
        return args[0] == 1.0 ? up : um;
      };
      g.nodes.push_back({step_id("u", t), "unit", std::move(u), st});
    }
    {
      // Recursive score update, clamped to the score bounds.
      Equation xu;
      xu.inputs = {step_id("X", t), step_id("Y", t), step_id("T", t)};
      xu.kind = ValueKind::Real;
      xu.name = "score-update";
      xu.fn = [lo, hi, cp, cm](std::span<const double> args) {
        if (args[2] != 1.0) return args[0];
        return std::clamp(args[0] + (args[1] == 1.0 ? cp : cm), lo, hi);
      };
      g.nodes.push_back({step_id("X", t + 1), "unit", std::move(xu),
                         static_cast<int>(t + 1)});
    }
  }

  {
    Reduction profit;
    for (std::size_t t = 0; t < steps; ++t)
      profit.inputs.push_back(step_id("u", t));
    profit.name = "per-unit-mean-total";
    const double n = static_cast<double>(params_.n_units);
    profit.fn = [n](std::size_t, std::span<const std::span<const double>> ps) {
      double sum = 0.0;
      for (const auto& col : ps)
        for (double v : col) sum += v;
      return sum / n;
    };
    g.nodes.push_back({"profit", std::nullopt, std::move(profit)});
  }
  {
    Reduction delta;
    delta.inputs = {"A", "X0", final_score_node()};
    delta.name = "group-score-change";
    delta.fn = [](std::size_t j, std::span<const std::span<const double>> ps) {
      const auto& a = ps[0];
      const auto& x0 = ps[1];
      const auto& xf = ps[2];
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (static_cast<std::size_t>(a[i]) != j) continue;
        sum += xf[i] - x0[i];
        ++count;
      }
      return count ? sum / static_cast<double>(count) : kNaN;
    };
    g.nodes.push_back({"delta", "group", std::move(delta)});
  }
  validate_and_order(g);
  return g;
}

namespace {

struct GroupGrid {
  std::vector<double> score, rho, per_loan;  // at quantile midpoints
  std::vector<double> tail_profit;           // E[profit per applicant], cut at k
  std::vector<double> tail_rho;
};

GroupGrid make_grid(const GroupCurves& grp, const LendingParams& p,
                    std::size_t G, const std::function<double(double)>& rho_fn) {
  GroupGrid grid;
  grid.score.resize(G);
  grid.rho.resize(G);
  grid.per_loan.resize(G);
  for (std::size_t k = 0; k < G; ++k) {
    const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(G);
    grid.score[k] = grp.quantile(q);
    grid.rho[k] = rho_fn ? rho_fn(grid.score[k]) : grp.rho(grid.score[k]);
    grid.per_loan[k] = p.u_plus * grid.rho[k] + p.u_minus * (1.0 - grid.rho[k]);
  }
  grid.tail_profit.assign(G + 1, 0.0);
  grid.tail_rho.assign(G + 1, 0.0);
  for (std::size_t k = G; k-- > 0;) {
    grid.tail_profit[k] =
        grid.tail_profit[k + 1] + grid.per_loan[k] / static_cast<double>(G);
    grid.tail_rho[k] = grid.tail_rho[k + 1] + grid.rho[k];
  }
  return grid;
}

}  // namespace

ThresholdPolicy LendingModel::compute_thresholds(Criterion criterion) const {
  if (criterion == Criterion::Manual)
    throw InvalidParamsError("Manual criterion has no thresholds to compute");
  const std::size_t G = params_.grid_resolution;
  std::array<GroupGrid, 2> grid = {
      make_grid(groups_.groups[0], params_, G, {}),
      make_grid(groups_.groups[1], params_, G, {})};
  const double theta1 = groups_.theta;
  const double theta0 = 1.0 - theta1;

  ThresholdPolicy policy;
  policy.gamma = params_.gamma;
  policy.criterion = criterion;

  if (criterion == Criterion::MaxProf) {
    for (int j = 0; j < 2; ++j) {
      std::size_t k = 0;
      while (k < G && grid[j].per_loan[k] < 0.0) ++k;
      policy.tau[j] = k < G ? grid[j].score[k] : groups_.score_hi;
    }
    return policy;
  }

  if (criterion == Criterion::DemPar) {
    // Equal selection rates: one shared quantile level for both groups.
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < G; ++k) {
      const double profit =
          theta0 * grid[0].tail_profit[k] + theta1 * grid[1].tail_profit[k];
      if (profit > best) {
        best = profit;
        policy.tau = {grid[0].score[k], grid[1].score[k]};
      }
    }
    return policy;
  }

  // EqOpp: equal true-positive rates within tolerance.
  auto tpr = [&](int j, std::size_t k) {
    return grid[j].tail_rho[k] / grid[j].tail_rho[0];
  };
  double best = -std::numeric_limits<double>::infinity();
  double closest = std::numeric_limits<double>::infinity();
  bool feasible = false;
  for (std::size_t k0 = 0; k0 < G; ++k0) {
    const double target = tpr(0, k0);
    // TPR is nonincreasing in the threshold index.
    std::size_t lo_k = 0, hi_k = G - 1;
    while (lo_k < hi_k) {
      const std::size_t mid = (lo_k + hi_k) / 2;
      if (tpr(1, mid) > target)
        lo_k = mid + 1;
      else
        hi_k = mid;
    }
    std::size_t k1 = lo_k;
    if (lo_k > 0 && std::abs(tpr(1, lo_k - 1) - target) <
                        std::abs(tpr(1, lo_k) - target))
      k1 = lo_k - 1;
    const double gap = std::abs(tpr(1, k1) - target);
    closest = std::min(closest, gap);
    // Negated form so a NaN gap (no repayers in a group) is infeasible.
    if (!(gap <= params_.constraint_tolerance)) continue;
    feasible = true;
    const double profit =
        theta0 * grid[0].tail_profit[k0] + theta1 * grid[1].tail_profit[k1];
    if (profit > best) {
      best = profit;
      policy.tau = {grid[0].score[k0], grid[1].score[k1]};
    }
  }
  if (!feasible) {
    std::ostringstream os;
    os << "no EqOpp grid pair within tolerance " << params_.constraint_tolerance
       << "; closest gap " << closest;
    throw InfeasibleConstraintError(os.str());
  }
  return policy;
}

ThresholdPolicy LendingModel::eqopp_thresholds_from(
    const std::function<double(double)>& rho_bar) const {
  const std::size_t G = params_.grid_resolution;
  std::array<GroupGrid, 2> grid = {
      make_grid(groups_.groups[0], params_, G, rho_bar),
      make_grid(groups_.groups[1], params_, G, rho_bar)};
  const double theta1 = groups_.theta;
  const double theta0 = 1.0 - theta1;

  ThresholdPolicy policy;
  policy.gamma = params_.gamma;
  policy.criterion = Criterion::EqOpp;
  auto tpr = [&](int j, std::size_t k) {
    return grid[j].tail_rho[k] / grid[j].tail_rho[0];
  };
  double best = -std::numeric_limits<double>::infinity();
  double closest = std::numeric_limits<double>::infinity();
  bool feasible = false;
  for (std::size_t k0 = 0; k0 < G; ++k0) {
    const double target = tpr(0, k0);
    std::size_t lo_k = 0, hi_k = G - 1;
    while (lo_k < hi_k) {
      const std::size_t mid = (lo_k + hi_k) / 2;
      if (tpr(1, mid) > target)
        lo_k = mid + 1;
      else
        hi_k = mid;
    }
    std::size_t k1 = lo_k;
    if (lo_k > 0 && std::abs(tpr(1, lo_k - 1) - target) <
                        std::abs(tpr(1, lo_k) - target))
      k1 = lo_k - 1;
    const double gap = std::abs(tpr(1, k1) - target);
    closest = std::min(closest, gap);
    // Negated form so a NaN gap (no repayers in a group) is infeasible.
    if (!(gap <= params_.constraint_tolerance)) continue;
    feasible = true;
    const double profit =
        theta0 * grid[0].tail_profit[k0] + theta1 * grid[1].tail_profit[k1];
    if (profit > best) {
      best = profit;
      policy.tau = {grid[0].score[k0], grid[1].score[k1]};
    }
  }
  if (!feasible)
    throw InfeasibleConstraintError("no feasible pair; closest gap " +
                                    std::to_string(closest));
  return policy;
}

Intervention LendingModel::threshold_intervention(
    const ThresholdPolicy& policy) const {
  ThresholdPolicy clamped = policy;
  for (int j = 0; j < 2; ++j)
    clamped.tau[j] =
        std::clamp(policy.tau[j], groups_.score_lo - 1.0, groups_.score_hi + 1.0);
  std::vector<Intervention> parts;
  for (std::size_t t = 0; t < params_.steps; ++t)
    parts.push_back(
        Intervention::policy(step_id("T", t), threshold_equation(t, clamped)));
  return compose(parts);
}

Intervention LendingModel::credit_bureau_intervention(
    const std::function<double(double)>& transform,
    const std::string& label) const {
  std::vector<Intervention> parts;
  for (std::size_t t = 0; t < params_.steps; ++t) {
    Equation eq;
    eq.inputs = {step_id("X", t)};
    eq.kind = ValueKind::Real;
    eq.name = "bureau";
    eq.params = label;
    eq.fn = [transform](std::span<const double> args) {
      return transform(args[0]);
    };
    parts.push_back(Intervention::policy(step_id("Xhat", t), std::move(eq)));
  }
  return compose(parts);
}

Intervention LendingModel::government_intervention(
    std::array<double, 2> bias) const {
  const auto& gm = groups_;
  auto shifted = [gm, bias](double x, int a) {
    return std::clamp(gm.groups[a].rho(x) + bias[a], 0.0, 1.0);
  };
  // Report how much probability mass the clamp actually touches.
  const std::size_t G = 512;
  std::size_t clamped = 0;
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < G; ++k) {
      const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(G);
      const double r = gm.groups[j].rho(gm.groups[j].quantile(q)) + bias[j];
      if (r < 0.0 || r > 1.0) ++clamped;
    }
  std::vector<Intervention> parts;
  for (std::size_t t = 0; t < params_.steps; ++t) {
    Equation eq = outcome_equation(t, shifted);
    eq.name = "repayment-shift";
    std::ostringstream ps;
    ps << "b0=" << bias[0] << ",b1=" << bias[1]
       << ",clamped_mass=" << static_cast<double>(clamped) / (2.0 * G);
    eq.params = ps.str();
    parts.push_back(Intervention::policy(step_id("Y", t), std::move(eq)));
  }
  return compose(parts);
}

std::function<double(double)> LendingModel::marginal_rho() const {
  const auto& gm = groups_;
  std::array<std::function<double(double)>, 2> density;
  for (int j = 0; j < 2; ++j) {
    if (gm.groups[j].density) {
      density[j] = gm.groups[j].density;
    } else {
      // Finite-difference fallback for tabulated curves.
      const double h = (gm.score_hi - gm.score_lo) * 1e-6;
      auto cdf = gm.groups[j].cdf;
      density[j] = [cdf, h](double x) {
        return (cdf(x + h) - cdf(x - h)) / (2.0 * h);
      };
    }
  }
  const double theta1 = gm.theta, theta0 = 1.0 - gm.theta;
  return [gm, density, theta0, theta1](double x) {
    const double w0 = theta0 * density[0](x);
    const double w1 = theta1 * density[1](x);
    const double total = w0 + w1;
    if (total <= 0.0)
      return theta0 * gm.groups[0].rho(x) + theta1 * gm.groups[1].rho(x);
    return (w0 * gm.groups[0].rho(x) + w1 * gm.groups[1].rho(x)) / total;
  };
}

ThresholdPolicy LendingModel::marginal_threshold_variant() const {
  return eqopp_thresholds_from(marginal_rho());
}

Intervention LendingModel::marginal_outcome_variant() const {
  auto rho_bar = marginal_rho();
  auto rho = [rho_bar](double x, int) { return rho_bar(x); };
  std::vector<Intervention> parts;
  for (std::size_t t = 0; t < params_.steps; ++t) {
    Equation eq = outcome_equation(t, rho);
    eq.name = "repayment-marginal";
    parts.push_back(Intervention::policy(step_id("Y", t), std::move(eq)));
  }
  return compose(parts);
}

namespace {

struct WorldStats {
  double profit;
  std::array<double, 2> delta;
  double clamp_fraction;
};

}  // namespace

LendingEstimates LendingModel::evaluate_policy(const ThresholdPolicy& policy,
                                               const Intervention& extra,
                                               std::size_t n_worlds,
                                               std::uint64_t seed) const {
  if (n_worlds < 2) throw InsufficientSamplesError("need >= 2 worlds");
  const ScmGraph graph =
      apply(build(), compose({threshold_intervention(policy), extra}));
  const auto worlds = sample_worlds(graph, n_worlds, seed);

  std::vector<double> profits;
  std::array<std::vector<double>, 2> deltas;
  double clamp_sum = 0.0;
  for (const auto& w : worlds) {
    profits.push_back(w.scalar("profit"));
    for (int j = 0; j < 2; ++j) {
      const double d = w.column("delta")[j];
      if (!std::isnan(d)) deltas[j].push_back(d);
    }
    std::size_t clamped = 0, total = 0;
    for (std::size_t t = 1; t <= params_.steps; ++t) {
      for (double x : w.column(step_id("X", t))) {
        clamped += (x == groups_.score_lo || x == groups_.score_hi);
        ++total;
      }
    }
    clamp_sum += static_cast<double>(clamped) / static_cast<double>(total);
  }

  LendingEstimates out;
  out.profit = mean_and_se(profits);
  for (int j = 0; j < 2; ++j)
    if (deltas[j].size() >= 2) out.delta[j] = mean_and_se(deltas[j]);
  out.clamp_fraction = clamp_sum / static_cast<double>(n_worlds);
  return out;
}

std::vector<SensitivityRow> LendingModel::robustness_sweep(
    const std::vector<std::size_t>& steps_list, std::size_t n_worlds,
    std::uint64_t seed) const {
  std::vector<SensitivityRow> rows;
  for (std::size_t steps : steps_list) {
    LendingParams p = params_;
    p.steps = steps;
    const LendingModel model(groups_, p);
    const ThresholdPolicy correct = model.compute_thresholds(Criterion::EqOpp);
    const ThresholdPolicy mis_thresholds = model.marginal_threshold_variant();
    const Intervention mis_outcomes = model.marginal_outcome_variant();

    // Paired seeds: the exogenous substreams are keyed by node id, so the
    // same seed drives identical noise through every variant.
    struct Config {
      std::string variant;
      ThresholdPolicy policy;
      Intervention extra;
    };
    const std::vector<Config> variants = {
        {"do(f_T)", mis_thresholds, Intervention::identity()},
        {"do(f_Y)", correct, mis_outcomes},
    };

    const ScmGraph base_graph = apply(
        model.build(), model.threshold_intervention(correct));
    const auto base_worlds = sample_worlds(base_graph, n_worlds, seed);

    for (const auto& cfg : variants) {
      const ScmGraph var_graph =
          apply(model.build(),
                compose({model.threshold_intervention(cfg.policy), cfg.extra}));
      const auto var_worlds = sample_worlds(var_graph, n_worlds, seed);

      std::vector<double> d_profit;
      std::array<std::vector<double>, 2> d_delta;
      for (std::size_t i = 0; i < n_worlds; ++i) {
        d_profit.push_back(var_worlds[i].scalar("profit") -
                           base_worlds[i].scalar("profit"));
        for (int j = 0; j < 2; ++j) {
          const double a = var_worlds[i].column("delta")[j];
          const double b = base_worlds[i].column("delta")[j];
          if (!std::isnan(a) && !std::isnan(b)) d_delta[j].push_back(a - b);
        }
      }
      const Estimate ep = mean_and_se(d_profit);
      rows.push_back({steps, cfg.variant, "profit", std::abs(ep.mean),
                      ep.std_error});
      for (int j = 0; j < 2; ++j) {
        const Estimate ed = mean_and_se(d_delta[j]);
        rows.push_back({steps, cfg.variant, "delta_" + std::to_string(j),
                        std::abs(ed.mean), ed.std_error});
      }
    }
  }
  return rows;
}

void write_policy_csv(
    const std::vector<std::pair<ThresholdPolicy, LendingEstimates>>& rows,
    const std::string& path) {
  std::ofstream os(path);
  os << "criterion,tau_0,tau_1,E_U,se_U,E_delta_0,se_0,E_delta_1,se_1\n";
  for (const auto& [pol, est] : rows) {
    const char* names[] = {"MaxProf", "DemPar", "EqOpp", "Manual"};
    os << names[static_cast<int>(pol.criterion)] << "," << pol.tau[0] << ","
       << pol.tau[1] << "," << est.profit.mean << "," << est.profit.std_error;
    for (int j = 0; j < 2; ++j) {
      if (est.delta[j])
        os << "," << est.delta[j]->mean << "," << est.delta[j]->std_error;
      else
        os << ",,";
    }
    os << "\n";
  }
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const std::string& path) {
  std::ofstream os(path);
  os << "steps,variant,estimand,sensitivity,se\n";
  for (const auto& r : rows)
    os << r.steps << "," << r.variant << "," << r.estimand << ","
       << r.sensitivity << "," << r.std_error << "\n";
}

}  // namespace scmdyn::lending
