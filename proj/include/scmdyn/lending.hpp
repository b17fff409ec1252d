#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scmdyn/graph.hpp"
#include "scmdyn/intervene.hpp"
#include "scmdyn/ope.hpp"

namespace scmdyn::lending {

// Monotone score distribution and repayment curve for one group.
struct GroupCurves {
  std::function<double(double)> cdf;       // score -> [0,1]
  std::function<double(double)> quantile;  // [0,1] -> score
  std::function<double(double)> rho;       // score -> repayment probability
  std::function<double(double)> density;   // optional; empty = finite diff
};

struct GroupModel {
  double theta = 0.5;  // proportion of the A=1 group
  std::array<GroupCurves, 2> groups;
  double score_lo = 300.0;
  double score_hi = 850.0;

  // Beta-shaped score CDFs rescaled to [lo, hi] with logistic repayment
  // curves; synthetic stand-ins for proprietary bureau statistics.
  static GroupModel synthetic_default();
  static GroupCurves beta_logistic(double alpha, double beta, double rho_mid,
                                   double rho_scale, double lo, double hi);
};

// Tabulated curves: CSV columns score,cdf_0,rho_0,cdf_1,rho_1.
GroupModel load_group_model_csv(const std::string& path, double theta);

struct LendingParams {
  double u_plus = 1.0;
  double u_minus = -4.0;
  double c_plus = 75.0;
  double c_minus = -150.0;
  double gamma = 0.0;  // tie-break probability
  std::size_t n_units = 10000;
  std::size_t steps = 1;
  bool literal_logistic = false;  // paper-style logistic indicator for Y
  double constraint_tolerance = 1e-3;
  std::size_t grid_resolution = 10000;

  void validate() const;
};

enum class Criterion { MaxProf, DemPar, EqOpp, Manual };

struct ThresholdPolicy {
  std::array<double, 2> tau{0.0, 0.0};
  double gamma = 0.0;
  Criterion criterion = Criterion::Manual;
};

struct LendingEstimates {
  Estimate profit;
  std::array<std::optional<Estimate>, 2> delta;  // null when a group is empty
  double clamp_fraction = 0.0;  // share of unit-steps pinned at score bounds
};

struct SensitivityRow {
  std::size_t steps;
  std::string variant;
  std::string estimand;
  double sensitivity;
  double std_error;
};

class LendingModel {
 public:
  LendingModel(GroupModel groups, LendingParams params);

  const GroupModel& groups() const { return groups_; }
  const LendingParams& params() const { return params_; }

  // Unrolled per-unit graph; one step matches the one-step model exactly,
  // steps > 1 chain the recursive score update with fresh U_Y, U_T per
  // step. Bureau score nodes Xhat{t} are identity until intervened on.
  ScmGraph build() const;

  ThresholdPolicy compute_thresholds(Criterion criterion) const;
  // EqOpp thresholds recomputed from a replacement repayment curve shared
  // by both groups (the marginal-statistics mismatch).
  ThresholdPolicy eqopp_thresholds_from(
      const std::function<double(double)>& rho_bar) const;

  Intervention threshold_intervention(const ThresholdPolicy& policy) const;
  Intervention credit_bureau_intervention(
      const std::function<double(double)>& transform,
      const std::string& label) const;
  Intervention government_intervention(std::array<double, 2> bias) const;

  // A-marginalized repayment curve rho_bar(x) = sum_j P(A=j|X=x) rho(x,j).
  std::function<double(double)> marginal_rho() const;
  // The two mismatch variants: (i) thresholds from the marginal curve,
  // (ii) outcomes sampled from the marginal curve.
  ThresholdPolicy marginal_threshold_variant() const;
  Intervention marginal_outcome_variant() const;

  LendingEstimates evaluate_policy(const ThresholdPolicy& policy,
                                   const Intervention& extra,
                                   std::size_t n_worlds,
                                   std::uint64_t seed) const;

  std::vector<SensitivityRow> robustness_sweep(
      const std::vector<std::size_t>& steps_list, std::size_t n_worlds,
      std::uint64_t seed) const;

  std::string final_score_node() const;

 private:
  Equation outcome_equation(std::size_t step,
                            std::function<double(double, int)> rho) const;
  Equation threshold_equation(std::size_t step,
                              const ThresholdPolicy& policy) const;

  GroupModel groups_;
  LendingParams params_;
};

void write_policy_csv(const std::vector<std::pair<ThresholdPolicy, LendingEstimates>>& rows,
                      const std::string& path);
void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const std::string& path);

}  // namespace scmdyn::lending
