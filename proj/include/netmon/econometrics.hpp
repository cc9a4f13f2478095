#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netmon/linear_model.hpp"
#include "netmon/panel.hpp"

namespace netmon::econ {

using data::FacilityPanel;

enum class GroupKey { county, chain };
std::string to_string(GroupKey key);
GroupKey group_key_from_string(const std::string& name);

/// Facility-level derived columns, aligned with panel.records.
struct DerivedColumns {
  std::vector<double> chain_size;   // NaN for independent facilities
  std::vector<double> nh_total;
  std::vector<double> in_chain;
  std::vector<double> large_chain;  // 0 for independent facilities
  std::vector<double> large_county;
  std::vector<double> delta_def;
};

DerivedColumns derive_columns(const FacilityPanel& panel, int county_cutoff = 7, int chain_cutoff = 34);

/// Numeric facility column by name: beds, overall_rating, staffing_rating,
/// def_total, def_total_prev, sff, sff_candidate, delta_def.
std::vector<double> outcome_column(const FacilityPanel& panel, const std::string& name);

/// Group key per record; empty string when the facility has no chain.
std::vector<std::string> group_keys(const FacilityPanel& panel, GroupKey key);

/// Leave-one-out group means. Rows with an empty key, a non-finite value or
/// a singleton group get NaN. Non-finite values do not count toward groups.
std::vector<double> peer_means(const std::vector<std::string>& keys, const std::vector<double>& values);
std::vector<double> peer_means(const FacilityPanel& panel, GroupKey key, const std::string& column);

enum class Sample { full, below, above };
std::string to_string(Sample s);

struct SpilloverSpec {
  std::string outcome = "overall_rating";
  GroupKey level = GroupKey::county;  // chain level adds chain peers and keeps chain rows only
  Sample sample = Sample::full;       // split on the level's network size
  int county_cutoff = 7;
  int chain_cutoff = 34;
  bool state_fe = true;
};

/// Outcome on leave-one-out peer means plus beds, ownership dummies (for-profit
/// reference) and chain membership; state effects; clustered by the level's group.
RegressionResult spillover_regression(const FacilityPanel& panel, const SpilloverSpec& spec);

struct KinkFit {
  std::vector<std::string> names;  // intercept, x, hinge, controls..., dropped ones removed
  Eigen::VectorXd coef;
  double ssr = 0.0;
  std::vector<std::string> dropped;
};

/// Least squares of y on [1, x, max(0, x - c), controls].
KinkFit kink_fit(const Eigen::VectorXd& y, const Eigen::VectorXd& x, const Eigen::MatrixXd& controls, double c);

struct BreakOptions {
  double lo_quantile = 0.10;
  double hi_quantile = 0.90;
  int min_distinct = 10;
  int bootstrap_reps = 0;  // 0 disables the bootstrap
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct BreakResult {
  double c_hat = 0.0;
  double f_max = 0.0;
  std::vector<std::pair<double, double>> f_profile;  // (c, F(c)) ascending in c
  double beta1 = 0.0;
  double beta2 = 0.0;
  double n_star = 0.0;  // exp(c_hat)
  double ssr0 = 0.0;
  double ssr1 = 0.0;
  int df1 = 0;
  std::optional<double> p_value;
  int bootstrap_reps = 0;
};

void to_json(nlohmann::json& j, const BreakResult& r);
std::string profile_tsv(const BreakResult& r);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double p);

/// Unique x in [q_lo, q_hi], excluding min(x) and max(x) where the hinge
/// is collinear with the linear terms.
std::vector<double> break_candidates(const Eigen::VectorXd& x, const BreakOptions& options);

/// Grid search over break_candidates for the sup-F single kink. Ties go to
/// the smallest c. With bootstrap_reps > 0, adds the residual-bootstrap p-value.
BreakResult break_search(const Eigen::VectorXd& y, const Eigen::VectorXd& x, const Eigen::MatrixXd& controls,
                         const BreakOptions& options = {});

/// Parametric residual bootstrap p-value (1 + #{F_b >= F_obs}) / (B + 1).
double bootstrap_supf(const Eigen::VectorXd& y, const Eigen::VectorXd& x, const Eigen::MatrixXd& controls, int reps,
                      std::uint64_t seed, const BreakOptions& options = {});

enum class LeveneCenter { mean, median };

struct LeveneResult {
  double w = 0.0;
  double p_value = 1.0;
  int df1 = 0;
  int df2 = 0;
};

LeveneResult levene_test(const std::vector<double>& values, const std::vector<int>& groups,
                         LeveneCenter center = LeveneCenter::mean);

/// Upper tail of F(d1, d2) at w via the regularized incomplete beta.
double f_upper_tail(double w, double d1, double d2);

struct VarianceRow {
  std::string outcome;
  int n_small = 0;
  int n_large = 0;
  double var_small = 0.0;
  double var_large = 0.0;
  double levene_w = 0.0;
  double p_value = 1.0;
};

/// Splits at size <= cutoff vs > cutoff on the chosen network size. Chain
/// splits use chain-affiliated rows only.
std::vector<VarianceRow> variance_by_threshold(const FacilityPanel& panel, GroupKey size_key, int cutoff,
                                               const std::vector<std::string>& outcomes,
                                               LeveneCenter center = LeveneCenter::mean);

struct DeteriorationSpec {
  int county_cutoff = 7;
  int chain_cutoff = 34;
  bool state_fe = true;
  SeType se = SeType::hc1;
};

/// delta_def on large_chain, large_county, beds, ownership dummies, in_chain, state effects.
RegressionResult deterioration_regression(const FacilityPanel& panel, const DeteriorationSpec& spec = {});

/// One row per county or chain.
struct GroupTable {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<double>> columns;  // n, sff, share_*, avg_*
  std::vector<std::string> states;                      // modal state per group

  const std::vector<double>& column(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;
};

GroupTable aggregate(const FacilityPanel& panel, GroupKey key);
std::string to_csv(const GroupTable& table);

}  // namespace netmon::econ
