#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

namespace netmon::econ {

enum class SeType { classical, hc1, cluster };

std::string to_string(SeType se);

struct OlsInput {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;                            // regressors in priority order, intercept included by caller
  std::vector<std::string> names;               // one per column of x
  std::vector<std::vector<std::string>> fe;     // categorical columns expanded to dummies
  std::vector<std::string> fe_names;
  SeType se = SeType::hc1;
  std::vector<std::string> clusters;            // required when se == cluster
  std::string cluster_key;
};

struct RegressionResult {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::MatrixXd vcov;
  SeType se_type = SeType::hc1;
  std::string cluster_key;
  int n_clusters = 0;
  double r2 = 0.0;
  int n = 0;
  int k = 0;
  double ssr = 0.0;
  std::vector<std::string> dropped;

  bool has(const std::string& name) const;
  double coef_of(const std::string& name) const;
  double se_of(const std::string& name) const;
};

void to_json(nlohmann::json& j, const RegressionResult& r);

/// Least squares with dummy-expanded fixed effects (first level of each key
/// is the reference). Rows with a non-finite y or x are dropped. Columns are
/// screened in order and any column in the span of those before it is
/// dropped and reported, so earlier columns take priority.
RegressionResult ols(const OlsInput& input);

/// Indices of columns kept by the ordered collinearity screen.
std::vector<int> independent_columns(const Eigen::MatrixXd& x, double tol = 1e-9);

}  // namespace netmon::econ
