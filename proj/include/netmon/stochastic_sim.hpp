#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netmon/game_core.hpp"
#include "netmon/network_spectral.hpp"

namespace netmon::stochastic {

/// Gaussian environment on a graph. Shocks are correlated along `graph`
/// through rho; effort interacts through the row-normalized version of the
/// same graph with strength `lambda`.
struct ShockSpec {
  double sigma2 = 1.0;      // shock variance
  double rho = 0.0;         // network correlation, rho * psi(G) < 1
  double tau2 = 0.0;        // signal noise variance
  double gamma = 1.0;       // effort loading on outcomes
  double omega2 = 0.0;      // outcome noise variance
  double theta_bar = 0.0;   // mean risk state
  double lambda = 0.0;      // effort complementarity, lambda * psi(G_hat) < 1
  double phi = 1.0;         // monitoring effectiveness in (1 + mu phi)
  spectral::Graph graph;

  void validate() const;
};

struct SimResult {
  int reps = 0;
  // Pooled variance of e_i around the deterministic equilibrium over all
  // (replication, unit) draws; estimates V[e_i].
  double cross_var = 0.0;
  // Mean over replications of the within-replication population variance
  // of the effort vector (divide-by-n convention).
  double within_var = 0.0;
  double mean_effort = 0.0;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const SimResult& r);

/// Row-normalized interaction matrix G_hat used in the effort equilibrium.
Eigen::MatrixXd interaction_matrix(const ShockSpec& spec);

/// Sigma_eps = sigma^2 (I - rho G)^{-1} (I - rho G')^{-1}.
Eigen::MatrixXd shock_covariance(const ShockSpec& spec);

/// Solves (I - lambda G_hat) e = (1 + mu phi) 1 + eps.
Eigen::VectorXd equilibrium_with_shocks(const ShockSpec& spec, double mu, const Eigen::VectorXd& eps);

/// V[e_i] on the complete network with independent shocks:
/// sigma^2 [ (1/n)(1-lambda)^-2 + (1 - 1/n)(1 + lambda/(n-1))^-2 ].
double effort_variance_closed_form(int n, double lambda, double sigma2);

/// Replications draw eps (scaled normals, or Cholesky of Sigma_eps when
/// rho > 0), solve the equilibrium and accumulate. Each replication uses its
/// own substream and results are summed pairwise, so the output does not
/// depend on `threads`.
SimResult monte_carlo_variance(const ShockSpec& spec, double mu, int reps, std::uint64_t seed,
                               unsigned threads = 1);

/// E[theta | s] = theta_bar 1 + Sigma_eps (Sigma_eps + tau^2 I)^{-1} (s - theta_bar 1).
Eigen::VectorXd posterior_mean(const ShockSpec& spec, const Eigen::VectorXd& signal);

enum class EffortRule { none, decentralized_plugin, centralized_plugin };
std::string to_string(EffortRule rule);
EffortRule effort_rule_from_string(const std::string& name);

struct OutcomeCovariance {
  Eigen::MatrixXd sigma_y;
  double lambda_max = 0.0;
};

/// Outcome covariance for y = theta + gamma e + xi with the effort rule
///   none:                  e = e_bar 1
///   decentralized_plugin:  e = e_bar 1 + R D_b (s - theta_bar 1),  b_i = S_ii / (S_ii + tau^2)
///   centralized_plugin:    e = e_bar 1 + R S (S + tau^2 I)^{-1} (s - theta_bar 1)
/// where S = Sigma_eps and R = (I - lambda G_hat)^{-1}.
OutcomeCovariance outcome_covariance(const ShockSpec& spec, EffortRule rule);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double largest_eigenvalue(const Eigen::MatrixXd& symmetric, double tol = 1e-15, int max_iter = 200000);

struct AmplificationRow {
  double lambda = 0.0;
  double variance = 0.0;    // closed form on the complete network of size n
  double lambda_max = 0.0;  // largest eigenvalue of Sigma_y under the rule
};

struct AmplificationProfile {
  std::vector<AmplificationRow> rows;
  EffortRule rule = EffortRule::decentralized_plugin;
  std::optional<double> lambda_star;  // centralization threshold for annotation
};

/// Evaluates the profile along an ascending lambda grid. When `model` is
/// given, lambda*(n) for n = graph size is attached as a marker.
AmplificationProfile amplification_profile(const ShockSpec& spec, const std::vector<double>& lambda_grid,
                                           EffortRule rule = EffortRule::decentralized_plugin,
                                           const std::optional<game::ModelParams>& model = std::nullopt);

/// TSV with header "lambda\tvariance\tlambda_max".
std::string to_tsv(const AmplificationProfile& profile);

}  // namespace netmon::stochastic
