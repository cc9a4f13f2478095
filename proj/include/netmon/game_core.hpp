#pragma once

#include <optional>
#include <string>
#include <vector>

namespace netmon::game {

// How the decentralized regime pays for monitoring.
//   global:   one regulator pays K_D mu^2 / 2 for the whole network.
//   per_unit: each local monitor pays K_D mu_i^2 / 2 for its own unit, which
//             makes decentralized welfare affine in n.
// The centralized regime always uses the global accounting.
enum class CostMode { global, per_unit };

enum class Regime { centralized, decentralized };

std::string to_string(CostMode mode);
CostMode cost_mode_from_string(const std::string& name);

struct ModelParams {
  double phi = 1.0;       // monitoring effectiveness
  double k_d = 1.0;       // decentralized cost
  double k_c = 2.0;       // centralized cost
  double lambda_d = 0.0;  // decentralized complementarity
  double lambda_c = 0.5;  // centralized complementarity
  int n = 2;
  CostMode cost_mode = CostMode::global;

  // Full check: 0 <= lambda_d < lambda_c < 1, phi > 0, 0 < k_d <= k_c, n >= 2.
  void validate() const;
  // Same as validate() but ignores lambda_c beyond lambda_c < 1 (used where
  // lambda_c is the unknown being solved for).
  void validate_without_lambda_c() const;
};

struct RegimeSolution {
  double mu_star = 0.0;
  double effort = 0.0;
  double welfare = 0.0;
};

/// Symmetric equilibrium effort (1 + mu*phi) / (1 - lambda).
double equilibrium_effort(double mu, double lambda, double phi);

double optimal_mu(const ModelParams& params, Regime regime);
double optimal_welfare(const ModelParams& params, Regime regime);
RegimeSolution solve_regime(const ModelParams& params, Regime regime);

/// W_C* - W_D* under the configured cost mode.
double welfare_gap(const ModelParams& params);

inline constexpr double kLambdaTolerance = 1e-10;
inline constexpr double kLambdaCap = 1.0 - 1e-9;

/// Centralization threshold in lambda_c for the network size params.n.
/// params.lambda_c is ignored. Bisects on [lambda_d, 1 - 1e-9] until the
/// bracket stops shrinking, so |gap(lambda*)| is at rounding level.
/// Throws NumericalError when the gap is already positive at lambda_d.
double lambda_star(const ModelParams& params, double tol = kLambdaTolerance);

enum class NStarKind { always_centralize, never_centralize, centralize_above, centralize_below };
std::string to_string(NStarKind kind);

struct NStarClassification {
  NStarKind kind = NStarKind::never_centralize;
  double n_star = 0.0;  // real boundary, meaningful for the *_above/_below kinds
  double linear_coef = 0.0;     // gap(n) = n * (linear_coef + quadratic_coef * n)
  double quadratic_coef = 0.0;

  // True when centralization strictly dominates at integer size n >= 2.
  bool centralizes_at(int n) const;
};

inline constexpr int kDefaultNMax = 10000;

/// Network-size threshold for fixed (lambda_d, lambda_c). params.n is ignored.
/// The analytic classification is cross-checked against an integer scan of
/// welfare_gap over [2, n_max]; a disagreement throws NumericalError.
NStarClassification n_star(const ModelParams& params, int n_max = kDefaultNMax);

/// Analytic classification only (no scan).
NStarClassification classify_n_star(const ModelParams& params);

enum class Direction { increasing, decreasing, constant, non_monotone, undefined };
std::string to_string(Direction d);

struct DiagnosticCell {
  int n = 0;
  double lambda_c = 0.0;
  int gap_sign = 0;
};

struct RegimeDiagnostic {
  std::vector<DiagnosticCell> cells;           // row-major over (n, lambda)
  std::vector<int> n_values;
  std::vector<std::optional<double>> lambda_star_by_n;  // empty when no sign change
  Direction lambda_star_direction = Direction::undefined;
};

/// Sign table of the welfare gap over n in [n_lo, n_hi] and a lambda_c grid,
/// with the numerically observed direction of lambda*(n).
RegimeDiagnostic regime_diagnostic(const ModelParams& params, int n_lo, int n_hi,
                                   const std::vector<double>& lambda_grid);

}  // namespace netmon::game
