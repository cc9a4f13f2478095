#include "netmon/game_core.hpp"

#include <cmath>
#include <limits>

#include "netmon/error.hpp"

namespace netmon::game {

namespace {

// n / (1 - lambda) + n^2 phi^2 / (2 K (1 - lambda)^2)
double global_welfare(double n, double lambda, double k, double phi) {
  const double u = 1.0 / (1.0 - lambda);
  return n * u + n * n * phi * phi * u * u / (2.0 * k);
}

// Each of the n local monitors optimizes its own unit: n copies of the
// single-unit problem.
double per_unit_welfare(double n, double lambda, double k, double phi) {
  return n * global_welfare(1.0, lambda, k, phi);
}

void require_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw DomainError("complementarity lambda must lie in [0, 1), got " + std::to_string(lambda));
  }
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::string to_string(CostMode mode) {
  return mode == CostMode::global ? "global" : "per_unit";
}

CostMode cost_mode_from_string(const std::string& name) {
  if (name == "global") return CostMode::global;
  if (name == "per_unit") return CostMode::per_unit;
  throw DomainError("unknown cost mode '" + name + "' (expected global or per_unit)");
}

void ModelParams::validate_without_lambda_c() const {
  if (!(phi > 0.0)) throw DomainError("phi must be > 0");
  if (!(k_d > 0.0)) throw DomainError("k_d must be > 0");
  if (!(k_c >= k_d)) throw DomainError("k_c must be >= k_d");
  require_lambda(lambda_d);
  if (n < 2) throw DomainError("network size n must be >= 2");
}

void ModelParams::validate() const {
  validate_without_lambda_c();
  require_lambda(lambda_c);
  if (!(lambda_c > lambda_d)) throw DomainError("lambda_c must exceed lambda_d");
}

double equilibrium_effort(double mu, double lambda, double phi) {
  require_lambda(lambda);
  if (mu < 0.0) throw DomainError("monitoring intensity must be >= 0");
  return (1.0 + mu * phi) / (1.0 - lambda);
}

double optimal_mu(const ModelParams& p, Regime regime) {
  p.validate();
  const double n = p.n;
  if (regime == Regime::centralized) return n * p.phi / (p.k_c * (1.0 - p.lambda_c));
  if (p.cost_mode == CostMode::per_unit) return p.phi / (p.k_d * (1.0 - p.lambda_d));
  return n * p.phi / (p.k_d * (1.0 - p.lambda_d));
}

double optimal_welfare(const ModelParams& p, Regime regime) {
  p.validate();
  const double n = p.n;
  if (regime == Regime::centralized) return global_welfare(n, p.lambda_c, p.k_c, p.phi);
  if (p.cost_mode == CostMode::per_unit) return per_unit_welfare(n, p.lambda_d, p.k_d, p.phi);
  return global_welfare(n, p.lambda_d, p.k_d, p.phi);
}

RegimeSolution solve_regime(const ModelParams& p, Regime regime) {
  RegimeSolution s;
  s.mu_star = optimal_mu(p, regime);
  const double lambda = regime == Regime::centralized ? p.lambda_c : p.lambda_d;
  s.effort = equilibrium_effort(s.mu_star, lambda, p.phi);
  s.welfare = optimal_welfare(p, regime);
  return s;
}

double welfare_gap(const ModelParams& p) {
  return optimal_welfare(p, Regime::centralized) - optimal_welfare(p, Regime::decentralized);
}

namespace {

// Gap as a function of lambda_c, valid on [lambda_d, 1) including the
// endpoint lambda_c == lambda_d (which validate() rejects).
double gap_at(const ModelParams& p, double lambda_c) {
  const double n = p.n;
  const double w_c = global_welfare(n, lambda_c, p.k_c, p.phi);
  const double w_d = p.cost_mode == CostMode::per_unit ? per_unit_welfare(n, p.lambda_d, p.k_d, p.phi)
                                                        : global_welfare(n, p.lambda_d, p.k_d, p.phi);
  return w_c - w_d;
}

}  // namespace

double lambda_star(const ModelParams& p, double tol) {
  p.validate_without_lambda_c();
  if (!(tol > 0.0)) throw DomainError("tolerance must be > 0");
  double lo = p.lambda_d;
  double hi = kLambdaCap;
  const double g_lo = gap_at(p, lo);
  if (g_lo > 0.0) {
    throw NumericalError("no sign change: centralization already dominates at lambda_c = lambda_d");
  }
  if (g_lo == 0.0) return lo;
  if (gap_at(p, hi) <= 0.0) throw NumericalError("no sign change below the lambda cap 1 - 1e-9");

  double best = lo;
  double best_abs = std::abs(g_lo);
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double g = gap_at(p, mid);
    if (std::abs(g) < best_abs) {
      best = mid;
      best_abs = std::abs(g);
    }
    if (g == 0.0) return mid;
    if (g > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= tol && best_abs <= tol) break;
  }
  const double g_hi = std::abs(gap_at(p, hi));
  return g_hi < best_abs ? hi : best;
}

std::string to_string(NStarKind kind) {
  switch (kind) {
    case NStarKind::always_centralize: return "always_centralize";
    case NStarKind::never_centralize: return "never_centralize";
    case NStarKind::centralize_above: return "centralize_above";
    case NStarKind::centralize_below: return "centralize_below";
  }
  return "unknown";
}

bool NStarClassification::centralizes_at(int n) const {
  switch (kind) {
    case NStarKind::always_centralize: return true;
    case NStarKind::never_centralize: return false;
    case NStarKind::centralize_above: return n > n_star;
    case NStarKind::centralize_below: return n < n_star;
  }
  return false;
}

NStarClassification classify_n_star(const ModelParams& p) {
  p.validate();
  const double uc = 1.0 / (1.0 - p.lambda_c);
  const double ud = 1.0 / (1.0 - p.lambda_d);
  const double half_phi2 = 0.5 * p.phi * p.phi;

  // gap(n) = n * (b + a n)
  NStarClassification out;
  if (p.cost_mode == CostMode::global) {
    out.linear_coef = uc - ud;
    out.quadratic_coef = half_phi2 * (uc * uc / p.k_c - ud * ud / p.k_d);
  } else {
    out.linear_coef = uc - ud - half_phi2 * ud * ud / p.k_d;
    out.quadratic_coef = half_phi2 * uc * uc / p.k_c;
  }
  const double a = out.quadratic_coef;
  const double b = out.linear_coef;

  if (a == 0.0) {
    out.kind = b > 0.0 ? NStarKind::always_centralize : NStarKind::never_centralize;
    return out;
  }
  const double root = -b / a;
  if (a > 0.0) {
    if (root < 2.0) {
      out.kind = NStarKind::always_centralize;
    } else {
      out.kind = NStarKind::centralize_above;
      out.n_star = root;
    }
  } else {
    if (root <= 2.0) {
      out.kind = NStarKind::never_centralize;
    } else {
      out.kind = NStarKind::centralize_below;
      out.n_star = root;
    }
  }
  return out;
}

NStarClassification n_star(const ModelParams& p, int n_max) {
  if (n_max < 2) throw DomainError("n_max must be >= 2");
  const NStarClassification cls = classify_n_star(p);

  ModelParams q = p;
  for (int n = 2; n <= n_max; ++n) {
    q.n = n;
    const double w_c = optimal_welfare(q, Regime::centralized);
    const double w_d = optimal_welfare(q, Regime::decentralized);
    const double gap = w_c - w_d;
    // Cells within rounding of an exact tie cannot discriminate.
    if (std::abs(gap) <= 1e-9 * (std::abs(w_c) + std::abs(w_d))) continue;
    if ((gap > 0.0) != cls.centralizes_at(n)) {
      throw NumericalError("n_star classification " + to_string(cls.kind) +
                           " disagrees with the integer scan at n = " + std::to_string(n));
    }
  }
  return cls;
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::increasing: return "increasing";
    case Direction::decreasing: return "decreasing";
    case Direction::constant: return "constant";
    case Direction::non_monotone: return "non_monotone";
    case Direction::undefined: return "undefined";
  }
  return "undefined";
}

RegimeDiagnostic regime_diagnostic(const ModelParams& p, int n_lo, int n_hi,
                                   const std::vector<double>& lambda_grid) {
  p.validate_without_lambda_c();
  if (n_lo < 2 || n_hi < n_lo) throw DomainError("invalid n range");
  for (double l : lambda_grid) require_lambda(l);

  RegimeDiagnostic out;
  ModelParams q = p;
  for (int n = n_lo; n <= n_hi; ++n) {
    q.n = n;
    out.n_values.push_back(n);
    for (double l : lambda_grid) out.cells.push_back({n, l, sign_of(gap_at(q, l))});
    if (gap_at(q, q.lambda_d) <= 0.0 && gap_at(q, kLambdaCap) > 0.0) {
      out.lambda_star_by_n.emplace_back(lambda_star(q));
    } else {
      out.lambda_star_by_n.emplace_back(std::nullopt);
    }
  }

  std::vector<double> defined;
  for (const auto& v : out.lambda_star_by_n) {
    if (v) defined.push_back(*v);
  }
  if (defined.size() >= 2) {
    bool up = false;
    bool down = false;
    for (std::size_t i = 1; i < defined.size(); ++i) {
      up = up || defined[i] > defined[i - 1];
      down = down || defined[i] < defined[i - 1];
    }
    out.lambda_star_direction = up && down ? Direction::non_monotone
                                : up       ? Direction::increasing
                                : down     ? Direction::decreasing
                                           : Direction::constant;
  }
  return out;
}

}  // namespace netmon::game
