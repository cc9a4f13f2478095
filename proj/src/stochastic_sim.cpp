#include "netmon/stochastic_sim.hpp"

#include <cmath>
#include <sstream>

#include "netmon/error.hpp"
#include "netmon/parallel.hpp"
#include "netmon/rng.hpp"

namespace netmon::stochastic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ShockSpec::validate() const {
  if (graph.n() < 1) throw DomainError("shock spec needs a graph");
  if (!(sigma2 >= 0.0 && tau2 >= 0.0 && omega2 >= 0.0)) throw DomainError("variances must be >= 0");
  if (!(rho >= 0.0)) throw DomainError("rho must be >= 0");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (rho > 0.0 && rho * spectral::spectral_radius(graph) > 1.0 - spectral::kSpectralGuard) {
    throw NumericalError("spectral bound violated: rho * psi(G) >= 1");
  }
  if (lambda > 0.0 && lambda * spectral::spectral_radius(spectral::row_normalize(graph)) > 1.0 - spectral::kSpectralGuard) {
    throw NumericalError("spectral bound violated: lambda * psi(G_hat) >= 1");
  }
}

void to_json(nlohmann::json& j, const SimResult& r) {
  j = nlohmann::json{{"reps", r.reps},
                     {"cross_var", r.cross_var},
                     {"within_var", r.within_var},
                     {"mean_effort", r.mean_effort},
                     {"seed", r.seed}};
}

MatrixXd interaction_matrix(const ShockSpec& spec) { return spectral::row_normalize(spec.graph).weights(); }

namespace {

MatrixXd resolvent(const MatrixXd& g, double scale) {
  const Eigen::Index n = g.rows();
  MatrixXd a = MatrixXd::Identity(n, n) - scale * g;
  Eigen::PartialPivLU<MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("resolvent is numerically singular");
  return lu.solve(MatrixXd::Identity(n, n));
}

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Lower Cholesky factor, retrying once with a 1e-12 * sigma^2 diagonal jitter.
MatrixXd cholesky_factor(const MatrixXd& cov, double sigma2) {
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  MatrixXd jittered = cov;
  jittered.diagonal().array() += 1e-12 * sigma2;
  Eigen::LLT<MatrixXd> retry(jittered);
  if (retry.info() != Eigen::Success) throw NumericalError("Cholesky failed: shock covariance is not PD");
  return retry.matrixL();
}

}  // namespace

MatrixXd shock_covariance(const ShockSpec& spec) {
  spec.validate();
  const int n = spec.graph.n();
  if (spec.rho == 0.0) return spec.sigma2 * MatrixXd::Identity(n, n);
  const MatrixXd m = resolvent(spec.graph.weights(), spec.rho);
  return symmetrized(spec.sigma2 * m * m.transpose());
}

VectorXd equilibrium_with_shocks(const ShockSpec& spec, double mu, const VectorXd& eps) {
  spec.validate();
  const int n = spec.graph.n();
  if (eps.size() != n) throw DomainError("shock vector length does not match the graph");
  if (mu < 0.0) throw DomainError("monitoring intensity must be >= 0");
  MatrixXd a = MatrixXd::Identity(n, n) - spec.lambda * interaction_matrix(spec);
  Eigen::PartialPivLU<MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("equilibrium system is numerically singular");
  return lu.solve(VectorXd::Constant(n, 1.0 + mu * spec.phi) + eps);
}

double effort_variance_closed_form(int n, double lambda, double sigma2) {
  if (n < 2) throw DomainError("n must be >= 2");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in [0, 1)");
  const double common = 1.0 / (1.0 - lambda);
  const double idio = 1.0 / (1.0 + lambda / (n - 1.0));
  return sigma2 * (common * common / n + (1.0 - 1.0 / n) * idio * idio);
}

SimResult monte_carlo_variance(const ShockSpec& spec, double mu, int reps, std::uint64_t seed,
                               unsigned threads) {
  spec.validate();
  if (reps < 1) throw DomainError("reps must be >= 1");
  if (mu < 0.0) throw DomainError("monitoring intensity must be >= 0");
  const int n = spec.graph.n();

  MatrixXd a = MatrixXd::Identity(n, n) - spec.lambda * interaction_matrix(spec);
  const Eigen::PartialPivLU<MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("equilibrium system is numerically singular");
  const VectorXd drift = VectorXd::Constant(n, 1.0 + mu * spec.phi);
  const VectorXd e_bar = lu.solve(drift);

  const bool correlated = spec.rho > 0.0 && spec.sigma2 > 0.0;
  const MatrixXd chol = correlated ? cholesky_factor(shock_covariance(spec), spec.sigma2) : MatrixXd();
  const double sd = std::sqrt(spec.sigma2);

  std::vector<double> pooled(static_cast<std::size_t>(reps));
  std::vector<double> within(static_cast<std::size_t>(reps));
  std::vector<double> means(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    Rng rng = Rng::substream(seed, r);
    VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    const VectorXd eps = correlated ? VectorXd(chol * z) : VectorXd(sd * z);
    const VectorXd e = lu.solve(drift + eps);
    const double mean = e.mean();
    pooled[r] = (e - e_bar).squaredNorm() / n;
    within[r] = (e.array() - mean).square().sum() / n;
    means[r] = mean;
  });

  SimResult out;
  out.reps = reps;
  out.seed = seed;
  out.cross_var = pairwise_sum(pooled) / reps;
  out.within_var = pairwise_sum(within) / reps;
  out.mean_effort = pairwise_sum(means) / reps;
  return out;
}

VectorXd posterior_mean(const ShockSpec& spec, const VectorXd& signal) {
  const int n = spec.graph.n();
  if (signal.size() != n) throw DomainError("signal length does not match the graph");
  if (spec.tau2 == 0.0) return signal;
  const MatrixXd s = shock_covariance(spec);
  MatrixXd total = s;
  total.diagonal().array() += spec.tau2;
  Eigen::LLT<MatrixXd> llt(total);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior solve failed: Sigma_eps + tau^2 I is degenerate");
  const VectorXd centered = signal.array() - spec.theta_bar;
  return VectorXd::Constant(n, spec.theta_bar) + s * llt.solve(centered);
}

std::string to_string(EffortRule rule) {
  switch (rule) {
    case EffortRule::none: return "none";
    case EffortRule::decentralized_plugin: return "decentralized_plugin";
    case EffortRule::centralized_plugin: return "centralized_plugin";
  }
  return "none";
}

EffortRule effort_rule_from_string(const std::string& name) {
  if (name == "none") return EffortRule::none;
  if (name == "decentralized_plugin") return EffortRule::decentralized_plugin;
  if (name == "centralized_plugin") return EffortRule::centralized_plugin;
  throw DomainError("unknown effort rule '" + name + "'");
}

OutcomeCovariance outcome_covariance(const ShockSpec& spec, EffortRule rule) {
  const MatrixXd s = shock_covariance(spec);
  const int n = spec.graph.n();
  const MatrixXd id = MatrixXd::Identity(n, n);

  MatrixXd sigma_y;
  if (rule == EffortRule::none) {
    sigma_y = s + spec.omega2 * id;
  } else {
    const MatrixXd r = resolvent(interaction_matrix(spec), spec.lambda);
    MatrixXd weights;  // maps (s - theta_bar 1) to effort deviations
    if (rule == EffortRule::decentralized_plugin) {
      VectorXd b(n);
      for (int i = 0; i < n; ++i) {
        const double denom = s(i, i) + spec.tau2;
        b[i] = denom > 0.0 ? s(i, i) / denom : 0.0;
      }
      weights = r * b.asDiagonal();
    } else if (spec.tau2 == 0.0) {
      weights = r;
    } else {
      MatrixXd total = s;
      total.diagonal().array() += spec.tau2;
      Eigen::LLT<MatrixXd> llt(total);
      if (llt.info() != Eigen::Success) throw NumericalError("Sigma_eps + tau^2 I is degenerate");
      // S (S + tau^2 I)^{-1} = ((S + tau^2 I)^{-1} S)' for symmetric S.
      weights = r * llt.solve(s).transpose();
    }
    const MatrixXd a = id + spec.gamma * weights;
    sigma_y = a * s * a.transpose() + spec.gamma * spec.gamma * spec.tau2 * weights * weights.transpose() +
              spec.omega2 * id;
  }
  sigma_y = symmetrized(sigma_y);
  OutcomeCovariance out;
  out.lambda_max = largest_eigenvalue(sigma_y);
  out.sigma_y = std::move(sigma_y);
  return out;
}

double largest_eigenvalue(const MatrixXd& m, double tol, int max_iter) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n) throw DomainError("largest_eigenvalue needs a nonempty square matrix");
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.25 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double rq = v.dot(m * v);
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd w = m * v;
    rq = v.dot(w);
    const double residual = (w - rq * v).norm();
    if (residual <= tol * scale * std::sqrt(static_cast<double>(n)) + 1e-11 * std::abs(rq)) return rq;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  throw NumericalError("largest_eigenvalue: power iteration did not converge");
}

AmplificationProfile amplification_profile(const ShockSpec& spec, const std::vector<double>& lambda_grid,
                                           EffortRule rule, const std::optional<game::ModelParams>& model) {
  if (lambda_grid.empty()) throw DomainError("lambda grid is empty");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1])) throw DomainError("lambda grid must be strictly ascending");
  }
  AmplificationProfile out;
  out.rule = rule;
  const int n = spec.graph.n();
  for (double lambda : lambda_grid) {
    ShockSpec point = spec;
    point.lambda = lambda;
    AmplificationRow row;
    row.lambda = lambda;
    row.variance = effort_variance_closed_form(n, lambda, spec.sigma2);
    row.lambda_max = outcome_covariance(point, rule).lambda_max;
    out.rows.push_back(row);
  }
  if (model) {
    game::ModelParams p = *model;
    p.n = n;
    try {
      out.lambda_star = game::lambda_star(p);
    } catch (const NumericalError&) {
      out.lambda_star.reset();
    }
  }
  return out;
}

std::string to_tsv(const AmplificationProfile& profile) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda\tvariance\tlambda_max\n";
  for (const auto& r : profile.rows) os << r.lambda << '\t' << r.variance << '\t' << r.lambda_max << '\n';
  return os.str();
}

}  // namespace netmon::stochastic
