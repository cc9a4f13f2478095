#include "netmon/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "netmon/error.hpp"

namespace netmon::econ {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(SeType se) {
  switch (se) {
    case SeType::classical: return "classical";
    case SeType::hc1: return "HC1";
    case SeType::cluster: return "cluster-CR1";
  }
  return "HC1";
}

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DomainError("no coefficient named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

bool RegressionResult::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

double RegressionResult::coef_of(const std::string& name) const {
  return coef[static_cast<Eigen::Index>(index_of(names, name))];
}

double RegressionResult::se_of(const std::string& name) const {
  return se[static_cast<Eigen::Index>(index_of(names, name))];
}

void to_json(nlohmann::json& j, const RegressionResult& r) {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    coefs.push_back({{"name", r.names[i]}, {"estimate", r.coef[k]}, {"se", r.se[k]}});
  }
  j = nlohmann::json{{"coefficients", coefs}, {"se_type", to_string(r.se_type)}, {"r2", r.r2},
                     {"n", r.n},          {"k", r.k},                     {"ssr", r.ssr},
                     {"dropped", r.dropped}};
  if (r.se_type == SeType::cluster) {
    j["cluster_key"] = r.cluster_key;
    j["n_clusters"] = r.n_clusters;
  }
}

// Unpivoted QR in column order: the first |R_jj| that is negligible relative
// to ||x_j|| marks a column in the span of its predecessors. Drop it and
// refactor, since diagonals after a dependent column are unreliable.
std::vector<int> independent_columns(const MatrixXd& x, double tol) {
  std::vector<int> kept;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (x.col(j).norm() > 0.0) kept.push_back(static_cast<int>(j));
  }
  while (!kept.empty()) {
    const auto k = static_cast<Eigen::Index>(kept.size());
    if (k > x.rows()) {
      kept.resize(static_cast<std::size_t>(x.rows()));
      continue;
    }
    MatrixXd sub(x.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) sub.col(j) = x.col(kept[static_cast<std::size_t>(j)]);
    const Eigen::HouseholderQR<MatrixXd> qr(sub);
    Eigen::Index bad = -1;
    for (Eigen::Index j = 0; j < k && bad < 0; ++j) {
      if (std::abs(qr.matrixQR()(j, j)) <= tol * sub.col(j).norm()) bad = j;
    }
    if (bad < 0) break;
    kept.erase(kept.begin() + bad);
  }
  return kept;
}

RegressionResult ols(const OlsInput& in) {
  const Eigen::Index n_all = in.y.size();
  if (in.x.rows() != n_all) throw DomainError("ols: X and y row counts differ");
  if (static_cast<Eigen::Index>(in.names.size()) != in.x.cols()) throw DomainError("ols: one name per column required");
  if (in.fe.size() != in.fe_names.size()) throw DomainError("ols: one name per fixed-effect key required");
  for (const auto& f : in.fe) {
    if (static_cast<Eigen::Index>(f.size()) != n_all) throw DomainError("ols: fixed-effect column length differs from y");
  }
  const bool clustered = in.se == SeType::cluster;
  if (clustered && static_cast<Eigen::Index>(in.clusters.size()) != n_all) {
    throw DomainError("ols: cluster column length differs from y");
  }

  // listwise deletion
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n_all; ++i) {
    bool ok = std::isfinite(in.y[i]) && in.x.row(i).allFinite();
    for (const auto& f : in.fe) ok = ok && !f[static_cast<std::size_t>(i)].empty();
    if (clustered) ok = ok && !in.clusters[static_cast<std::size_t>(i)].empty();
    if (ok) rows.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());

  std::vector<std::string> names = in.names;
  std::vector<std::vector<std::string>> fe_levels;
  Eigen::Index fe_cols = 0;
  for (const auto& f : in.fe) {
    std::set<std::string> levels;
    for (Eigen::Index r : rows) levels.insert(f[static_cast<std::size_t>(r)]);
    std::vector<std::string> lv(levels.begin(), levels.end());
    if (!lv.empty()) lv.erase(lv.begin());
    fe_cols += static_cast<Eigen::Index>(lv.size());
    fe_levels.push_back(std::move(lv));
  }

  MatrixXd full(n, in.x.cols() + fe_cols);
  VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    full.row(r).head(in.x.cols()) = in.x.row(rows[static_cast<std::size_t>(r)]);
    y[r] = in.y[rows[static_cast<std::size_t>(r)]];
  }
  Eigen::Index col = in.x.cols();
  for (std::size_t f = 0; f < in.fe.size(); ++f) {
    std::map<std::string, Eigen::Index> where;
    for (const auto& level : fe_levels[f]) {
      where[level] = col;
      names.push_back(in.fe_names[f] + "=" + level);
      full.col(col++).setZero();
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto it = where.find(in.fe[f][static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])]);
      if (it != where.end()) full(r, it->second) = 1.0;
    }
  }

  const std::vector<int> keep = independent_columns(full);
  if (keep.empty()) throw DomainError("ols: design matrix has rank zero");
  const auto k = static_cast<Eigen::Index>(keep.size());
  if (n <= k) throw DomainError("ols: need more observations than regressors (N=" + std::to_string(n) +
                                ", K=" + std::to_string(k) + ")");

  RegressionResult out;
  MatrixXd x(n, k);
  std::size_t next = 0;
  for (Eigen::Index j = 0; j < full.cols(); ++j) {
    if (next < keep.size() && keep[next] == j) {
      x.col(static_cast<Eigen::Index>(next)) = full.col(j);
      out.names.push_back(names[static_cast<std::size_t>(j)]);
      ++next;
    } else {
      out.dropped.push_back(names[static_cast<std::size_t>(j)]);
    }
  }

  const Eigen::HouseholderQR<MatrixXd> qr(x);
  out.coef = qr.solve(y);
  const MatrixXd r_upper = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const MatrixXd r_inv = r_upper.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));
  const MatrixXd bread = r_inv * r_inv.transpose();
  const VectorXd resid = y - x * out.coef;
  out.ssr = resid.squaredNorm();
  out.n = static_cast<int>(n);
  out.k = static_cast<int>(k);
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);

  MatrixXd meat;
  switch (in.se) {
    case SeType::classical:
      out.vcov = (out.ssr / (nd - kd)) * bread;
      break;
    case SeType::hc1: {
      const MatrixXd xe = x.array().colwise() * resid.array();
      meat = xe.transpose() * xe;
      out.vcov = (nd / (nd - kd)) * bread * meat * bread;
      break;
    }
    case SeType::cluster: {
      std::map<std::string, VectorXd> scores;
      for (Eigen::Index r = 0; r < n; ++r) {
        const std::string& g = in.clusters[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
        auto it = scores.find(g);
        if (it == scores.end()) it = scores.emplace(g, VectorXd::Zero(k)).first;
        it->second += x.row(r).transpose() * resid[r];
      }
      const auto groups = static_cast<double>(scores.size());
      if (scores.size() < 2) throw DomainError("ols: cluster-robust errors need at least 2 clusters");
      meat = MatrixXd::Zero(k, k);
      for (const auto& [g, s] : scores) meat += s * s.transpose();
      out.vcov = (groups / (groups - 1.0)) * ((nd - 1.0) / (nd - kd)) * bread * meat * bread;
      out.n_clusters = static_cast<int>(scores.size());
      out.cluster_key = in.cluster_key;
      break;
    }
  }
  out.vcov = 0.5 * (out.vcov + out.vcov.transpose());
  out.se = out.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.se_type = in.se;

  bool has_constant = false;
  for (Eigen::Index j = 0; j < k && !has_constant; ++j) {
    has_constant = x(0, j) != 0.0 && (x.col(j).array() == x(0, j)).all();
  }
  const double tss = has_constant ? (y.array() - y.mean()).square().sum() : y.squaredNorm();
  out.r2 = tss > 0.0 ? std::clamp(1.0 - out.ssr / tss, 0.0, 1.0) : 1.0;
  return out;
}

}  // namespace netmon::econ
