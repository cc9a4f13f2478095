#include "netmon/econometrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "netmon/error.hpp"
#include "netmon/parallel.hpp"
#include "netmon/rng.hpp"

namespace netmon::econ {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using data::FacilityRecord;
using data::Ownership;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::string to_string(GroupKey key) { return key == GroupKey::county ? "county" : "chain"; }

GroupKey group_key_from_string(const std::string& name) {
  if (name == "county") return GroupKey::county;
  if (name == "chain") return GroupKey::chain;
  throw DomainError("unknown group key '" + name + "'");
}

std::string to_string(Sample s) {
  switch (s) {
    case Sample::full: return "full";
    case Sample::below: return "below";
    case Sample::above: return "above";
  }
  return "full";
}

DerivedColumns derive_columns(const FacilityPanel& panel, int county_cutoff, int chain_cutoff) {
  std::map<std::string, int> county_n;
  std::map<std::string, int> chain_n;
  for (const auto& r : panel.records) {
    ++county_n[r.county_fips];
    if (r.chain_id) ++chain_n[*r.chain_id];
  }
  DerivedColumns d;
  for (const auto& r : panel.records) {
    const double nh = county_n[r.county_fips];
    d.nh_total.push_back(nh);
    d.large_county.push_back(nh > county_cutoff ? 1.0 : 0.0);
    if (r.chain_id) {
      const double cs = chain_n[*r.chain_id];
      d.chain_size.push_back(cs);
      d.in_chain.push_back(1.0);
      d.large_chain.push_back(cs > chain_cutoff ? 1.0 : 0.0);
    } else {
      d.chain_size.push_back(kNaN);
      d.in_chain.push_back(0.0);
      d.large_chain.push_back(0.0);
    }
    d.delta_def.push_back(static_cast<double>(r.def_total) - static_cast<double>(r.def_total_prev));
  }
  return d;
}

std::vector<double> outcome_column(const FacilityPanel& panel, const std::string& name) {
  int FacilityRecord::*field = nullptr;
  if (name == "beds") field = &FacilityRecord::beds;
  else if (name == "overall_rating") field = &FacilityRecord::overall_rating;
  else if (name == "staffing_rating") field = &FacilityRecord::staffing_rating;
  else if (name == "def_total") field = &FacilityRecord::def_total;
  else if (name == "def_total_prev") field = &FacilityRecord::def_total_prev;
  else if (name == "sff") field = &FacilityRecord::sff;
  else if (name == "sff_candidate") field = &FacilityRecord::sff_candidate;
  std::vector<double> out;
  out.reserve(panel.size());
  if (field) {
    for (const auto& r : panel.records) out.push_back(static_cast<double>(r.*field));
  } else if (name == "delta_def") {
    for (const auto& r : panel.records) out.push_back(static_cast<double>(r.def_total) - r.def_total_prev);
  } else {
    throw DomainError("unknown column '" + name + "'");
  }
  return out;
}

std::vector<std::string> group_keys(const FacilityPanel& panel, GroupKey key) {
  std::vector<std::string> keys;
  keys.reserve(panel.size());
  for (const auto& r : panel.records) keys.push_back(key == GroupKey::county ? r.county_fips : r.chain_id.value_or(""));
  return keys;
}

std::vector<double> peer_means(const std::vector<std::string>& keys, const std::vector<double>& values) {
  if (keys.size() != values.size()) throw DomainError("peer_means: keys and values differ in length");
  std::map<std::string, std::pair<double, int>> sums;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].empty() || !std::isfinite(values[i])) continue;
    auto& s = sums[keys[i]];
    s.first += values[i];
    ++s.second;
  }
  std::vector<double> out(keys.size(), kNaN);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].empty() || !std::isfinite(values[i])) continue;
    const auto& [sum, m] = sums[keys[i]];
    if (m >= 2) out[i] = (sum - values[i]) / (m - 1);
  }
  return out;
}

std::vector<double> peer_means(const FacilityPanel& panel, GroupKey key, const std::string& column) {
  return peer_means(group_keys(panel, key), outcome_column(panel, column));
}

namespace {

double non_profit(const FacilityRecord& r) { return r.ownership == Ownership::non_profit ? 1.0 : 0.0; }
double government(const FacilityRecord& r) { return r.ownership == Ownership::government ? 1.0 : 0.0; }

}  // namespace

RegressionResult spillover_regression(const FacilityPanel& panel, const SpilloverSpec& spec) {
  const std::vector<double> y = outcome_column(panel, spec.outcome);
  const DerivedColumns d = derive_columns(panel, spec.county_cutoff, spec.chain_cutoff);
  const std::vector<double> county_peer = peer_means(group_keys(panel, GroupKey::county), y);
  const bool chain_level = spec.level == GroupKey::chain;
  const std::vector<double> chain_peer = chain_level ? peer_means(group_keys(panel, GroupKey::chain), y)
                                                     : std::vector<double>();
  const std::vector<double>& size = chain_level ? d.chain_size : d.nh_total;
  const double cutoff = chain_level ? spec.chain_cutoff : spec.county_cutoff;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (chain_level && d.in_chain[i] == 0.0) continue;
    if (spec.sample == Sample::below && !(size[i] <= cutoff)) continue;
    if (spec.sample == Sample::above && !(size[i] > cutoff)) continue;
    rows.push_back(i);
  }
  if (rows.empty()) throw DomainError("spillover regression: empty " + to_string(spec.sample) + " sample");

  OlsInput in;
  in.names = {"intercept", "county_peer"};
  if (chain_level) in.names.push_back("chain_peer");
  for (const char* name : {"beds", "non_profit", "government"}) in.names.push_back(name);
  if (!chain_level) in.names.push_back("in_chain");

  const auto n = static_cast<Eigen::Index>(rows.size());
  in.y.resize(n);
  in.x.resize(n, static_cast<Eigen::Index>(in.names.size()));
  std::vector<std::string> states;
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t i = rows[static_cast<std::size_t>(r)];
    const FacilityRecord& rec = panel.records[i];
    in.y[r] = y[i];
    Eigen::Index c = 0;
    in.x(r, c++) = 1.0;
    in.x(r, c++) = county_peer[i];
    if (chain_level) in.x(r, c++) = chain_peer[i];
    in.x(r, c++) = rec.beds;
    in.x(r, c++) = non_profit(rec);
    in.x(r, c++) = government(rec);
    if (!chain_level) in.x(r, c++) = d.in_chain[i];
    states.push_back(rec.state);
    in.clusters.push_back(chain_level ? *rec.chain_id : rec.county_fips);
  }
  if (spec.state_fe) {
    in.fe.push_back(std::move(states));
    in.fe_names.push_back("state");
  }
  in.se = SeType::cluster;
  in.cluster_key = chain_level ? "chain_id" : "county_fips";
  return ols(in);
}

KinkFit kink_fit(const VectorXd& y, const VectorXd& x, const MatrixXd& controls, double c) {
  const Eigen::Index n = y.size();
  if (x.size() != n || (controls.size() > 0 && controls.rows() != n)) throw DomainError("kink_fit: length mismatch");
  if (n == 0) throw DomainError("kink_fit: empty sample");
  if (!(c > x.minCoeff() && c < x.maxCoeff())) throw DomainError("kink_fit: breakpoint must be interior to the x range");
  OlsInput in;
  in.y = y;
  in.x.resize(n, 3 + controls.cols());
  in.x.col(0).setOnes();
  in.x.col(1) = x;
  in.x.col(2) = (x.array() - c).max(0.0);
  if (controls.cols() > 0) in.x.rightCols(controls.cols()) = controls;
  in.names = {"intercept", "x", "hinge"};
  for (Eigen::Index j = 0; j < controls.cols(); ++j) in.names.push_back("control_" + std::to_string(j + 1));
  in.se = SeType::classical;
  const RegressionResult r = ols(in);
  return KinkFit{r.names, r.coef, r.ssr, r.dropped};
}

void to_json(nlohmann::json& j, const BreakResult& r) {
  nlohmann::json profile = nlohmann::json::array();
  for (const auto& [c, f] : r.f_profile) profile.push_back({c, f});
  j = nlohmann::json{{"c_hat", r.c_hat}, {"n_star", r.n_star}, {"f_max", r.f_max}, {"beta1", r.beta1},
                     {"beta2", r.beta2}, {"ssr0", r.ssr0},     {"ssr1", r.ssr1},   {"df1", r.df1},
                     {"candidates", r.f_profile.size()}, {"f_profile", profile}};
  if (r.p_value) {
    j["p_value"] = *r.p_value;
    j["bootstrap_reps"] = r.bootstrap_reps;
  }
}

std::string profile_tsv(const BreakResult& r) {
  std::ostringstream os;
  os.precision(12);
  os << "c\tF\n";
  for (const auto& [c, f] : r.f_profile) os << c << '\t' << f << '\n';
  return os.str();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<double> break_candidates(const VectorXd& x, const BreakOptions& options) {
  if (x.size() == 0) throw DomainError("break search: empty sample");
  if (!x.allFinite()) throw DomainError("break search: forcing variable must be finite");
  if (!(options.lo_quantile < options.hi_quantile)) throw DomainError("break search: quantile window is empty");
  std::vector<double> xs(x.data(), x.data() + x.size());
  const double lo = quantile(xs, options.lo_quantile);
  const double hi = quantile(xs, options.hi_quantile);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> window;
  for (double v : xs) {
    if (v >= lo && v <= hi) window.push_back(v);
  }
  if (static_cast<int>(window.size()) < options.min_distinct) {
    throw DomainError("break search: " + std::to_string(window.size()) +
                      " distinct forcing values in the quantile window, need " + std::to_string(options.min_distinct));
  }
  std::vector<double> out;
  for (double v : window) {
    if (v != xs.front() && v != xs.back()) out.push_back(v);
  }
  if (out.empty()) throw DomainError("break search: empty candidate set");
  return out;
}

namespace {

// Frisch-Waugh form of the grid: with M0 the annihilator of [1, x, controls]
// and u_c the normalized M0 hinge(c), SSR1(c) = SSR0 - (u_c' M0 y)^2.
struct SupFEngine {
  MatrixXd q;  // orthonormal basis of the linear design
  MatrixXd u;  // one column per usable candidate
  std::vector<double> candidates;
  int df1 = 0;

  SupFEngine(const VectorXd& x, const MatrixXd& controls, const std::vector<double>& grid) {
    const Eigen::Index n = x.size();
    MatrixXd x0(n, 2 + controls.cols());
    x0.col(0).setOnes();
    x0.col(1) = x;
    if (controls.cols() > 0) x0.rightCols(controls.cols()) = controls;
    const std::vector<int> keep = independent_columns(x0);
    MatrixXd xk(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) xk.col(static_cast<Eigen::Index>(j)) = x0.col(keep[j]);
    const Eigen::HouseholderQR<MatrixXd> qr(xk);
    q = qr.householderQ() * MatrixXd::Identity(n, xk.cols());
    df1 = static_cast<int>(n - xk.cols() - 1);
    if (df1 < 1) throw DomainError("break search: too few observations for the kink model");

    u.resize(n, static_cast<Eigen::Index>(grid.size()));
    Eigen::Index used = 0;
    for (double c : grid) {
      const VectorXd h = (x.array() - c).max(0.0);
      const VectorXd r = annihilate(h);
      const double rr = r.squaredNorm();
      if (!(rr > 1e-10 * h.squaredNorm())) continue;
      u.col(used++) = r / std::sqrt(rr);
      candidates.push_back(c);
    }
    u.conservativeResize(n, used);
    if (candidates.empty()) throw DomainError("break search: every candidate hinge is collinear with the design");
  }

  VectorXd annihilate(const VectorXd& v) const {
    VectorXd r = v - q * (q.transpose() * v);
    return r - q * (q.transpose() * r);
  }

  // F(c) for every candidate given residualized y.
  std::vector<double> profile(const VectorXd& ry, double* ssr0_out = nullptr) const {
    const double ssr0 = ry.squaredNorm();
    if (ssr0_out) *ssr0_out = ssr0;
    const VectorXd proj = u.transpose() * ry;
    std::vector<double> f(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double gain = proj[static_cast<Eigen::Index>(c)] * proj[static_cast<Eigen::Index>(c)];
      const double ssr1 = ssr0 - gain;
      if (ssr0 <= 0.0) {
        f[c] = 0.0;
      } else if (ssr1 <= 1e-14 * ssr0) {
        f[c] = kInf;
      } else {
        f[c] = std::max(0.0, gain) / (ssr1 / df1);
      }
    }
    return f;
  }

  static std::size_t argmax(const std::vector<double>& f) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < f.size(); ++c) {
      if (f[c] > f[best]) best = c;
    }
    return best;
  }
};

void check_inputs(const VectorXd& y, const VectorXd& x, const MatrixXd& controls) {
  if (x.size() != y.size()) throw DomainError("break search: x and y lengths differ");
  if (controls.cols() > 0 && controls.rows() != y.size()) throw DomainError("break search: control rows differ from y");
  if (!y.allFinite() || !controls.allFinite()) throw DomainError("break search: data must be finite");
}

double bootstrap_with(const SupFEngine& engine, const VectorXd& ry, double f_obs, int reps, std::uint64_t seed,
                      unsigned threads) {
  if (reps < 99) throw DomainError("bootstrap needs at least 99 replications");
  const auto n = static_cast<std::uint64_t>(ry.size());
  std::vector<char> exceed(static_cast<std::size_t>(reps), 0);
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t b) {
    Rng rng = Rng::substream(seed, b);
    VectorXd e(ry.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = ry[static_cast<Eigen::Index>(rng.below(n))];
    const std::vector<double> f = engine.profile(engine.annihilate(e));
    exceed[b] = f[SupFEngine::argmax(f)] >= f_obs ? 1 : 0;
  });
  const auto hits = std::count(exceed.begin(), exceed.end(), 1);
  return (1.0 + static_cast<double>(hits)) / (reps + 1.0);
}

}  // namespace

BreakResult break_search(const VectorXd& y, const VectorXd& x, const MatrixXd& controls, const BreakOptions& options) {
  check_inputs(y, x, controls);
  const SupFEngine engine(x, controls, break_candidates(x, options));
  const VectorXd ry = engine.annihilate(y);
  BreakResult out;
  const std::vector<double> f = engine.profile(ry, &out.ssr0);
  const std::size_t best = SupFEngine::argmax(f);
  for (std::size_t c = 0; c < f.size(); ++c) out.f_profile.emplace_back(engine.candidates[c], f[c]);
  out.c_hat = engine.candidates[best];
  out.f_max = f[best];
  out.n_star = std::exp(out.c_hat);
  out.df1 = engine.df1;

  const KinkFit fit = kink_fit(y, x, controls, out.c_hat);
  out.ssr1 = fit.ssr;
  out.beta1 = fit.coef[1];
  out.beta2 = fit.names.size() > 2 && fit.names[2] == "hinge" ? fit.coef[2] : 0.0;

  if (options.bootstrap_reps > 0) {
    out.p_value = bootstrap_with(engine, ry, out.f_max, options.bootstrap_reps, options.seed, options.threads);
    out.bootstrap_reps = options.bootstrap_reps;
  }
  return out;
}

double bootstrap_supf(const VectorXd& y, const VectorXd& x, const MatrixXd& controls, int reps, std::uint64_t seed,
                      const BreakOptions& options) {
  check_inputs(y, x, controls);
  const SupFEngine engine(x, controls, break_candidates(x, options));
  const VectorXd ry = engine.annihilate(y);
  const std::vector<double> f = engine.profile(ry);
  return bootstrap_with(engine, ry, f[SupFEngine::argmax(f)], reps, seed, options.threads);
}

double f_upper_tail(double w, double d1, double d2) {
  if (!(d1 > 0.0 && d2 > 0.0)) throw DomainError("F distribution needs positive degrees of freedom");
  if (!(w > 0.0)) return 1.0;
  if (std::isinf(w)) return 0.0;
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * w));
}

LeveneResult levene_test(const std::vector<double>& values, const std::vector<int>& groups, LeveneCenter center) {
  if (values.size() != groups.size()) throw DomainError("levene: values and groups differ in length");
  std::map<int, std::vector<double>> by_group;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw DomainError("levene: values must be finite");
    by_group[groups[i]].push_back(values[i]);
  }
  if (by_group.size() < 2) throw DomainError("levene: need at least 2 groups");
  for (const auto& [g, v] : by_group) {
    if (v.size() < 2) throw DomainError("levene: group " + std::to_string(g) + " has fewer than 2 observations");
  }
  const auto k = static_cast<double>(by_group.size());
  double total_n = 0.0;
  double z_sum = 0.0;
  std::vector<std::vector<double>> z;
  std::vector<double> z_means;
  for (const auto& [g, v] : by_group) {
    double c;
    if (center == LeveneCenter::mean) {
      c = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    } else {
      c = quantile(v, 0.5);
    }
    std::vector<double> zg;
    for (double y : v) zg.push_back(std::abs(y - c));
    const double s = std::accumulate(zg.begin(), zg.end(), 0.0);
    z_means.push_back(s / static_cast<double>(zg.size()));
    z_sum += s;
    total_n += static_cast<double>(zg.size());
    z.push_back(std::move(zg));
  }
  const double z_bar = z_sum / total_n;
  double between = 0.0;
  double within = 0.0;
  for (std::size_t g = 0; g < z.size(); ++g) {
    between += static_cast<double>(z[g].size()) * (z_means[g] - z_bar) * (z_means[g] - z_bar);
    for (double v : z[g]) within += (v - z_means[g]) * (v - z_means[g]);
  }
  LeveneResult out;
  out.df1 = static_cast<int>(k - 1.0);
  out.df2 = static_cast<int>(total_n - k);
  const double scale = std::max(1.0, z_bar * z_bar * total_n);
  if (between <= 1e-28 * scale) between = 0.0;
  if (within <= 1e-28 * scale) {
    if (between == 0.0) return out;
    throw DomainError("levene: degenerate groups with zero within-group spread");
  }
  out.w = ((total_n - k) / (k - 1.0)) * between / within;
  out.p_value = f_upper_tail(out.w, out.df1, out.df2);
  return out;
}

namespace {

double sample_variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (static_cast<double>(v.size()) - 1.0);
}

}  // namespace

std::vector<VarianceRow> variance_by_threshold(const FacilityPanel& panel, GroupKey size_key, int cutoff,
                                               const std::vector<std::string>& outcomes, LeveneCenter center) {
  const DerivedColumns d = derive_columns(panel);
  const std::vector<double>& size = size_key == GroupKey::county ? d.nh_total : d.chain_size;
  std::vector<VarianceRow> rows;
  for (const auto& name : outcomes) {
    const std::vector<double> y = outcome_column(panel, name);
    std::vector<double> values;
    std::vector<int> groups;
    std::vector<double> small;
    std::vector<double> large;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!std::isfinite(size[i])) continue;
      const int g = size[i] > cutoff ? 1 : 0;
      values.push_back(y[i]);
      groups.push_back(g);
      (g ? large : small).push_back(y[i]);
    }
    if (small.empty() || large.empty()) {
      throw DomainError("variance_by_threshold: cutoff " + std::to_string(cutoff) + " leaves an empty side");
    }
    VarianceRow row;
    row.outcome = name;
    row.n_small = static_cast<int>(small.size());
    row.n_large = static_cast<int>(large.size());
    row.var_small = small.size() > 1 ? sample_variance(small) : 0.0;
    row.var_large = large.size() > 1 ? sample_variance(large) : 0.0;
    const LeveneResult lev = levene_test(values, groups, center);
    row.levene_w = lev.w;
    row.p_value = lev.p_value;
    rows.push_back(row);
  }
  return rows;
}

RegressionResult deterioration_regression(const FacilityPanel& panel, const DeteriorationSpec& spec) {
  const DerivedColumns d = derive_columns(panel, spec.county_cutoff, spec.chain_cutoff);
  OlsInput in;
  in.names = {"intercept", "large_chain", "large_county", "beds", "non_profit", "government", "in_chain"};
  const auto n = static_cast<Eigen::Index>(panel.size());
  in.y.resize(n);
  in.x.resize(n, static_cast<Eigen::Index>(in.names.size()));
  std::vector<std::string> states;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const FacilityRecord& r = panel.records[s];
    in.y[i] = d.delta_def[s];
    in.x.row(i) << 1.0, d.large_chain[s], d.large_county[s], r.beds, non_profit(r), government(r), d.in_chain[s];
    states.push_back(r.state);
    in.clusters.push_back(r.county_fips);
  }
  if (spec.state_fe) {
    in.fe.push_back(std::move(states));
    in.fe_names.push_back("state");
  }
  in.se = spec.se;
  if (spec.se == SeType::cluster) in.cluster_key = "county_fips";
  return ols(in);
}

const std::vector<double>& GroupTable::column(const std::string& name) const {
  const auto it = columns.find(name);
  if (it == columns.end()) throw DomainError("unknown aggregate column '" + name + "'");
  return it->second;
}

VectorXd GroupTable::vector(const std::string& name) const {
  const auto& c = column(name);
  return Eigen::Map<const VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

GroupTable aggregate(const FacilityPanel& panel, GroupKey key) {
  std::map<std::string, std::vector<const FacilityRecord*>> groups;
  for (const auto& r : panel.records) {
    if (key == GroupKey::county) {
      groups[r.county_fips].push_back(&r);
    } else if (r.chain_id) {
      groups[*r.chain_id].push_back(&r);
    }
  }
  GroupTable t;
  for (const char* name : {"n", "log_n", "sff", "sff_candidate", "share_for_profit", "share_non_profit", "share_gov",
                           "share_in_chain", "avg_overall_rating", "avg_staffing_rating", "avg_beds", "log_avg_beds",
                           "avg_def_total"}) {
    t.columns[name];
  }
  for (const auto& [id, rows] : groups) {
    const auto m = static_cast<double>(rows.size());
    double sff = 0, cand = 0, fp = 0, np = 0, gov = 0, chain = 0, overall = 0, staffing = 0, beds = 0, def = 0;
    std::map<std::string, int> state_counts;
    for (const FacilityRecord* r : rows) {
      sff += r->sff;
      cand += r->sff_candidate;
      fp += r->ownership == Ownership::for_profit;
      np += r->ownership == Ownership::non_profit;
      gov += r->ownership == Ownership::government;
      chain += r->chain_id.has_value();
      overall += r->overall_rating;
      staffing += r->staffing_rating;
      beds += r->beds;
      def += r->def_total;
      ++state_counts[r->state];
    }
    t.ids.push_back(id);
    t.states.push_back(std::max_element(state_counts.begin(), state_counts.end(), [](const auto& a, const auto& b) {
                         return a.second < b.second;
                       })->first);
    t.columns["n"].push_back(m);
    t.columns["log_n"].push_back(std::log(m));
    t.columns["sff"].push_back(sff);
    t.columns["sff_candidate"].push_back(cand);
    t.columns["share_for_profit"].push_back(fp / m);
    t.columns["share_non_profit"].push_back(np / m);
    t.columns["share_gov"].push_back(gov / m);
    t.columns["share_in_chain"].push_back(chain / m);
    t.columns["avg_overall_rating"].push_back(overall / m);
    t.columns["avg_staffing_rating"].push_back(staffing / m);
    t.columns["avg_beds"].push_back(beds / m);
    t.columns["log_avg_beds"].push_back(std::log(beds / m));
    t.columns["avg_def_total"].push_back(def / m);
  }
  return t;
}

std::string to_csv(const GroupTable& table) {
  std::ostringstream os;
  os.precision(12);
  os << "id,state";
  for (const auto& [name, col] : table.columns) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    os << table.ids[i] << ',' << table.states[i];
    for (const auto& [name, col] : table.columns) os << ',' << col[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace netmon::econ
