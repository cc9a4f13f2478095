#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "netmon/econometrics.hpp"
#include "netmon/error.hpp"
#include "netmon/rng.hpp"
#include "netmon/synthetic_data.hpp"

using namespace netmon::econ;
using netmon::data::FacilityRecord;
using netmon::data::Ownership;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

FacilityRecord rec(const std::string& id, const std::string& county, std::optional<std::string> chain = {}) {
  FacilityRecord r;
  r.facility_id = id;
  r.county_fips = county;
  r.state = county.substr(0, 2);
  r.chain_id = std::move(chain);
  return r;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// residual sum of squares of y on [1, x, controls] via normal equations
double linear_ssr(const VectorXd& y, const VectorXd& x, const MatrixXd& controls) {
  MatrixXd d(y.size(), 2 + controls.cols());
  d << VectorXd::Ones(y.size()), x, controls;
  const VectorXd b = (d.transpose() * d).ldlt().solve(d.transpose() * y);
  return (y - d * b).squaredNorm();
}

std::vector<double> normals(netmon::Rng& rng, int n, double sd) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = sd * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("leave-one-out peer means") {
  const auto p = peer_means({"a", "a", "a", "b"}, {2, 4, 6, 9});
  CHECK(p[0] == 5.0);
  CHECK(p[1] == 4.0);
  CHECK(p[2] == 3.0);
  CHECK(std::isnan(p[3]));
  const auto c = peer_means({"x", "x", "y", "y", "y"}, {7, 7, 7, 7, 7});
  for (double v : c) CHECK(v == 7.0);
  const auto m = peer_means({"a", "", "a", "a"}, {1, 5, NAN, 3});
  CHECK(std::isnan(m[1]));
  CHECK(std::isnan(m[2]));
  CHECK(m[0] == 3.0);
  CHECK(m[3] == 1.0);
}

TEST_CASE("group mean of peer means equals group mean") {
  netmon::Rng rng(4);
  std::vector<std::string> keys;
  std::vector<double> vals;
  for (int i = 0; i < 500; ++i) {
    keys.push_back("g" + std::to_string(rng.below(40)));
    vals.push_back(rng.normal(3, 2));
  }
  const auto p = peer_means(keys, vals);
  std::map<std::string, std::pair<double, double>> sums;
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ++counts[keys[i]];
    sums[keys[i]].first += vals[i];
    sums[keys[i]].second += p[i];
  }
  for (const auto& [k, s] : sums) {
    if (counts[k] < 2) continue;
    CHECK(std::abs(s.first - s.second) / counts[k] <= 1e-12 * std::max(1.0, std::abs(s.first)));
  }
}

TEST_CASE("derived columns") {
  FacilityPanel panel;
  for (int i = 0; i < 8; ++i) panel.records.push_back(rec("F" + std::to_string(i), "01001", "C1"));
  panel.records.push_back(rec("G1", "01002"));
  panel.records[0].def_total = 9;
  panel.records[0].def_total_prev = 4;
  const DerivedColumns d = derive_columns(panel, 7, 34);
  CHECK(d.nh_total[0] == 8);
  CHECK(d.large_county[0] == 1);
  CHECK(d.large_county[8] == 0);
  CHECK(d.chain_size[0] == 8);
  CHECK(std::isnan(d.chain_size[8]));
  CHECK(d.large_chain[0] == 0);
  CHECK(d.in_chain[8] == 0);
  CHECK(d.delta_def[0] == 5);
  CHECK(derive_columns(panel, 8, 7).large_chain[0] == 1);
  CHECK_THROWS_AS(outcome_column(panel, "zip"), netmon::DomainError);
}

TEST_CASE("peer coefficient is one when outcomes are group constants") {
  FacilityPanel panel;
  netmon::Rng rng(1);
  for (int c = 0; c < 12; ++c) {
    const std::string county = (c < 6 ? "01" : "02") + std::to_string(100 + c);
    const int rating = 1 + c % 5;
    for (int i = 0; i < 4; ++i) {
      FacilityRecord r = rec("F" + std::to_string(c) + "_" + std::to_string(i), county);
      r.overall_rating = rating;
      r.beds = 50 + static_cast<int>(rng.below(100));
      r.ownership = i == 0 ? Ownership::non_profit : i == 1 ? Ownership::government : Ownership::for_profit;
      if (i == 3) r.chain_id = "C" + std::to_string(c % 3);
      panel.records.push_back(r);
    }
  }
  const RegressionResult r = spillover_regression(panel, {});
  CHECK(r.coef_of("county_peer") == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.ssr <= 1e-18);
  CHECK(r.se_type == SeType::cluster);
  CHECK(r.cluster_key == "county_fips");
  CHECK(r.n_clusters == 12);
}

TEST_CASE("peer regression recovers the random effects slope") {
  // y = u_g + e: slope of y on its leave-one-out mean is s_u^2 / (s_u^2 + s_e^2 / (m - 1))
  const int groups = 3000, m = 5;
  const double su2 = 0.3, se2 = 1.0;
  const double truth = su2 / (su2 + se2 / (m - 1));
  netmon::Rng rng(12);
  std::vector<std::string> keys;
  std::vector<double> y;
  for (int g = 0; g < groups; ++g) {
    const double u = std::sqrt(su2) * rng.normal();
    for (int i = 0; i < m; ++i) {
      keys.push_back(std::to_string(g));
      y.push_back(u + std::sqrt(se2) * rng.normal());
    }
  }
  const auto peer = peer_means(keys, y);
  OlsInput in;
  in.y = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  in.x.resize(in.y.size(), 2);
  in.x.col(0).setOnes();
  in.x.col(1) = Eigen::Map<const VectorXd>(peer.data(), static_cast<Eigen::Index>(peer.size()));
  in.names = {"intercept", "peer"};
  in.se = SeType::cluster;
  in.clusters = keys;
  const RegressionResult r = ols(in);
  CHECK(std::abs(r.coef_of("peer") - truth) <= 2 * r.se_of("peer"));
}

TEST_CASE("kink fit") {
  VectorXd x(30), y(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = 0.1 * i;
    y[i] = 0.5 + 0.12 * x[i] + 1.34 * std::max(0.0, x[i] - 1.5);
  }
  const MatrixXd none(30, 0);
  const KinkFit exact = kink_fit(y, x, none, 1.5);
  CHECK(exact.ssr <= 1e-20);
  CHECK(exact.coef[2] == doctest::Approx(1.34).epsilon(1e-10));
  CHECK(exact.coef[1] == doctest::Approx(0.12).epsilon(1e-10));

  // linear world: every c reproduces the linear fit
  const VectorXd lin = (0.3 + 0.7 * x.array()).matrix();
  for (double c : {0.35, 1.0, 2.45}) {
    const KinkFit f = kink_fit(lin, x, none, c);
    CHECK(f.ssr <= 1e-9);
    CHECK(std::abs(f.coef[2]) <= 1e-9);
  }
  CHECK_THROWS_AS(kink_fit(y, x, none, 3.5), netmon::DomainError);
  CHECK_THROWS_AS(kink_fit(y, x, none, 0.0), netmon::DomainError);
}

TEST_CASE("type 7 quantile") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5, 1, 3}, 0.0) == 1.0);
  CHECK(quantile({5, 1, 3}, 1.0) == 5.0);
  CHECK(quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.1) == doctest::Approx(1.9));
}

TEST_CASE("break candidates") {
  VectorXd x(200);
  for (int i = 0; i < 200; ++i) x[i] = i % 20;
  const auto c = break_candidates(x, {});
  // window [1.9, 17.1] on values 0..19
  CHECK(c.front() == 2.0);
  CHECK(c.back() == 17.0);
  CHECK(c.size() == 16);
  VectorXd few(50);
  for (int i = 0; i < 50; ++i) few[i] = i % 5;
  CHECK_THROWS_AS(break_candidates(few, {}), netmon::DomainError);
}

TEST_CASE("break search profile matches direct kink fits") {
  netmon::Rng rng(3);
  const int n = 400;
  VectorXd x(n), y(n);
  MatrixXd ctrl(n, 1);
  for (int i = 0; i < n; ++i) {
    x[i] = std::log(1.0 + static_cast<double>(rng.below(40)));
    ctrl(i, 0) = rng.normal();
    y[i] = 0.2 * x[i] + 0.9 * std::max(0.0, x[i] - 2.0) + 0.3 * ctrl(i, 0) + 0.4 * rng.normal();
  }
  const BreakResult r = break_search(y, x, ctrl);
  const double ssr0 = linear_ssr(y, x, ctrl);
  CHECK(r.ssr0 == doctest::Approx(ssr0).epsilon(1e-10));
  CHECK(r.df1 == n - 4);
  double best = -1;
  for (const auto& [c, f] : r.f_profile) {
    const double ssr1 = kink_fit(y, x, ctrl, c).ssr;
    CHECK(ssr1 <= ssr0 * (1 + 1e-12));
    CHECK(f == doctest::Approx((ssr0 - ssr1) / (ssr1 / (n - 4))).epsilon(1e-8));
    CHECK(f <= r.f_max);
    best = std::max(best, f);
  }
  CHECK(r.f_max == best);
  CHECK(r.f_max == doctest::Approx((r.ssr0 - r.ssr1) / (r.ssr1 / r.df1)).epsilon(1e-12));
  const KinkFit at = kink_fit(y, x, ctrl, r.c_hat);
  CHECK(r.beta2 == doctest::Approx(at.coef[2]).epsilon(1e-8));
  CHECK(r.n_star == doctest::Approx(std::exp(r.c_hat)));
  CHECK(std::abs(r.c_hat - 2.0) < 0.3);
  CHECK(profile_tsv(r).rfind("c\tF\n", 0) == 0);
}

TEST_CASE("F statistic arithmetic") {
  // ssr0 = 100, ssr1 = 80, df1 = 40 gives F = 10
  BreakResult r;
  r.ssr0 = 100;
  r.ssr1 = 80;
  r.df1 = 40;
  CHECK((r.ssr0 - r.ssr1) / (r.ssr1 / r.df1) == 10.0);
}

TEST_CASE("argmax ties go to the smallest candidate") {
  VectorXd x(40);
  for (int i = 0; i < 40; ++i) x[i] = i % 20;
  // a zero outcome gives every candidate F = 0
  const BreakResult r = break_search(VectorXd::Zero(40), x, MatrixXd(40, 0));
  for (const auto& [c, f] : r.f_profile) CHECK(f == 0.0);
  CHECK(r.c_hat == r.f_profile.front().first);

  // an exact kink is an infinite F at its own candidate only
  VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = 1 + 0.5 * x[i] + 2 * std::max(0.0, x[i] - 9);
  const BreakResult k = break_search(y, x, MatrixXd(40, 0));
  CHECK(k.c_hat == 9.0);
  CHECK(std::isinf(k.f_max));
}

TEST_CASE("planted kink at county scale is recovered") {
  netmon::data::KinkWorldConfig cfg = netmon::data::KinkWorldConfig::county_scale();
  cfg.seed = 101;
  const auto s = netmon::data::generate_kink_sample(cfg);
  BreakOptions opt;
  opt.bootstrap_reps = 199;
  opt.seed = 5;
  const BreakResult r = break_search(s.y, s.x, MatrixXd(s.x.size(), 0), opt);
  const auto cand = break_candidates(s.x, opt);
  const auto at = std::find(cand.begin(), cand.end(), r.c_hat) - cand.begin();
  const auto truth = std::min_element(cand.begin(), cand.end(), [&](double a, double b) {
                       return std::abs(a - cfg.c0) < std::abs(b - cfg.c0);
                     }) - cand.begin();
  CHECK(std::abs(at - truth) <= 1);
  REQUIRE(r.p_value.has_value());
  CHECK(*r.p_value <= 0.01);
  CHECK(r.bootstrap_reps == 199);
}

TEST_CASE("linear worlds give much smaller sup-F than planted kinks") {
  std::vector<double> linear_f, kink_f;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    netmon::data::KinkWorldConfig cfg = netmon::data::KinkWorldConfig::county_scale();
    cfg.seed = seed;
    auto s = netmon::data::generate_kink_sample(cfg);
    kink_f.push_back(break_search(s.y, s.x, MatrixXd(s.x.size(), 0)).f_max);
    cfg.beta2 = 0.0;
    s = netmon::data::generate_kink_sample(cfg);
    linear_f.push_back(break_search(s.y, s.x, MatrixXd(s.x.size(), 0)).f_max);
  }
  CHECK(median(kink_f) > 10 * median(linear_f));
}

TEST_CASE("bootstrap is deterministic and calm under the null") {
  netmon::data::KinkWorldConfig cfg = netmon::data::KinkWorldConfig::county_scale();
  cfg.beta2 = 0.0;
  cfg.n_units = 800;
  cfg.seed = 77;
  const auto s = netmon::data::generate_kink_sample(cfg);
  const MatrixXd none(s.x.size(), 0);
  const double p1 = bootstrap_supf(s.y, s.x, none, 99, 3);
  CHECK(p1 == bootstrap_supf(s.y, s.x, none, 99, 3));
  BreakOptions threaded;
  threaded.threads = 3;
  CHECK(p1 == bootstrap_supf(s.y, s.x, none, 99, 3, threaded));
  CHECK(p1 >= 0.01);
  CHECK(p1 <= 1.0);
  CHECK_THROWS_AS(bootstrap_supf(s.y, s.x, none, 50, 3), netmon::DomainError);
}

TEST_CASE("F upper tail") {
  // d1 = 2 has the closed form (1 + 2w/d2)^(-d2/2)
  for (double w : {0.1, 1.0, 3.7, 20.0}) {
    for (double d2 : {3.0, 10.0, 57.0}) {
      CHECK(f_upper_tail(w, 2, d2) == doctest::Approx(std::pow(1 + 2 * w / d2, -d2 / 2)).epsilon(1e-12));
    }
  }
  CHECK(f_upper_tail(2.5, 3, 17) == doctest::Approx(0.09428280507894803).epsilon(1e-10));
  CHECK(f_upper_tail(0.3, 7, 40) == doctest::Approx(0.9497197437673579).epsilon(1e-10));
  CHECK(f_upper_tail(0.0, 3, 5) == 1.0);
}

TEST_CASE("levene frozen values") {
  const std::vector<double> v{2.1, 3.4, 1.9, 5.0, 4.4, 1.0, 7.5, 3.3, 9.1, 0.2, 6.6, 4.0, 4.1, 3.9, 4.2};
  const std::vector<int> g{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2};
  const LeveneResult mean = levene_test(v, g);
  CHECK(mean.w == doctest::Approx(14.499343359910991).epsilon(1e-12));
  CHECK(mean.p_value == doctest::Approx(0.000628735240564805).epsilon(1e-9));
  CHECK(mean.df1 == 2);
  CHECK(mean.df2 == 12);
  const LeveneResult med = levene_test(v, g, LeveneCenter::median);
  CHECK(med.w == doctest::Approx(13.495247561657449).epsilon(1e-12));
  CHECK(med.p_value == doctest::Approx(0.0008498357086443852).epsilon(1e-9));
  const std::vector<double> two(v.begin(), v.begin() + 11);
  const std::vector<int> g2(g.begin(), g.begin() + 11);
  CHECK(levene_test(two, g2).w == doctest::Approx(10.142276653300813).epsilon(1e-12));
}

TEST_CASE("levene degenerate inputs") {
  // same absolute deviations in both groups
  const LeveneResult same = levene_test({1, 3, 5, 10, 12, 14}, {0, 0, 0, 1, 1, 1});
  CHECK(same.w == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(levene_test({1, 2, 3}, {0, 0, 0}), netmon::DomainError);
  CHECK_THROWS_AS(levene_test({1, 2, 3}, {0, 0, 1}), netmon::DomainError);
  CHECK_THROWS_AS(levene_test({1, 2}, {0}), netmon::DomainError);
  const LeveneResult flat = levene_test({2, 2, 5, 5}, {0, 0, 1, 1});
  CHECK(flat.w == 0.0);
  CHECK(flat.p_value == 1.0);
}

TEST_CASE("levene size and power") {
  int rejections = 0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    netmon::Rng rng = netmon::Rng::substream(99, s);
    std::vector<double> v = normals(rng, 100, 1.0);
    const auto b = normals(rng, 100, 1.0);
    v.insert(v.end(), b.begin(), b.end());
    std::vector<int> g(200, 0);
    std::fill(g.begin() + 100, g.end(), 1);
    if (levene_test(v, g).p_value < 0.05) ++rejections;
  }
  CHECK(rejections >= 8);
  CHECK(rejections <= 36);

  int detected = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    netmon::Rng rng = netmon::Rng::substream(7, s);
    std::vector<double> v = normals(rng, 200, 1.0);
    const auto b = normals(rng, 200, 2.0);
    v.insert(v.end(), b.begin(), b.end());
    std::vector<int> g(400, 0);
    std::fill(g.begin() + 200, g.end(), 1);
    if (levene_test(v, g).p_value < 0.001) ++detected;
  }
  CHECK(detected >= 98);
}

TEST_CASE("variance by threshold") {
  FacilityPanel panel;
  netmon::Rng rng(6);
  // 40 small counties of 3 and 10 large counties of 12
  int id = 0;
  for (int c = 0; c < 50; ++c) {
    const bool large = c >= 40;
    const int m = large ? 12 : 3;
    for (int i = 0; i < m; ++i) {
      FacilityRecord r = rec("F" + std::to_string(id++), "01" + std::to_string(100 + c));
      r.def_total = static_cast<int>(std::max(0.0, std::round(20 + (large ? 8.0 : 4.0) * rng.normal())));
      r.overall_rating = 1 + static_cast<int>(rng.below(5));
      panel.records.push_back(r);
    }
  }
  const auto rows = variance_by_threshold(panel, GroupKey::county, 7, {"def_total", "overall_rating"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].outcome == "def_total");
  CHECK(rows[0].n_small == 120);
  CHECK(rows[0].n_large == 120);
  CHECK(rows[0].var_large > 2 * rows[0].var_small);
  CHECK(rows[0].p_value < 0.01);

  std::vector<double> small, large;
  std::vector<int> groups;
  std::vector<double> all;
  for (const auto& r : panel.records) {
    const bool is_large = r.facility_id.size() > 0 && std::stoi(r.facility_id.substr(1)) >= 120;
    (is_large ? large : small).push_back(r.def_total);
    all.push_back(r.def_total);
    groups.push_back(is_large ? 1 : 0);
  }
  auto var = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  CHECK(rows[0].var_small == doctest::Approx(var(small)));
  CHECK(rows[0].var_large == doctest::Approx(var(large)));
  CHECK(rows[0].levene_w == doctest::Approx(levene_test(all, groups).w));
  CHECK_THROWS_AS(variance_by_threshold(panel, GroupKey::county, 50, {"def_total"}), netmon::DomainError);
}

TEST_CASE("deterioration regression drops a degenerate split") {
  FacilityPanel panel;
  netmon::Rng rng(8);
  for (int c = 0; c < 20; ++c) {
    for (int i = 0; i < 9; ++i) {
      FacilityRecord r = rec("F" + std::to_string(c * 9 + i), std::string(c < 10 ? "01" : "02") + std::to_string(100 + c));
      r.def_total_prev = static_cast<int>(rng.below(20));
      r.def_total = static_cast<int>(rng.below(20));
      r.beds = 40 + static_cast<int>(rng.below(80));
      r.ownership = i % 3 == 0 ? Ownership::non_profit : i % 3 == 1 ? Ownership::government : Ownership::for_profit;
      panel.records.push_back(r);
    }
  }
  const RegressionResult r = deterioration_regression(panel);
  CHECK(std::find(r.dropped.begin(), r.dropped.end(), "large_county") != r.dropped.end());
  CHECK(std::find(r.dropped.begin(), r.dropped.end(), "large_chain") != r.dropped.end());
  CHECK(r.has("beds"));
  CHECK(r.se_type == SeType::hc1);
}

TEST_CASE("deterioration has correct size in a zero-effect world") {
  int significant = 0;
  const int runs = 60;
  for (int s = 0; s < runs; ++s) {
    netmon::data::GeneratorConfig cfg;
    cfg.seed = 500 + static_cast<std::uint64_t>(s);
    cfg.n_facilities = 3000;
    cfg.theta_county = 0.0;
    cfg.theta_chain = 0.0;
    const auto gen = netmon::data::generate(cfg);
    const RegressionResult r = deterioration_regression(gen.panel);
    if (std::abs(r.coef_of("large_county") / r.se_of("large_county")) >= 1.96) ++significant;
  }
  // 5% nominal; allow sampling noise over 60 runs
  CHECK(significant <= 8);
}

TEST_CASE("group table") {
  FacilityPanel panel;
  panel.records.push_back(rec("F1", "01001", "C1"));
  panel.records.push_back(rec("F2", "01001"));
  panel.records.push_back(rec("F3", "01002", "C1"));
  panel.records[0].sff = 1;
  panel.records[1].ownership = Ownership::government;
  panel.records[1].beds = 300;
  const GroupTable t = aggregate(panel, GroupKey::county);
  REQUIRE(t.ids == std::vector<std::string>{"01001", "01002"});
  CHECK(t.column("n")[0] == 2);
  CHECK(t.column("log_n")[0] == doctest::Approx(std::log(2.0)));
  CHECK(t.column("sff")[0] == 1);
  CHECK(t.column("share_gov")[0] == 0.5);
  CHECK(t.column("share_in_chain")[0] == 0.5);
  CHECK(t.column("avg_beds")[0] == 150.5);
  CHECK(t.states[1] == "01");
  const GroupTable ch = aggregate(panel, GroupKey::chain);
  CHECK(ch.ids == std::vector<std::string>{"C1"});
  CHECK(ch.column("n")[0] == 2);
  CHECK(to_csv(t).rfind("id,", 0) == 0);
}
