#include "netmon/synthetic_data.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "netmon/error.hpp"
#include "netmon/network_spectral.hpp"
#include "netmon/rng.hpp"
#include "netmon/stochastic_sim.hpp"

namespace netmon::data {

namespace {

template <typename Config, typename F>
void visit_fields(Config& c, F&& f) {
  f("seed", c.seed);
  f("n_facilities", c.n_facilities);
  f("n_states", c.n_states);
  f("county_size_mu", c.county_size_mu);
  f("county_size_sigma", c.county_size_sigma);
  f("chain_share", c.chain_share);
  f("chain_size_mu", c.chain_size_mu);
  f("chain_size_sigma", c.chain_size_sigma);
  f("chain_size_min", c.chain_size_min);
  f("county_cutoff", c.county_cutoff);
  f("chain_cutoff", c.chain_cutoff);
  f("lambda_county_small", c.lambda_county_small);
  f("lambda_county_large", c.lambda_county_large);
  f("lambda_chain_small", c.lambda_chain_small);
  f("lambda_chain_large", c.lambda_chain_large);
  f("county_shock_sigma2", c.county_shock_sigma2);
  f("chain_shock_sigma2", c.chain_shock_sigma2);
  f("idio_sigma2", c.idio_sigma2);
  f("rating_noise_sd", c.rating_noise_sd);
  f("staffing_loading", c.staffing_loading);
  f("staffing_noise_sd", c.staffing_noise_sd);
  f("gov_base", c.gov_base);
  f("gov_small", c.gov_small);
  f("nonprofit_base", c.nonprofit_base);
  f("nonprofit_small", c.nonprofit_small);
  f("beds_log_mean", c.beds_log_mean);
  f("beds_log_sd", c.beds_log_sd);
  f("def_base", c.def_base);
  f("def_quality_slope", c.def_quality_slope);
  f("def_for_profit_effect", c.def_for_profit_effect);
  f("def_gov_effect", c.def_gov_effect);
  f("def_dispersion_small", c.def_dispersion_small);
  f("def_dispersion_large", c.def_dispersion_large);
  f("theta_county", c.theta_county);
  f("theta_chain", c.theta_chain);
  f("sff_alpha", c.sff_alpha);
  f("sff_c0", c.sff_c0);
  f("sff_beta1", c.sff_beta1);
  f("sff_beta2", c.sff_beta2);
}

std::string format(const char* pattern, int value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

int draw_size(Rng& rng, double mu, double sigma, int min_size) {
  const double v = std::round(rng.lognormal(mu, sigma));
  return std::max(min_size, static_cast<int>(std::min(v, 1e6)));
}

// Draws sizes until they cover `total`; the last one is truncated.
std::vector<int> partition(Rng& rng, int total, double mu, double sigma, int min_size) {
  std::vector<int> sizes;
  int covered = 0;
  while (covered < total) {
    int s = std::min(draw_size(rng, mu, sigma, min_size), total - covered);
    if (s < min_size && !sizes.empty()) {
      sizes.back() += s;
    } else {
      sizes.push_back(s);
    }
    covered += s;
  }
  return sizes;
}

// Effort deviations (I - lambda G_hat)^{-1} eps on the mean-field graph of the group.
std::vector<double> component(Rng& rng, int m, double lambda, double sigma2) {
  const double sd = std::sqrt(sigma2);
  if (m == 1) return {sd * rng.normal()};
  stochastic::ShockSpec spec;
  spec.graph = spectral::mean_field_graph(m);
  spec.sigma2 = sigma2;
  spec.lambda = lambda;
  Eigen::VectorXd eps(m);
  for (int i = 0; i < m; ++i) eps[i] = sd * rng.normal();
  const Eigen::VectorXd e = stochastic::equilibrium_with_shocks(spec, 0.0, eps);
  const double base = 1.0 / (1.0 - lambda);
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = e[i] - base;
  return out;
}

// Rating 1..5 by panel-wide quintile of score; ties broken by index.
std::vector<int> quintile_bins(const std::vector<double>& score) {
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  std::vector<int> bins(n);
  for (std::size_t r = 0; r < n; ++r) bins[order[r]] = 1 + static_cast<int>((5 * r) / n);
  return bins;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_facilities < 1) throw DomainError("n_facilities must be >= 1");
  if (n_states < 1 || n_states > 99) throw DomainError("n_states must lie in [1, 99]");
  if (!(county_size_sigma >= 0.0 && chain_size_sigma >= 0.0)) throw DomainError("size sigmas must be >= 0");
  if (!(chain_share >= 0.0 && chain_share <= 1.0)) throw DomainError("chain_share must lie in [0, 1]");
  if (chain_size_min < 2) throw DomainError("chain_size_min must be >= 2");
  const double chained = chain_share * n_facilities;
  if (chained > 0.0 && std::lround(chained) < chain_size_min) {
    throw DomainError("chain configuration infeasible: chained facilities fewer than the minimum chain size");
  }
  if (county_cutoff < 1 || chain_cutoff < 1) throw DomainError("cutoffs must be >= 1");
  for (double l : {lambda_county_small, lambda_county_large, lambda_chain_small, lambda_chain_large}) {
    if (!(l >= 0.0 && l < 1.0)) throw DomainError("component lambdas must lie in [0, 1)");
  }
  for (double v : {county_shock_sigma2, chain_shock_sigma2, idio_sigma2, rating_noise_sd, staffing_noise_sd, beds_log_sd}) {
    if (!(v >= 0.0)) throw DomainError("noise scales must be >= 0");
  }
  if (!(gov_base >= 0.0 && gov_small >= 0.0 && nonprofit_base >= 0.0 && nonprofit_small >= 0.0 &&
        gov_base + gov_small + nonprofit_base + nonprofit_small <= 1.0)) {
    throw DomainError("ownership probabilities must be nonnegative and sum to at most 1");
  }
  if (!(def_base > 0.0)) throw DomainError("def_base must be > 0");
  if (!(def_dispersion_small > 0.0 && def_dispersion_large > 0.0)) throw DomainError("dispersions must be > 0");
  if (!(theta_county >= 0.0 && theta_chain >= 0.0)) throw DomainError("theta shifts must be >= 0");
  if (sff_link == SffLink::identity && !(sff_alpha >= 0.0 && sff_beta1 >= 0.0 && sff_beta1 + sff_beta2 >= 0.0)) {
    throw DomainError("identity-link SFF intensity must be nonnegative for every county size");
  }
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = nlohmann::json::object();
  visit_fields(c, [&](const char* name, const auto& v) { j[name] = v; });
  j["sff_link"] = c.sff_link == SffLink::identity ? "identity" : "log";
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  if (!j.is_object()) throw DomainError("generator config must be a JSON object");
  std::vector<std::string> known{"sff_link"};
  visit_fields(c, [&](const char* name, auto& v) {
    known.push_back(name);
    if (j.contains(name)) {
      try {
        j.at(name).get_to(v);
      } catch (const nlohmann::json::exception&) {
        throw DomainError(std::string("generator config: field '") + name + "' has the wrong type");
      }
    }
  });
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw DomainError("generator config: unknown field '" + key + "'");
    }
  }
  if (j.contains("sff_link")) {
    const std::string link = j.at("sff_link").get<std::string>();
    if (link == "identity") c.sff_link = SffLink::identity;
    else if (link == "log") c.sff_link = SffLink::log;
    else throw DomainError("generator config: sff_link must be identity or log");
  }
}

GeneratedPanel generate(const GeneratorConfig& cfg) {
  cfg.validate();
  // independent substreams per stage
  Rng size_rng = Rng::substream(cfg.seed, 1);
  Rng chain_rng = Rng::substream(cfg.seed, 2);
  Rng attr_rng = Rng::substream(cfg.seed, 3);
  Rng quality_rng = Rng::substream(cfg.seed, 4);
  Rng outcome_rng = Rng::substream(cfg.seed, 5);
  Rng sff_rng = Rng::substream(cfg.seed, 6);

  const int n = cfg.n_facilities;
  const std::vector<int> county_sizes = partition(size_rng, n, cfg.county_size_mu, cfg.county_size_sigma, 1);
  const auto n_counties = static_cast<int>(county_sizes.size());

  std::vector<int> county_of(static_cast<std::size_t>(n));
  std::vector<std::string> fips(static_cast<std::size_t>(n_counties));
  std::vector<std::string> state_of(static_cast<std::size_t>(n_counties));
  std::vector<int> per_state(static_cast<std::size_t>(cfg.n_states), 0);
  {
    int next = 0;
    for (int c = 0; c < n_counties; ++c) {
      const auto s = static_cast<int>(size_rng.below(static_cast<std::uint64_t>(cfg.n_states)));
      const int within = ++per_state[static_cast<std::size_t>(s)];
      if (within > 999) throw DomainError("generator: more than 999 counties in one state; raise n_states");
      state_of[static_cast<std::size_t>(c)] = format("S%02d", s + 1);
      fips[static_cast<std::size_t>(c)] = format("%02d", s + 1) + format("%03d", within);
      for (int k = 0; k < county_sizes[static_cast<std::size_t>(c)]; ++k) county_of[static_cast<std::size_t>(next++)] = c;
    }
  }

  // chains: random subset of facilities split into lognormal-sized chains
  const int chained = static_cast<int>(std::lround(cfg.chain_share * n));
  std::vector<int> chain_of(static_cast<std::size_t>(n), -1);
  std::vector<int> chain_sizes;
  if (chained >= cfg.chain_size_min) {
    chain_sizes = partition(chain_rng, chained, cfg.chain_size_mu, cfg.chain_size_sigma, cfg.chain_size_min);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(chain_rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    int next = 0;
    for (std::size_t ch = 0; ch < chain_sizes.size(); ++ch) {
      for (int k = 0; k < chain_sizes[ch]; ++k) chain_of[static_cast<std::size_t>(order[static_cast<std::size_t>(next++)])] = static_cast<int>(ch);
    }
  }
  std::vector<std::vector<int>> chain_members(chain_sizes.size());
  for (int i = 0; i < n; ++i) {
    if (chain_of[static_cast<std::size_t>(i)] >= 0) chain_members[static_cast<std::size_t>(chain_of[static_cast<std::size_t>(i)])].push_back(i);
  }

  FacilityPanel panel;
  panel.records.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    FacilityRecord& r = panel.records[static_cast<std::size_t>(i)];
    const auto c = static_cast<std::size_t>(county_of[static_cast<std::size_t>(i)]);
    r.facility_id = format("F%06d", i + 1);
    r.county_fips = fips[c];
    r.state = state_of[c];
    if (chain_of[static_cast<std::size_t>(i)] >= 0) r.chain_id = format("C%04d", chain_of[static_cast<std::size_t>(i)] + 1);
    const double decay = std::exp(-2.0 * std::log(static_cast<double>(county_sizes[c])));
    const double p_gov = cfg.gov_base + cfg.gov_small * decay;
    const double p_np = cfg.nonprofit_base + cfg.nonprofit_small * decay;
    const double u = attr_rng.uniform();
    r.ownership = u < p_gov ? Ownership::government : (u < p_gov + p_np ? Ownership::non_profit : Ownership::for_profit);
    r.beds = std::max(1, static_cast<int>(std::lround(attr_rng.lognormal(cfg.beds_log_mean, cfg.beds_log_sd))));
  }

  // latent quality
  std::vector<double> quality(static_cast<std::size_t>(n), 0.0);
  {
    int next = 0;
    for (int c = 0; c < n_counties; ++c) {
      const int m = county_sizes[static_cast<std::size_t>(c)];
      const double lambda = m > cfg.county_cutoff ? cfg.lambda_county_large : cfg.lambda_county_small;
      const std::vector<double> comp = component(quality_rng, m, lambda, cfg.county_shock_sigma2);
      for (int k = 0; k < m; ++k) quality[static_cast<std::size_t>(next++)] += comp[static_cast<std::size_t>(k)];
    }
  }
  for (const auto& members : chain_members) {
    const auto m = static_cast<int>(members.size());
    const double lambda = m > cfg.chain_cutoff ? cfg.lambda_chain_large : cfg.lambda_chain_small;
    const std::vector<double> comp = component(quality_rng, m, lambda, cfg.chain_shock_sigma2);
    for (int k = 0; k < m; ++k) quality[static_cast<std::size_t>(members[static_cast<std::size_t>(k)])] += comp[static_cast<std::size_t>(k)];
  }
  const double idio_sd = std::sqrt(cfg.idio_sigma2);
  for (double& q : quality) q += idio_sd * quality_rng.normal();

  // ratings
  std::vector<double> overall_score(static_cast<std::size_t>(n));
  std::vector<double> staffing_score(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < quality.size(); ++i) {
    overall_score[i] = quality[i] + cfg.rating_noise_sd * outcome_rng.normal();
    staffing_score[i] = cfg.staffing_loading * quality[i] + cfg.staffing_noise_sd * outcome_rng.normal();
  }
  const std::vector<int> overall = quintile_bins(overall_score);
  const std::vector<int> staffing = quintile_bins(staffing_score);

  // deficiencies over two inspection cycles sharing a facility frailty
  for (int i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    FacilityRecord& r = panel.records[s];
    r.overall_rating = overall[s];
    r.staffing_rating = staffing[s];
    const int m = county_sizes[static_cast<std::size_t>(county_of[s])];
    const bool large_county = m > cfg.county_cutoff;
    const bool large_chain = chain_of[s] >= 0 &&
                             chain_sizes[static_cast<std::size_t>(chain_of[s])] > cfg.chain_cutoff;
    double log_mean = std::log(cfg.def_base) - cfg.def_quality_slope * quality[s];
    if (r.ownership == Ownership::for_profit) log_mean += cfg.def_for_profit_effect;
    if (r.ownership == Ownership::government) log_mean += cfg.def_gov_effect;
    const double dispersion = large_county ? cfg.def_dispersion_large : cfg.def_dispersion_small;
    const double frailty = outcome_rng.gamma(dispersion, 1.0 / dispersion);
    const double mean_prev = std::exp(log_mean) * frailty;
    const double shift = (large_county ? cfg.theta_county : 0.0) + (large_chain ? cfg.theta_chain : 0.0);
    r.def_total_prev = static_cast<int>(outcome_rng.poisson(mean_prev));
    r.def_total = static_cast<int>(outcome_rng.poisson(mean_prev + shift));
  }

  // SFF counts per county, assigned to the lowest-quality facilities
  {
    int next = 0;
    for (int c = 0; c < n_counties; ++c) {
      const int m = county_sizes[static_cast<std::size_t>(c)];
      const double x = std::log(static_cast<double>(m));
      const double index = cfg.sff_alpha + cfg.sff_beta1 * x + cfg.sff_beta2 * std::max(0.0, x - cfg.sff_c0);
      const double intensity = cfg.sff_link == SffLink::identity ? std::max(0.0, index) : std::exp(index);
      const int count = static_cast<int>(std::min<std::int64_t>(sff_rng.poisson(intensity), m));
      std::vector<int> members(static_cast<std::size_t>(m));
      std::iota(members.begin(), members.end(), next);
      std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
        return quality[static_cast<std::size_t>(a)] < quality[static_cast<std::size_t>(b)];
      });
      const int candidates = std::min(count, m - count);
      for (int k = 0; k < count; ++k) panel.records[static_cast<std::size_t>(members[static_cast<std::size_t>(k)])].sff = 1;
      for (int k = count; k < count + candidates; ++k) {
        panel.records[static_cast<std::size_t>(members[static_cast<std::size_t>(k)])].sff_candidate = 1;
      }
      next += m;
    }
  }

  GeneratedPanel out;
  out.panel = std::move(panel);
  int large_counties = 0;
  for (int m : county_sizes) large_counties += m > cfg.county_cutoff;
  int large_chains = 0;
  for (int m : chain_sizes) large_chains += m > cfg.chain_cutoff;
  out.truth = nlohmann::json{
      {"config", cfg},
      {"mechanism",
       {{"latent_quality", "county and chain mean-field equilibrium responses (I - lambda G_hat)^-1 eps, "
                           "lambda by component size above/below cutoff, plus idiosyncratic noise"},
        {"ratings", "panel-wide quintile bins of latent quality plus noise"},
        {"deficiencies", "Poisson(mean * g) with g ~ Gamma(r, 1/r), r by county size; "
                         "current cycle mean adds theta_county * large_county + theta_chain * large_chain"},
        {"sff", "county count ~ Poisson(alpha + beta1 log n + beta2 max(0, log n - c0)) under the configured link, "
                "capped at n, assigned to the lowest-quality facilities; candidates are the next lowest"}}},
      {"planted",
       {{"c0", cfg.sff_c0},
        {"n_star", std::exp(cfg.sff_c0)},
        {"beta1", cfg.sff_beta1},
        {"beta2", cfg.sff_beta2},
        {"theta_county", cfg.theta_county},
        {"theta_chain", cfg.theta_chain},
        {"lambda_county", {{"small", cfg.lambda_county_small}, {"large", cfg.lambda_county_large}}},
        {"lambda_chain", {{"small", cfg.lambda_chain_small}, {"large", cfg.lambda_chain_large}}}}},
      {"counts",
       {{"facilities", n},
        {"counties", n_counties},
        {"large_counties", large_counties},
        {"chains", chain_sizes.size()},
        {"large_chains", large_chains},
        {"chain_affiliated", chained >= cfg.chain_size_min ? chained : 0}}}};
  return out;
}

KinkWorldConfig KinkWorldConfig::county_scale() { return KinkWorldConfig{}; }

KinkWorldConfig KinkWorldConfig::chain_scale() {
  KinkWorldConfig c;
  c.n_units = 601;
  c.size_mu = 2.5;
  c.size_sigma = 1.1;
  c.size_min = 2;
  c.c0 = std::log(34.0);
  c.beta1 = 0.046;
  c.beta2 = 0.503;
  c.sigma = 0.344;
  return c;
}

KinkSample generate_kink_sample(const KinkWorldConfig& cfg) {
  if (cfg.n_units < 3) throw DomainError("kink world needs at least 3 units");
  if (cfg.size_min < 1) throw DomainError("size_min must be >= 1");
  if (!(cfg.sigma >= 0.0 && cfg.size_sigma >= 0.0)) throw DomainError("kink world scales must be >= 0");
  Rng size_rng = Rng::substream(cfg.seed, 1);
  Rng noise_rng = Rng::substream(cfg.seed, 2);
  KinkSample s;
  s.x.resize(cfg.n_units);
  s.y.resize(cfg.n_units);
  for (int i = 0; i < cfg.n_units; ++i) {
    const int m = draw_size(size_rng, cfg.size_mu, cfg.size_sigma, cfg.size_min);
    const double x = std::log(static_cast<double>(m));
    s.sizes.push_back(m);
    s.x[i] = x;
    s.y[i] = cfg.alpha + cfg.beta1 * x + cfg.beta2 * std::max(0.0, x - cfg.c0) + cfg.sigma * noise_rng.normal();
  }
  return s;
}

}  // namespace netmon::data
