#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "netmon/panel.hpp"

namespace netmon::data {

enum class SffLink { identity, log };

struct GeneratorConfig {
  std::uint64_t seed = 20240501;
  int n_facilities = 15000;
  int n_states = 50;

  // county sizes ~ round(lognormal), at least 1
  double county_size_mu = 1.205;
  double county_size_sigma = 1.1;
  // chains cover chain_share of facilities; sizes ~ round(lognormal), at least chain_size_min
  double chain_share = 0.55;
  double chain_size_mu = 2.0;
  double chain_size_sigma = 1.3;
  int chain_size_min = 2;

  int county_cutoff = 7;
  int chain_cutoff = 34;

  // latent quality: mean-field equilibrium response within county and chain
  double lambda_county_small = 0.15;
  double lambda_county_large = 0.6;
  double lambda_chain_small = 0.1;
  double lambda_chain_large = 0.5;
  double county_shock_sigma2 = 1.0;
  double chain_shock_sigma2 = 0.5;
  double idio_sigma2 = 1.0;
  double rating_noise_sd = 0.5;
  double staffing_loading = 0.8;
  double staffing_noise_sd = 0.8;

  // ownership probabilities a + b exp(-2 log n) by county size n
  double gov_base = 0.06;
  double gov_small = 0.20;
  double nonprofit_base = 0.22;
  double nonprofit_small = 0.08;

  double beds_log_mean = 4.6;
  double beds_log_sd = 0.4;

  // deficiencies: Poisson(mean_i * g_i [+ theta shifts]), g_i ~ Gamma(r, 1/r)
  double def_base = 10.0;
  double def_quality_slope = 0.25;
  double def_for_profit_effect = 0.15;
  double def_gov_effect = -0.05;
  double def_dispersion_small = 1.25;
  double def_dispersion_large = 0.55;
  double theta_county = 0.6;
  double theta_chain = 0.2;

  // county SFF count ~ Poisson(intensity), intensity = alpha + beta1 log n + beta2 max(0, log n - c0)
  SffLink sff_link = SffLink::identity;
  double sff_alpha = 0.05;
  double sff_c0 = std::log(7.0);
  double sff_beta1 = 0.12;
  double sff_beta2 = 1.34;

  void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, GeneratorConfig& c);

struct GeneratedPanel {
  FacilityPanel panel;
  nlohmann::json truth;
};

/// Deterministic in config.seed.
GeneratedPanel generate(const GeneratorConfig& config);

/// Single-equation kink world: units with sizes n_i, x = log n_i,
/// y = alpha + beta1 x + beta2 max(0, x - c0) + N(0, sigma^2).
struct KinkWorldConfig {
  std::uint64_t seed = 1;
  int n_units = 3900;
  double size_mu = 1.205;
  double size_sigma = 1.1;
  int size_min = 1;
  double c0 = std::log(7.0);
  double alpha = 0.0;
  double beta1 = 0.12;
  double beta2 = 1.34;
  double sigma = 0.357;

  static KinkWorldConfig county_scale();
  static KinkWorldConfig chain_scale();
};

struct KinkSample {
  std::vector<int> sizes;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

KinkSample generate_kink_sample(const KinkWorldConfig& config);

}  // namespace netmon::data
