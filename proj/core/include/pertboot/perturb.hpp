#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace pertboot {

struct WeightMoments {
  double mean = 0.0;
  double variance = 0.0;
  double third_central = 0.0;
  double fourth_central = 0.0;
};

/// Distribution of the perturbation weights G*. Built-in families satisfy
/// Var(G*) = mu^2 and E(G* - mu)^3 = mu^3 exactly. The sampler is a pure
/// function of (seed, index), so weight streams are reproducible for any
/// thread count.
struct WeightScheme {
  std::string family;  // "beta-half" | "scaled-beta-half" | "custom-sampler"
  double mu = 0.0;
  WeightMoments moments;
  std::function<double(std::uint64_t seed, std::uint64_t index)> sampler;
};

/// Beta(1/2, 3/2): mean 1/4, variance 1/16, third central moment 1/64.
WeightScheme make_beta_half();

/// c * Beta(1/2, 3/2); mu = c/4. c = 4 gives unit-mean weights (the
/// library default).
WeightScheme make_scaled_beta_half(double c);

struct MomentCheck {
  double sample = 0.0;
  double analytic = 0.0;
  double mc_se = 0.0;
  bool pass = false;
};

struct ValidationReport {
  MomentCheck mean_check;
  MomentCheck variance_check;
  MomentCheck third_central_check;
  std::uint64_t negative_draws = 0;
  bool pass = false;
};

/// Draws m samples and compares the first three moments against the
/// scheme's analytic values at 6 Monte Carlo standard errors. Any
/// negative draw is a hard failure (throws invalid_parameter_error).
ValidationReport validate_scheme(const WeightScheme& scheme, std::uint64_t m,
                                 std::uint64_t seed);

/// Scheme lookup for the CLI: "beta-half" or "scaled-beta-half".
WeightScheme make_scheme_by_name(const std::string& name, double scale = 4.0);

}  // namespace pertboot
