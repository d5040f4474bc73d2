#include "pertboot/perturb.hpp"

#include <cmath>
#include <vector>

#include "pertboot/errors.hpp"
#include "pertboot/rng.hpp"

namespace pertboot {

namespace {

// Beta(1/2, 3/2) as a ratio of gamma draws: Gamma(1/2) = Z^2/2 and
// Gamma(3/2) = Z^2/2 + Exp(1). Avoids inverse-CDF trouble at the
// density's boundary singularity.
double beta_half_draw(Rng& rng) {
  const double z1 = rng.normal();
  const double g1 = 0.5 * z1 * z1;
  const double z2 = rng.normal();
  const double g2 = 0.5 * z2 * z2 + rng.exponential();
  return g1 / (g1 + g2);
}

}  // namespace

WeightScheme make_beta_half() {
  WeightScheme s;
  s.family = "beta-half";
  s.mu = 0.25;
  s.moments = {0.25, 0.0625, 0.015625, 3.0 * 0.0625 * 0.0625};
  s.sampler = [](std::uint64_t seed, std::uint64_t index) {
    Rng rng(derive_seed(seed, index));
    return beta_half_draw(rng);
  };
  return s;
}

WeightScheme make_scaled_beta_half(double c) {
  if (!(c > 0.0)) throw invalid_parameter_error("weight scale must be > 0");
  WeightScheme s;
  s.family = "scaled-beta-half";
  s.mu = c * 0.25;
  s.moments = {c * 0.25, c * c * 0.0625, c * c * c * 0.015625,
               c * c * c * c * 3.0 * 0.0625 * 0.0625};
  s.sampler = [c](std::uint64_t seed, std::uint64_t index) {
    Rng rng(derive_seed(seed, index));
    return c * beta_half_draw(rng);
  };
  return s;
}

WeightScheme make_scheme_by_name(const std::string& name, double scale) {
  if (name == "beta-half") return make_beta_half();
  if (name == "scaled-beta-half") return make_scaled_beta_half(scale);
  throw invalid_parameter_error("unknown weight scheme: " + name);
}

ValidationReport validate_scheme(const WeightScheme& scheme, std::uint64_t m,
                                 std::uint64_t seed) {
  if (m < 10000) throw invalid_parameter_error("validate_scheme needs m >= 1e4");
  std::vector<double> draws(m);
  ValidationReport rep;
  for (std::uint64_t i = 0; i < m; ++i) {
    const double g = scheme.sampler(seed, i);
    if (g < 0.0) {
      ++rep.negative_draws;
      throw invalid_parameter_error("weight sampler produced a negative draw");
    }
    draws[i] = g;
  }
  const double dm = static_cast<double>(m);
  double s1 = 0.0;
  for (double g : draws) s1 += g;
  const double mbar = s1 / dm;
  // Sample central moments up to order 6 (for the MC standard errors).
  double c2 = 0, c3 = 0, c4 = 0, c6 = 0;
  for (double g : draws) {
    const double d = g - mbar;
    const double d2 = d * d;
    c2 += d2;
    c3 += d2 * d;
    c4 += d2 * d2;
    c6 += d2 * d2 * d2;
  }
  c2 /= dm;
  c3 /= dm;
  c4 /= dm;
  c6 /= dm;

  auto check = [&](double sample, double analytic, double est_var) {
    MomentCheck mc;
    mc.sample = sample;
    mc.analytic = analytic;
    mc.mc_se = std::sqrt(std::max(est_var, 0.0) / dm);
    mc.pass = std::abs(sample - analytic) <= 6.0 * mc.mc_se;
    return mc;
  };
  rep.mean_check = check(mbar, scheme.moments.mean, c2);
  rep.variance_check = check(c2, scheme.moments.variance, c4 - c2 * c2);
  // Asymptotic variance of the sample third central moment.
  const double var_c3 = c6 - c3 * c3 - 6.0 * c2 * c4 + 9.0 * c2 * c2 * c2;
  rep.third_central_check = check(c3, scheme.moments.third_central, var_c3);
  rep.pass = rep.mean_check.pass && rep.variance_check.pass &&
             rep.third_central_check.pass && rep.negative_draws == 0;
  return rep;
}

}  // namespace pertboot
