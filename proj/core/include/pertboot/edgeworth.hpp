#pragma once

#include "pertboot/mest.hpp"

namespace pertboot {

/// One-dimensional two-term expansion
///   xi(x) = [1 - n^{-1/2} (b11 D + (b31/6) D^3)] phi(x).
/// Sign convention: (-D)^k phi = H_k phi with H1(x) = x, H2(x) = x^2 - 1,
/// H3(x) = x^3 - 3x, so the density evaluates as
///   phi(x) [1 + n^{-1/2} (b11 H1(x) + (b31/6) H3(x))].
struct Edgeworth1D {
  double b11 = 0.0;
  double b31 = 0.0;
  std::uint64_t n = 1;
};

double edgeworth_density(const Edgeworth1D& e, double x);

/// Phi(x) - n^{-1/2} phi(x) [b11 + (b31/6) H2(x)].
double edgeworth_cdf(const Edgeworth1D& e, double x);

/// Location-model (p = 1, all-ones design, least squares) expansion
/// coefficients for the original studentized pivot: b11 = -m3 / (2 sigma^3),
/// b31 = -2 m3 / sigma^3.
Edgeworth1D location_model_original(double sigma, double third_moment,
                                    std::uint64_t n);

/// The bootstrap-side coefficients evaluated from residuals, with sigma_n
/// read as sigma_hat: b11* = -2 sigma_hat^-1 rbar, b31* = sigma_hat^-3 -
/// 12 sigma_hat^-1 rbar, rbar = mean residual. Requires a location-model
/// least-squares fit (p = 1, all-ones design).
Edgeworth1D location_model_naive_bootstrap(const RegressionData& data,
                                           const MFit& fit);

/// Simple-regression (p = 2 with intercept) first-order coefficient
/// b11^(j) = -1/2 [n^-1 sum e_j' A_n^{-1/2} x_i] gamma1 for j in {1,2};
/// gamma1 is the error skewness.
double simple_regression_b11(const RegressionData& data, double gamma1, int j);

}  // namespace pertboot
