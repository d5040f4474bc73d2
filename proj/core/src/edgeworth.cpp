#include "pertboot/edgeworth.hpp"

#include <cmath>

#include "pertboot/errors.hpp"
#include "pertboot/stats.hpp"

namespace pertboot {

double edgeworth_density(const Edgeworth1D& e, double x) {
  const double rn = 1.0 / std::sqrt(static_cast<double>(e.n));
  const double h1 = x;
  const double h3 = x * x * x - 3.0 * x;
  return normal_pdf(x) * (1.0 + rn * (e.b11 * h1 + e.b31 / 6.0 * h3));
}

double edgeworth_cdf(const Edgeworth1D& e, double x) {
  const double rn = 1.0 / std::sqrt(static_cast<double>(e.n));
  const double h2 = x * x - 1.0;
  return normal_cdf(x) - rn * normal_pdf(x) * (e.b11 + e.b31 / 6.0 * h2);
}

Edgeworth1D location_model_original(double sigma, double third_moment,
                                    std::uint64_t n) {
  if (!(sigma > 0.0)) throw invalid_parameter_error("sigma must be > 0");
  if (n < 1) throw invalid_parameter_error("n must be >= 1");
  const double s3 = sigma * sigma * sigma;
  Edgeworth1D e;
  e.b11 = -third_moment / (2.0 * s3);
  e.b31 = -2.0 * third_moment / s3;
  e.n = n;
  return e;
}

namespace {

void require_location_model(const RegressionData& data) {
  if (data.p() != 1)
    throw unsupported_model_error("location model requires p = 1");
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (data.X(i, 0) != 1.0)
      throw unsupported_model_error("location model requires an all-ones design");
}

}  // namespace

Edgeworth1D location_model_naive_bootstrap(const RegressionData& data,
                                           const MFit& fit) {
  require_location_model(data);
  if (!(fit.sigma_hat > 0.0))
    throw degenerate_studentization_error("sigma_hat not positive");
  const double rbar = fit.residuals.mean();
  const double s = fit.sigma_hat;
  Edgeworth1D e;
  e.b11 = -2.0 / s * rbar;
  e.b31 = 1.0 / (s * s * s) - 12.0 / s * rbar;
  e.n = static_cast<std::uint64_t>(data.n());
  return e;
}

double simple_regression_b11(const RegressionData& data, double gamma1, int j) {
  if (data.p() != 2)
    throw unsupported_model_error("simple regression requires p = 2");
  if (j != 1 && j != 2) throw invalid_parameter_error("j must be 1 or 2");
  const Eigen::MatrixXd a_n =
      data.X.transpose() * data.X / static_cast<double>(data.n());
  const Eigen::MatrixXd root_inv = sym_inv_sqrt(a_n);
  const Eigen::VectorXd xbar = data.X.colwise().mean();
  return -0.5 * (root_inv.row(j - 1) * xbar)(0) * gamma1;
}

}  // namespace pertboot
