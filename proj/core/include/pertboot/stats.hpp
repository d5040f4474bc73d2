#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace pertboot {

double normal_pdf(double x);
double normal_cdf(double x);
/// Inverse standard normal CDF (Acklam's rational approximation, refined
/// by one Halley step; absolute error < 1e-12).
double normal_quantile(double p);

/// Linearly interpolated empirical quantile at q*(n-1). Sorts a copy.
double quantile(std::vector<double> v, double q);
double median(std::vector<double> v);

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // denominator n

/// sup_x |F_hat(x) - Phi(x)| over the sample points.
double ks_distance_normal(std::vector<double> sample);
/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues below
/// rel_tol * max-eigenvalue raise degenerate_studentization_error.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m, double rel_tol = 1e-12);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

/// Worker count: PERTBOOT_THREADS env var if set, else 1.
int worker_count();

/// Runs fn(i) for i in [0, n) over `threads` workers in fixed-stride
/// chunks. Results must be written to per-index slots; the partition is
/// deterministic so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace pertboot
