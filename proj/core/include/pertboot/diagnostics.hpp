#pragma once

#include <utility>

#include <Eigen/Core>

namespace pertboot {

struct DesignDiagnostics {
  double d_norm_sum = 0.0;       // n^{alpha/2} (sum ||d_i||^{6+2 alpha})^{1/2}
  double ztilde_norm_sum = 0.0;  // sum ||ztilde_i||^4
  double n_times_sum = 0.0;      // n * (d_norm_sum + ztilde_norm_sum)
  int rank_z = 0;                // rank of sum z_i z_i'
  double alpha = 0.5;
};

/// Row i = (x_i1^2, x_i1 x_i2, ..., x_i1 x_ip, x_i2^2, x_i2 x_i3, ..., x_ip^2),
/// the upper-triangular products in lexicographic order; q = p(p+1)/2 columns.
Eigen::MatrixXd build_z_vectors(const Eigen::MatrixXd& X);

/// Canonicalizes Z so that sum ztilde_i ztilde_i' = I_r: eigendecomposes
/// sum z_i z_i', keeps the eigenvalues above 1e-10 * max, and returns
/// (ztilde = Z L1', L1 = Lambda_r^{-1/2} U_r').
/// Throws degenerate_studentization_error for an all-zero Z.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> canonical_ztilde(
    const Eigen::MatrixXd& Z);

/// Finite-n design diagnostic with d_i = D^{-1} x_i, D = (sum x_i x_i')^{1/2}.
/// n_times_sum stays bounded across a sweep of n when the design behaves;
/// a single run cannot certify the asymptotic rate. Requires 0 < alpha <= 1/2.
DesignDiagnostics design_diagnostics(const Eigen::MatrixXd& X,
                                     double alpha = 0.5);

struct PsiMoments {
  double Epsi2 = 0.0;      // E psi^2(eps)
  double Epsi_psi1 = 0.0;  // E psi(eps) psi'(eps)
  double Epsi1 = 0.0;      // E psi'(eps)
  double Epsi3 = 0.0;      // E psi^3(eps)
};

/// Gap 2 Epsi2 Epsi_psi1 - Epsi1 Epsi3. Nonzero means the naive studentized
/// bootstrap pivot is not second-order correct.
double second_order_gap(const PsiMoments& m);

}  // namespace pertboot
