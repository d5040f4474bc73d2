#pragma once

#include <Eigen/Core>

#include "pertboot/score.hpp"

namespace pertboot {

/// Design matrix and response for the linear model y_i = x_i'beta + eps_i.
struct RegressionData {
  Eigen::MatrixXd X;  // n x p, row i = x_i'
  Eigen::VectorXd y;  // length n

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Throws if n <= p, entries are non-finite, or X is rank deficient
  /// (smallest singular value below 1e-10 * largest).
  void validate() const;
};

struct SolverOptions {
  double tol_scale = 1e-10;  // eq_norm tolerance, relative to problem scale
  int max_iterations = 50;
  int max_halvings = 30;
  bool validate = true;  // skip the (costly) rank check on bootstrap refits
};

/// Fitted M-estimate with the studentization quantities.
struct MFit {
  Eigen::VectorXd beta_bar;
  Eigen::VectorXd residuals;
  double tau_n = 0.0;      // n^-1 sum psi'(resid)
  double s_n2 = 0.0;       // n^-1 sum psi^2(resid)
  double sigma_hat = 0.0;  // sqrt(s_n2) / tau_n
  Eigen::MatrixXd A_n;             // n^-1 sum x x'
  Eigen::MatrixXd A1_bar;          // n^-1 sum x x' psi'(resid)
  Eigen::MatrixXd A2_bar;          // n^-1 sum x x' psi^2(resid)
  Eigen::MatrixXd sigma_half_inv;  // A2_bar^{-1/2} A1_bar
  bool converged = false;
  bool degenerate = false;  // perfect fit, s_n2 = 0; studentization refused
  int iterations = 0;
  double eq_norm = 0.0;  // ||n^-1 sum x psi(resid)||
};

/// Solves sum_i x_i psi(y_i - x_i'beta) = 0 by damped Newton from the
/// least-squares start and fills in all derived quantities.
/// Throws singular_design_error, non_convergence_error (with best iterate),
/// or degenerate_studentization_error (s_n2 = 0 or tau_n <= 0).
MFit m_estimate(const RegressionData& data, const ScoreFunction& score,
                const SolverOptions& opts = {});

/// F_n = sqrt(n) sigma^-1 A_n^{1/2} (beta_bar - beta).
Eigen::VectorXd pivot_original_standardized(const MFit& fit,
                                            const Eigen::VectorXd& beta_true,
                                            double sigma_true);

/// H_n = sqrt(n) sigma_hat^-1 A_n^{1/2} (beta_bar - beta).
Eigen::VectorXd pivot_original_studentized(const MFit& fit,
                                           const Eigen::VectorXd& beta_true);

/// Hbreve_n = sqrt(n) A2_bar^{-1/2} A1_bar (beta_bar - beta).
Eigen::VectorXd pivot_original_hetero(const MFit& fit,
                                      const Eigen::VectorXd& beta_true);

}  // namespace pertboot
