#include "pertboot/mest.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "pertboot/errors.hpp"
#include "pertboot/stats.hpp"

namespace pertboot {

void RegressionData::validate() const {
  if (X.rows() != y.size())
    throw invalid_parameter_error("design and response sizes differ");
  if (p() < 1 || n() <= p())
    throw invalid_parameter_error("need n > p >= 1");
  if (!X.allFinite() || !y.allFinite())
    throw invalid_parameter_error("non-finite entries in data");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0))
    throw singular_design_error("design matrix is rank deficient");
}

namespace {

Eigen::VectorXd estimating_equation(const RegressionData& data,
                                    const ScoreFunction& score,
                                    const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = data.y - data.X * beta;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(data.p());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    g += data.X.row(i).transpose() * score.eval(r(i));
  return g / static_cast<double>(data.n());
}

}  // namespace

MFit m_estimate(const RegressionData& data, const ScoreFunction& score,
                const SolverOptions& opts) {
  if (opts.validate) data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double dn = static_cast<double>(n);

  // Least-squares start.
  Eigen::VectorXd beta = data.X.colPivHouseholderQr().solve(data.y);

  Eigen::VectorXd g = estimating_equation(data, score, beta);
  double gnorm = g.norm();

  // Tolerance scale: typical magnitude of a single summand.
  double row_scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) row_scale += data.X.row(i).norm();
  row_scale /= dn;
  const Eigen::VectorXd r0 = data.y - data.X * beta;
  double psi_scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) psi_scale += std::abs(score.eval(r0(i)));
  psi_scale /= dn;
  const double tol = opts.tol_scale * std::max(1.0, row_scale * std::max(1.0, psi_scale));

  int iter = 0;
  Eigen::VectorXd best_beta = beta;
  double best_gnorm = gnorm;
  while (gnorm > tol && iter < opts.max_iterations) {
    ++iter;
    const Eigen::VectorXd r = data.y - data.X * beta;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i)
      jac += data.X.row(i).transpose() * data.X.row(i) * score.deriv1(r(i));
    jac /= dn;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jac);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success) step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite())
      throw non_convergence_error("singular Newton system", best_beta, best_gnorm);

    double lambda = 1.0;
    int halvings = 0;
    for (;;) {
      const Eigen::VectorXd cand = beta + lambda * step;
      const Eigen::VectorXd gc = estimating_equation(data, score, cand);
      const double gcnorm = gc.norm();
      if (gcnorm < gnorm || gcnorm <= tol) {
        beta = cand;
        g = gc;
        gnorm = gcnorm;
        break;
      }
      if (++halvings > opts.max_halvings)
        throw non_convergence_error("Newton line search exhausted", best_beta,
                                    best_gnorm);
      lambda *= 0.5;
    }
    if (gnorm < best_gnorm) {
      best_gnorm = gnorm;
      best_beta = beta;
    }
  }

  MFit fit;
  fit.beta_bar = beta;
  fit.residuals = data.y - data.X * beta;
  fit.converged = gnorm <= tol;
  fit.iterations = iter;
  fit.eq_norm = gnorm;
  if (!fit.converged)
    throw non_convergence_error("Newton did not converge", best_beta, best_gnorm);

  double tau = 0.0, s2 = 0.0;
  fit.A_n = Eigen::MatrixXd::Zero(p, p);
  fit.A1_bar = Eigen::MatrixXd::Zero(p, p);
  fit.A2_bar = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double psi = score.eval(fit.residuals(i));
    const double psi1 = score.deriv1(fit.residuals(i));
    tau += psi1;
    s2 += psi * psi;
    const Eigen::MatrixXd xx = data.X.row(i).transpose() * data.X.row(i);
    fit.A_n += xx;
    fit.A1_bar += xx * psi1;
    fit.A2_bar += xx * (psi * psi);
  }
  fit.tau_n = tau / dn;
  fit.s_n2 = s2 / dn;
  fit.A_n /= dn;
  fit.A1_bar /= dn;
  fit.A2_bar /= dn;

  // Perfect fits leave roundoff-sized residuals, so the cutoff is relative
  // to the response scale.
  const double y_rms = std::sqrt(data.y.squaredNorm() / dn);
  const double s_floor = 1e-12 * std::max(1.0, y_rms);
  if (fit.s_n2 <= s_floor * s_floor) {
    // Perfect fit: flagged, pivots will refuse to studentize.
    fit.degenerate = true;
    fit.sigma_hat = 0.0;
    fit.sigma_half_inv = Eigen::MatrixXd::Zero(p, p);
    return fit;
  }
  if (fit.tau_n <= 0.0)
    throw degenerate_studentization_error("tau_n <= 0");
  fit.sigma_hat = std::sqrt(fit.s_n2) / fit.tau_n;
  fit.sigma_half_inv = sym_inv_sqrt(fit.A2_bar) * fit.A1_bar;
  return fit;
}

Eigen::VectorXd pivot_original_standardized(const MFit& fit,
                                            const Eigen::VectorXd& beta_true,
                                            double sigma_true) {
  if (!(sigma_true > 0.0)) throw invalid_parameter_error("sigma_true must be > 0");
  const double sqn = std::sqrt(static_cast<double>(fit.residuals.size()));
  return sqn / sigma_true * (sym_sqrt(fit.A_n) * (fit.beta_bar - beta_true));
}

Eigen::VectorXd pivot_original_studentized(const MFit& fit,
                                           const Eigen::VectorXd& beta_true) {
  if (!(fit.sigma_hat > 0.0))
    throw degenerate_studentization_error("sigma_hat not positive");
  const double sqn = std::sqrt(static_cast<double>(fit.residuals.size()));
  return sqn / fit.sigma_hat * (sym_sqrt(fit.A_n) * (fit.beta_bar - beta_true));
}

Eigen::VectorXd pivot_original_hetero(const MFit& fit,
                                      const Eigen::VectorXd& beta_true) {
  if (fit.degenerate)
    throw degenerate_studentization_error("degenerate fit: A2_bar singular");
  const double sqn = std::sqrt(static_cast<double>(fit.residuals.size()));
  return sqn * (fit.sigma_half_inv * (fit.beta_bar - beta_true));
}

}  // namespace pertboot
