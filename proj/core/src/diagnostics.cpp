#include "pertboot/diagnostics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "pertboot/errors.hpp"
#include "pertboot/stats.hpp"

namespace pertboot {

Eigen::MatrixXd build_z_vectors(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::Index q = p * (p + 1) / 2;
  Eigen::MatrixXd Z(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = a; b < p; ++b) Z(i, k++) = X(i, a) * X(i, b);
  }
  return Z;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> canonical_ztilde(
    const Eigen::MatrixXd& Z) {
  const Eigen::MatrixXd S = Z.transpose() * Z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double thresh = 1e-10 * ev(ev.size() - 1);
  if (!(ev(ev.size() - 1) > 0.0))
    throw degenerate_studentization_error("z vectors are all zero");
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) > thresh) ++r;
  // Eigenvalues ascend; the kept subspace is the trailing block.
  Eigen::MatrixXd L1(r, Z.cols());
  for (Eigen::Index k = 0; k < r; ++k) {
    const Eigen::Index src = ev.size() - 1 - k;
    L1.row(k) = es.eigenvectors().col(src).transpose() / std::sqrt(ev(src));
  }
  return {Z * L1.transpose(), L1};
}

DesignDiagnostics design_diagnostics(const Eigen::MatrixXd& X, double alpha) {
  if (!(alpha > 0.0) || alpha > 0.5)
    throw invalid_parameter_error("alpha must be in (0, 1/2]");
  const Eigen::Index n = X.rows();
  const double dn = static_cast<double>(n);

  const Eigen::MatrixXd S = X.transpose() * X;
  Eigen::MatrixXd D_inv;
  try {
    D_inv = sym_inv_sqrt(S);
  } catch (const degenerate_studentization_error&) {
    throw singular_design_error("sum x_i x_i' is singular");
  }

  double d_pow = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    d_pow += std::pow((D_inv * X.row(i).transpose()).norm(), 6.0 + 2.0 * alpha);

  const auto [ztilde, L1] = canonical_ztilde(build_z_vectors(X));
  double zt4 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double nrm2 = ztilde.row(i).squaredNorm();
    zt4 += nrm2 * nrm2;
  }

  DesignDiagnostics out;
  out.alpha = alpha;
  out.d_norm_sum = std::pow(dn, alpha / 2.0) * std::sqrt(d_pow);
  out.ztilde_norm_sum = zt4;
  out.n_times_sum = dn * (out.d_norm_sum + out.ztilde_norm_sum);
  out.rank_z = static_cast<int>(L1.rows());
  return out;
}

double second_order_gap(const PsiMoments& m) {
  return 2.0 * m.Epsi2 * m.Epsi_psi1 - m.Epsi1 * m.Epsi3;
}

}  // namespace pertboot
