#include "pertboot/sim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pertboot/boot.hpp"
#include "pertboot/errors.hpp"
#include "pertboot/perturb.hpp"
#include "pertboot/rng.hpp"
#include "pertboot/stats.hpp"

namespace pertboot {

namespace {

// Stream tags for seed derivation; keep disjoint from the tags the
// bootstrap engines use internally on their own derived seeds.
constexpr std::uint64_t kTagDesign = 101;
constexpr std::uint64_t kTagErrors = 102;
constexpr std::uint64_t kTagPerturb = 103;
constexpr std::uint64_t kTagResidual = 104;
constexpr std::uint64_t kTagWild = 105;

void validate_scenario(const Scenario& s) {
  if (s.p < 1 || s.n <= s.p) throw invalid_parameter_error("need n > p >= 1");
  if (s.B < 100) throw invalid_parameter_error("B must be >= 100");
  if (s.truth_draws < 100)
    throw invalid_parameter_error("truth_draws must be >= 100");
  if (s.M < 1) throw invalid_parameter_error("M must be >= 1");
  if (!(s.ci_level > 0.0 && s.ci_level < 1.0))
    throw invalid_parameter_error("ci_level must be in (0,1)");
  if (s.beta_true.size() != 0 && s.beta_true.size() != s.p)
    throw invalid_parameter_error("beta_true has wrong length");
  if (s.score_name != "ls" && s.error_law == ErrorLaw::centered_exponential)
    throw invalid_parameter_error(
        "centered-exponential errors have a nonzero mean score for "
        "non-quadratic loss; pick a symmetric law");
  if (s.error_law == ErrorLaw::scaled_t) {
    const double df = s.error_param;
    if (df != std::floor(df) || df < 5.0)
      throw invalid_parameter_error("scaled-t needs an integer df >= 5");
  }
  if (s.error_law == ErrorLaw::hetero && s.hetero_sigmas.size() != 0 &&
      s.hetero_sigmas.size() != s.n)
    throw invalid_parameter_error("hetero_sigmas has wrong length");
  if (s.design_gen == DesignGen::fixed_csv &&
      (s.fixed_design.rows() != s.n || s.fixed_design.cols() != s.p))
    throw invalid_parameter_error("fixed design has wrong shape");
}

Eigen::VectorXd beta_true_of(const Scenario& s) {
  if (s.beta_true.size() == s.p) return s.beta_true;
  return Eigen::VectorXd::Zero(s.p);
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), m.col(j).data() + m.rows()};
}

// Two-dimensional ECDF of `pts` evaluated at the grid nodes (cx_i, cy_j).
Eigen::MatrixXd grid_ecdf(const Eigen::MatrixXd& pts,
                          const std::vector<double>& cx,
                          const std::vector<double>& cy) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(cx.size(), cy.size());
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    for (std::size_t i = 0; i < cx.size(); ++i) {
      if (pts(r, 0) > cx[i]) continue;
      for (std::size_t j = 0; j < cy.size(); ++j)
        if (pts(r, 1) <= cy[j]) f(i, j) += 1.0;
    }
  }
  return f / static_cast<double>(pts.rows());
}

double rectangle_distance(const Eigen::MatrixXd& sample,
                          const Eigen::MatrixXd& reference) {
  constexpr int kGrid = 20;
  std::vector<double> cx, cy;
  for (int j = 1; j <= kGrid; ++j) {
    const double q = static_cast<double>(j) / kGrid;
    cx.push_back(quantile(column(reference, 0), q));
    cy.push_back(quantile(column(reference, 1), q));
  }
  const Eigen::MatrixXd fs = grid_ecdf(sample, cx, cy);
  const Eigen::MatrixXd fr = grid_ecdf(reference, cx, cy);
  const Eigen::MatrixXd d = fs - fr;

  // Rectangle (a1,b1] x (a2,b2] with index -1 meaning "below the grid".
  auto at = [&](const Eigen::MatrixXd& m, int i, int j) {
    return (i < 0 || j < 0) ? 0.0 : m(i, j);
  };
  double sup = 0.0;
  const int g = static_cast<int>(cx.size());
  for (int a1 = -1; a1 < g; ++a1)
    for (int b1 = a1 + 1; b1 < g; ++b1)
      for (int a2 = -1; a2 < g; ++a2)
        for (int b2 = a2 + 1; b2 < g; ++b2) {
          const double v = at(d, b1, b2) - at(d, a1, b2) - at(d, b1, a2) +
                           at(d, a1, a2);
          sup = std::max(sup, std::abs(v));
        }
  return sup;
}

double normal_sup_distance(const Eigen::MatrixXd& reference) {
  double sup = 0.0;
  for (Eigen::Index j = 0; j < reference.cols(); ++j)
    sup = std::max(sup, ks_distance_normal(column(reference, j)));
  return sup;
}

ConfidenceIntervals normal_approx_ci(const MFit& fit, double level) {
  const double alpha = 1.0 - level;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const Eigen::MatrixXd s_inv = fit.sigma_hat * sym_inv_sqrt(fit.A_n);
  const double sqn = std::sqrt(static_cast<double>(fit.residuals.size()));
  ConfidenceIntervals ci;
  const Eigen::Index p = fit.beta_bar.size();
  ci.lower.resize(p);
  ci.upper.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double half = z * s_inv(j, j) / sqn;
    ci.lower(j) = fit.beta_bar(j) - half;
    ci.upper(j) = fit.beta_bar(j) + half;
  }
  return ci;
}

void finalize(MethodReport& m, Eigen::Index n) {
  const std::size_t k = m.sup_distances.size();
  if (k == 0) return;
  m.median_sup = median(m.sup_distances);
  m.scaled_distance = std::sqrt(static_cast<double>(n)) * m.median_sup;
  // Large-sample SE of a sample median, 1.2533 sd / sqrt(k).
  m.sup_mc_se = 1.2533141373155003 *
                std::sqrt(variance(m.sup_distances) / static_cast<double>(k));
  if (!m.covered.empty()) {
    double c = 0.0;
    for (auto h : m.covered) c += h;
    c /= static_cast<double>(m.covered.size());
    m.coverage = c;
    m.coverage_mc_se =
        std::sqrt(c * (1.0 - c) / static_cast<double>(m.covered.size()));
  }
}

}  // namespace

Eigen::MatrixXd make_design(const Scenario& s) {
  switch (s.design_gen) {
    case DesignGen::fixed_csv:
      return s.fixed_design;
    case DesignGen::ones:
      if (s.p != 1)
        throw invalid_parameter_error("ones design requires p = 1");
      return Eigen::MatrixXd::Ones(s.n, 1);
    case DesignGen::iid_gaussian: {
      Rng rng(derive_seed(s.seed, kTagDesign));
      Eigen::MatrixXd X(s.n, s.p);
      for (Eigen::Index i = 0; i < s.n; ++i)
        for (Eigen::Index j = 0; j < s.p; ++j) X(i, j) = rng.normal();
      return X;
    }
  }
  throw invalid_parameter_error("unknown design generator");
}

Eigen::VectorXd draw_errors(const Scenario& s, const Eigen::MatrixXd& X,
                            std::uint64_t which) {
  Rng rng(derive_seed(s.seed, kTagErrors, which));
  Eigen::VectorXd eps(X.rows());
  switch (s.error_law) {
    case ErrorLaw::normal:
      for (Eigen::Index i = 0; i < eps.size(); ++i)
        eps(i) = s.error_param * rng.normal();
      break;
    case ErrorLaw::centered_exponential:
      for (Eigen::Index i = 0; i < eps.size(); ++i)
        eps(i) = (rng.exponential() - 1.0) / s.error_param;
      break;
    case ErrorLaw::scaled_t: {
      const int df = static_cast<int>(s.error_param);
      const double scale = std::sqrt((df - 2.0) / df);
      for (Eigen::Index i = 0; i < eps.size(); ++i) {
        const double z = rng.normal();
        double chi2 = 0.0;
        for (int k = 0; k < df; ++k) {
          const double w = rng.normal();
          chi2 += w * w;
        }
        eps(i) = scale * z / std::sqrt(chi2 / df);
      }
      break;
    }
    case ErrorLaw::hetero:
      for (Eigen::Index i = 0; i < eps.size(); ++i) {
        const double si = s.hetero_sigmas.size() > 0
                              ? s.hetero_sigmas(i)
                              : 0.5 + X.row(i).norm();
        eps(i) = si * rng.normal();
      }
      break;
  }
  return eps;
}

double sup_distance(const Eigen::MatrixXd& sample,
                    const Eigen::MatrixXd& reference) {
  if (sample.cols() != reference.cols())
    throw invalid_parameter_error("dimension mismatch");
  double sup = 0.0;
  for (Eigen::Index j = 0; j < sample.cols(); ++j)
    sup = std::max(sup, ks_distance(column(sample, j), column(reference, j)));
  if (sample.cols() == 2)
    sup = std::max(sup, rectangle_distance(sample, reference));
  return sup;
}

SimReport run_scenario(const Scenario& s) {
  validate_scenario(s);
  const ScoreFunction score = make_score_by_name(s.score_name, s.tuning);
  const WeightScheme scheme = make_scheme_by_name("scaled-beta-half", 4.0);
  const Eigen::VectorXd beta_true = beta_true_of(s);
  const Eigen::MatrixXd X = make_design(s);
  const bool with_wild = s.score_name == "ls";

  RegressionData data{X, Eigen::VectorXd::Zero(s.n)};
  data.validate();

  // Truth samples of the studentized pivots, one row per MC draw.
  Eigen::MatrixXd truth_h(s.truth_draws, s.p);
  Eigen::MatrixXd truth_hbreve(s.truth_draws, s.p);
  SolverOptions truth_opts;
  truth_opts.validate = false;
  for (std::uint64_t t = 0; t < s.truth_draws; ++t) {
    data.y = X * beta_true + draw_errors(s, X, t);
    const MFit fit = m_estimate(data, score, truth_opts);
    truth_h.row(t) = pivot_original_studentized(fit, beta_true).transpose();
    truth_hbreve.row(t) = pivot_original_hetero(fit, beta_true).transpose();
  }

  SimReport report;
  report.n = s.n;
  report.seed = s.seed;
  std::vector<std::string> names = {"normal-approx",  "perturb-naive",
                                    "perturb-modified", "perturb-hetero",
                                    "residual"};
  if (with_wild) names.push_back("wild");
  for (const auto& nm : names) {
    MethodReport m;
    m.method = nm;
    report.methods.push_back(std::move(m));
  }
  auto method = [&](const std::string& nm) -> MethodReport& {
    for (auto& m : report.methods)
      if (m.method == nm) return m;
    throw invalid_parameter_error("unknown method");
  };

  const double d_normal = normal_sup_distance(truth_h);

  for (std::uint64_t k = 0; k < s.M; ++k) {
    data.y = X * beta_true + draw_errors(s, X, s.truth_draws + k);
    try {
      const MFit fit = m_estimate(data, score, truth_opts);
      const MultiPivotSample multi = run_perturbation_bootstrap_all(
          data, score, fit, scheme, s.B, derive_seed(s.seed, kTagPerturb, k));
      const PivotSample res = run_residual_bootstrap(
          data, score, fit, s.B, derive_seed(s.seed, kTagResidual, k));

      auto record = [&](const std::string& nm, const Eigen::MatrixXd& pivots,
                        const Eigen::MatrixXd& truth, PivotKind kind) {
        MethodReport& m = method(nm);
        m.sup_distances.push_back(sup_distance(pivots, truth));
        PivotSample ps;
        ps.kind = kind;
        ps.pivots = pivots;
        ps.B_requested = s.B;
        const ConfidenceIntervals ci = bootstrap_ci(ps, fit, s.ci_level, kind);
        m.covered.push_back(ci.lower(0) <= beta_true(0) &&
                            beta_true(0) <= ci.upper(0));
      };

      {
        MethodReport& m = method("normal-approx");
        m.sup_distances.push_back(d_normal);
        const ConfidenceIntervals ci = normal_approx_ci(fit, s.ci_level);
        m.covered.push_back(ci.lower(0) <= beta_true(0) &&
                            beta_true(0) <= ci.upper(0));
      }
      record("perturb-naive", multi.h, truth_h,
             PivotKind::naive_studentized_h);
      record("perturb-modified", multi.htilde, truth_h,
             PivotKind::modified_studentized_htilde);
      record("perturb-hetero", multi.hbreve, truth_hbreve,
             PivotKind::hetero_studentized_hbreve);
      record("residual", res.pivots, truth_h, PivotKind::naive_studentized_h);
      if (with_wild) {
        const PivotSample w = run_wild_bootstrap(
            data, fit, s.B, derive_seed(s.seed, kTagWild, k));
        record("wild", w.pivots, truth_hbreve,
               PivotKind::hetero_studentized_hbreve);
      }
    } catch (const std::runtime_error&) {
      report.partial = true;
      break;
    }
  }

  for (auto& m : report.methods) finalize(m, s.n);
  return report;
}

std::vector<SimReport> rate_sweep(const Scenario& s,
                                  const std::vector<Eigen::Index>& n_grid) {
  if (n_grid.size() < 3)
    throw invalid_parameter_error("n_grid needs at least 3 sizes");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1])
      throw invalid_parameter_error("n_grid must be increasing");
  std::vector<SimReport> out;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    Scenario si = s;
    si.n = n_grid[i];
    si.seed = derive_seed(s.seed, 200, i);
    out.push_back(run_scenario(si));
  }
  return out;
}

}  // namespace pertboot
