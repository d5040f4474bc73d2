#include "pertboot/boot.hpp"

#include <atomic>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pertboot/errors.hpp"
#include "pertboot/rng.hpp"
#include "pertboot/stats.hpp"

namespace pertboot {

namespace {

constexpr int kMaxAttemptsPerReplicate = 1000;

Eigen::VectorXd draw_weights(const WeightScheme& scheme, std::uint64_t seed,
                             std::uint64_t replicate, std::uint64_t attempt,
                             Eigen::Index n) {
  Eigen::VectorXd w(n);
  const std::uint64_t key = derive_seed(seed, replicate, attempt);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = scheme.sampler(key, static_cast<std::uint64_t>(i));
  return w;
}

struct SolveContext {
  double tol = 0.0;
  double trust_radius = 0.0;
  bool ls_fast_path = false;
};

SolveContext make_context(const RegressionData& data, const ScoreFunction& score,
                          const MFit& fit) {
  SolveContext ctx;
  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);
  double row_scale = 0.0, psi_scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    row_scale += data.X.row(i).norm();
    psi_scale += std::abs(score.eval(fit.residuals(i)));
  }
  row_scale /= dn;
  psi_scale /= dn;
  ctx.tol = 1e-10 * std::max(1.0, row_scale * std::max(1.0, psi_scale));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.A_n);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 0.0) throw singular_design_error("A_n not positive definite");
  // Trust region mirrors the C n^{-1/2} (log n)^{1/2} ball the theory
  // guarantees a root in.
  ctx.trust_radius = 10.0 *
                     std::sqrt(static_cast<double>(data.p()) * std::log(dn) / dn) *
                     fit.sigma_hat / std::sqrt(lmin);
  ctx.ls_fast_path = score.name == "ls";
  return ctx;
}

Eigen::VectorXd weighted_equation(const RegressionData& data,
                                  const ScoreFunction& score,
                                  const Eigen::VectorXd& weights,
                                  const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = data.y - data.X * beta;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(data.p());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    g += data.X.row(i).transpose() * (score.eval(r(i)) * weights(i));
  return g / static_cast<double>(data.n());
}

std::optional<Eigen::VectorXd> solve_replicate(const RegressionData& data,
                                               const ScoreFunction& score,
                                               const MFit& fit,
                                               const Eigen::VectorXd& weights,
                                               const SolveContext& ctx) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double wmax = weights.maxCoeff();
  if (weights.minCoeff() < 0.0 || wmax <= 0.0) return std::nullopt;
  const double wmean = weights.mean();
  // The weighted equation is homogeneous in the weights, so the tolerance
  // scales with their mean.
  const double tol = ctx.tol * std::max(wmean, 1e-300);

  // Constant weights factor out: beta_bar already solves the equation.
  Eigen::VectorXd g = weighted_equation(data, score, weights, fit.beta_bar);
  if (g.norm() <= tol) return fit.beta_bar;

  if (ctx.ls_fast_path) {
    // Weighted normal equations (closed form for psi(x) = x).
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      xtx += data.X.row(i).transpose() * data.X.row(i) * weights(i);
      xty += data.X.row(i).transpose() * (data.y(i) * weights(i));
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd beta = ldlt.solve(xty);
    if (!beta.allFinite()) return std::nullopt;
    if ((beta - fit.beta_bar).norm() > ctx.trust_radius) return std::nullopt;
    return beta;
  }

  Eigen::VectorXd beta = fit.beta_bar;
  double gnorm = g.norm();
  for (int iter = 0; iter < 50; ++iter) {
    if (gnorm <= tol) return beta;
    const Eigen::VectorXd r = data.y - data.X * beta;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i)
      jac += data.X.row(i).transpose() * data.X.row(i) *
             (score.deriv1(r(i)) * weights(i));
    jac /= static_cast<double>(n);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jac);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) return std::nullopt;

    double lambda = 1.0;
    bool moved = false;
    for (int halving = 0; halving <= 30; ++halving) {
      const Eigen::VectorXd cand = beta + lambda * step;
      if ((cand - fit.beta_bar).norm() <= ctx.trust_radius) {
        const Eigen::VectorXd gc = weighted_equation(data, score, weights, cand);
        const double gcnorm = gc.norm();
        if (gcnorm < gnorm || gcnorm <= tol) {
          beta = cand;
          g = gc;
          gnorm = gcnorm;
          moved = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!moved) return std::nullopt;
  }
  if (gnorm <= tol) return beta;
  return std::nullopt;
}

struct ReplicatePivots {
  Eigen::VectorXd f, h, htilde, hbreve;
};

std::optional<ReplicatePivots> pivots_from_replicate(
    const RegressionData& data, const ScoreFunction& score, const MFit& fit,
    const Eigen::VectorXd& weights, const WeightScheme& scheme,
    const Eigen::VectorXd& beta_star) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double dn = static_cast<double>(n);
  const double sqn = std::sqrt(dn);
  const Eigen::VectorXd delta = beta_star - fit.beta_bar;
  const Eigen::VectorXd base = sqn * (fit.sigma_half_inv * delta);
  const Eigen::VectorXd resid_star = data.y - data.X * beta_star;

  double tau_star = 0.0, s2_star = 0.0, tau_tilde = 0.0, s2_tilde = 0.0;
  Eigen::MatrixXd a1_star = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd a2_star = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double psi = score.eval(resid_star(i));
    const double psi1 = score.deriv1(resid_star(i));
    const double g = weights(i);
    const double gc = g - scheme.mu;
    tau_star += psi1;
    s2_star += psi * psi;
    tau_tilde += psi1 * g;
    s2_tilde += psi * psi * gc * gc;
    const Eigen::MatrixXd xx = data.X.row(i).transpose() * data.X.row(i);
    a1_star += xx * (psi1 * g);
    a2_star += xx * (psi * psi * gc * gc);
  }
  tau_star /= dn;
  s2_star /= dn;
  tau_tilde /= dn;
  s2_tilde /= dn;
  a1_star /= dn;
  a2_star /= dn;

  if (tau_star <= 0.0 || s2_star <= 0.0) return std::nullopt;
  if (tau_tilde <= 0.0 || s2_tilde <= 0.0) return std::nullopt;

  ReplicatePivots out;
  out.f = base;
  out.h = fit.sigma_hat * tau_star / std::sqrt(s2_star) * base;
  out.htilde = fit.sigma_hat * tau_tilde / std::sqrt(s2_tilde) * base;
  try {
    out.hbreve = sqn * (sym_inv_sqrt(a2_star) * (a1_star * delta));
  } catch (const degenerate_studentization_error&) {
    return std::nullopt;
  }
  return out;
}

void check_fit_usable(const MFit& fit) {
  if (fit.degenerate || !(fit.sigma_hat > 0.0))
    throw degenerate_studentization_error(
        "bootstrap requires a non-degenerate fit");
}

}  // namespace

std::optional<Eigen::VectorXd> perturb_replicate(const RegressionData& data,
                                                 const ScoreFunction& score,
                                                 const MFit& fit,
                                                 const Eigen::VectorXd& weights) {
  check_fit_usable(fit);
  return solve_replicate(data, score, fit, weights, make_context(data, score, fit));
}

std::optional<Eigen::VectorXd> perturb_pivot_from_replicate(
    const RegressionData& data, const ScoreFunction& score, const MFit& fit,
    const Eigen::VectorXd& weights, const WeightScheme& scheme, PivotKind kind,
    const Eigen::VectorXd& beta_star) {
  auto pv = pivots_from_replicate(data, score, fit, weights, scheme, beta_star);
  if (!pv) return std::nullopt;
  switch (kind) {
    case PivotKind::standardized_f: return pv->f;
    case PivotKind::naive_studentized_h: return pv->h;
    case PivotKind::modified_studentized_htilde: return pv->htilde;
    case PivotKind::hetero_studentized_hbreve: return pv->hbreve;
  }
  return std::nullopt;
}

std::optional<Eigen::VectorXd> perturb_pivot(const RegressionData& data,
                                             const ScoreFunction& score,
                                             const MFit& fit,
                                             const Eigen::VectorXd& weights,
                                             const WeightScheme& scheme,
                                             PivotKind kind) {
  auto beta_star = perturb_replicate(data, score, fit, weights);
  if (!beta_star) return std::nullopt;
  return perturb_pivot_from_replicate(data, score, fit, weights, scheme, kind,
                                      *beta_star);
}

MultiPivotSample run_perturbation_bootstrap_all(const RegressionData& data,
                                                const ScoreFunction& score,
                                                const MFit& fit,
                                                const WeightScheme& scheme,
                                                std::uint64_t B,
                                                std::uint64_t seed) {
  if (B < 1) throw invalid_parameter_error("B must be >= 1");
  check_fit_usable(fit);
  const SolveContext ctx = make_context(data, score, fit);
  const Eigen::Index p = data.p();

  MultiPivotSample out;
  out.seed = seed;
  out.B_requested = B;
  out.f.resize(static_cast<Eigen::Index>(B), p);
  out.h.resize(static_cast<Eigen::Index>(B), p);
  out.htilde.resize(static_cast<Eigen::Index>(B), p);
  out.hbreve.resize(static_cast<Eigen::Index>(B), p);

  std::vector<std::uint32_t> rejects(B, 0);
  std::atomic<bool> exhausted{false};

  parallel_for(B, [&](std::size_t b) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttemptsPerReplicate) {
        exhausted.store(true);
        return;
      }
      const Eigen::VectorXd w = draw_weights(scheme, seed, b, attempt, data.n());
      auto beta_star = solve_replicate(data, score, fit, w, ctx);
      if (beta_star) {
        auto pv = pivots_from_replicate(data, score, fit, w, scheme, *beta_star);
        if (pv) {
          const auto row = static_cast<Eigen::Index>(b);
          out.f.row(row) = pv->f.transpose();
          out.h.row(row) = pv->h.transpose();
          out.htilde.row(row) = pv->htilde.transpose();
          out.hbreve.row(row) = pv->hbreve.transpose();
          return;
        }
      }
      ++rejects[b];
    }
  });

  if (exhausted.load())
    throw bootstrap_failure_error("replicate kept failing after many redraws");
  for (auto r : rejects) out.n_rejected += r;
  const double rate = static_cast<double>(out.n_rejected) / static_cast<double>(B);
  if (rate > 0.10)
    throw bootstrap_failure_error("bootstrap rejection rate above 10%");
  out.unreliable = rate > 0.01;
  return out;
}

PivotSample run_perturbation_bootstrap(const RegressionData& data,
                                       const ScoreFunction& score,
                                       const MFit& fit,
                                       const WeightScheme& scheme,
                                       PivotKind kind, std::uint64_t B,
                                       std::uint64_t seed) {
  MultiPivotSample all = run_perturbation_bootstrap_all(data, score, fit, scheme, B, seed);
  PivotSample out;
  out.kind = kind;
  out.seed = seed;
  out.B_requested = B;
  out.n_rejected = all.n_rejected;
  out.unreliable = all.unreliable;
  switch (kind) {
    case PivotKind::standardized_f: out.pivots = std::move(all.f); break;
    case PivotKind::naive_studentized_h: out.pivots = std::move(all.h); break;
    case PivotKind::modified_studentized_htilde: out.pivots = std::move(all.htilde); break;
    case PivotKind::hetero_studentized_hbreve: out.pivots = std::move(all.hbreve); break;
  }
  return out;
}

PivotSample run_residual_bootstrap(const RegressionData& data,
                                   const ScoreFunction& score, const MFit& fit,
                                   std::uint64_t B, std::uint64_t seed) {
  if (B < 1) throw invalid_parameter_error("B must be >= 1");
  check_fit_usable(fit);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double sqn = std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd centered =
      fit.residuals.array() - fit.residuals.mean();
  const Eigen::MatrixXd an_sqrt = sym_sqrt(fit.A_n);
  const Eigen::VectorXd fitted = data.X * fit.beta_bar;
  const bool ls = score.name == "ls";
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  if (ls) qr.compute(data.X);

  PivotSample out;
  out.kind = PivotKind::naive_studentized_h;
  out.seed = seed;
  out.B_requested = B;
  out.pivots.resize(static_cast<Eigen::Index>(B), p);
  std::vector<std::uint32_t> rejects(B, 0);
  std::atomic<bool> exhausted{false};

  SolverOptions refit_opts;
  refit_opts.validate = false;

  parallel_for(B, [&](std::size_t b) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttemptsPerReplicate) {
        exhausted.store(true);
        return;
      }
      Rng rng(derive_seed(seed, b, attempt));
      Eigen::VectorXd estar(n);
      for (Eigen::Index i = 0; i < n; ++i)
        estar(i) = centered(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));

      Eigen::VectorXd beta_refit;
      double sigma_refit = 0.0;
      bool ok = false;
      if (ls) {
        beta_refit = fit.beta_bar + qr.solve(estar);
        const Eigen::VectorXd r = fitted + estar - data.X * beta_refit;
        const double s2 = r.squaredNorm() / static_cast<double>(n);
        if (s2 > 0.0) {
          sigma_refit = std::sqrt(s2);
          ok = true;
        }
      } else {
        RegressionData boot_data{data.X, fitted + estar};
        try {
          const MFit refit = m_estimate(boot_data, score, refit_opts);
          if (!refit.degenerate && refit.sigma_hat > 0.0) {
            beta_refit = refit.beta_bar;
            sigma_refit = refit.sigma_hat;
            ok = true;
          }
        } catch (const std::runtime_error&) {
          ok = false;
        }
      }
      if (ok) {
        out.pivots.row(static_cast<Eigen::Index>(b)) =
            (sqn / sigma_refit * (an_sqrt * (beta_refit - fit.beta_bar))).transpose();
        return;
      }
      ++rejects[b];
    }
  });

  if (exhausted.load())
    throw bootstrap_failure_error("residual replicate kept failing");
  for (auto r : rejects) out.n_rejected += r;
  const double rate = static_cast<double>(out.n_rejected) / static_cast<double>(B);
  if (rate > 0.10)
    throw bootstrap_failure_error("residual bootstrap rejection rate above 10%");
  out.unreliable = rate > 0.01;
  return out;
}

double mammen_draw(Rng& rng) {
  static const double sqrt5 = std::sqrt(5.0);
  static const double lo = (1.0 - sqrt5) / 2.0;
  static const double hi = (1.0 + sqrt5) / 2.0;
  static const double p_lo = (sqrt5 + 1.0) / (2.0 * sqrt5);
  return rng.uniform() < p_lo ? lo : hi;
}

PivotSample run_wild_bootstrap(const RegressionData& data, const MFit& fit,
                               std::uint64_t B, std::uint64_t seed) {
  if (B < 1) throw invalid_parameter_error("B must be >= 1");
  check_fit_usable(fit);
  // The wild comparator is least-squares only; an LS fit has psi' == 1,
  // hence A1_bar == A_n and tau_n == 1.
  if (std::abs(fit.tau_n - 1.0) > 1e-12 ||
      (fit.A1_bar - fit.A_n).norm() > 1e-10 * fit.A_n.norm())
    throw unsupported_score_error("wild bootstrap requires a least-squares fit");

  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double dn = static_cast<double>(n);
  const double sqn = std::sqrt(dn);
  const Eigen::VectorXd fitted = data.X * fit.beta_bar;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);

  PivotSample out;
  out.kind = PivotKind::hetero_studentized_hbreve;
  out.seed = seed;
  out.B_requested = B;
  out.pivots.resize(static_cast<Eigen::Index>(B), p);
  std::vector<std::uint32_t> rejects(B, 0);
  std::atomic<bool> exhausted{false};

  parallel_for(B, [&](std::size_t b) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttemptsPerReplicate) {
        exhausted.store(true);
        return;
      }
      Rng rng(derive_seed(seed, b, attempt));
      Eigen::VectorXd estar(n);
      for (Eigen::Index i = 0; i < n; ++i)
        estar(i) = fit.residuals(i) * mammen_draw(rng);
      const Eigen::VectorXd delta = qr.solve(estar);
      const Eigen::VectorXd rstar = estar - data.X * delta;
      Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(p, p);
      for (Eigen::Index i = 0; i < n; ++i)
        a2 += data.X.row(i).transpose() * data.X.row(i) * (rstar(i) * rstar(i));
      a2 /= dn;
      try {
        out.pivots.row(static_cast<Eigen::Index>(b)) =
            (sqn * (sym_inv_sqrt(a2) * (fit.A_n * delta))).transpose();
        return;
      } catch (const degenerate_studentization_error&) {
        ++rejects[b];
      }
    }
  });

  if (exhausted.load())
    throw bootstrap_failure_error("wild replicate kept failing");
  for (auto r : rejects) out.n_rejected += r;
  const double rate = static_cast<double>(out.n_rejected) / static_cast<double>(B);
  if (rate > 0.10)
    throw bootstrap_failure_error("wild bootstrap rejection rate above 10%");
  out.unreliable = rate > 0.01;
  return out;
}

ConfidenceIntervals bootstrap_ci(const PivotSample& sample, const MFit& fit,
                                 double level, PivotKind kind) {
  if (!(level > 0.0 && level < 1.0))
    throw invalid_parameter_error("confidence level outside (0,1)");
  const auto B = static_cast<std::uint64_t>(sample.pivots.rows());
  if (B < 100) throw invalid_parameter_error("bootstrap_ci needs B >= 100");
  check_fit_usable(fit);
  const Eigen::Index p = sample.pivots.cols();
  const double alpha = 1.0 - level;
  const double sqn = std::sqrt(static_cast<double>(fit.residuals.size()));

  Eigen::MatrixXd transform;  // S
  if (kind == PivotKind::naive_studentized_h ||
      kind == PivotKind::modified_studentized_htilde) {
    if (!(fit.sigma_hat > 0.0))
      throw degenerate_studentization_error("sigma_hat not positive");
    transform = sym_sqrt(fit.A_n) / fit.sigma_hat;
  } else {
    transform = fit.sigma_half_inv;
  }
  const Eigen::MatrixXd s_inv = transform.inverse();

  ConfidenceIntervals ci;
  ci.lower.resize(p);
  ci.upper.resize(p);
  // Quantiles beyond the resolvable tail mass are extrapolated.
  const double tail = 1.0 / (static_cast<double>(B) + 1.0);
  ci.extrapolation_warning = alpha / 2.0 < tail;

  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> col(sample.pivots.col(j).data(),
                            sample.pivots.col(j).data() + sample.pivots.rows());
    const double q_lo = quantile(col, alpha / 2.0);
    const double q_hi = quantile(col, 1.0 - alpha / 2.0);
    const double scale = s_inv(j, j);
    ci.lower(j) = fit.beta_bar(j) - q_hi * scale / sqn;
    ci.upper(j) = fit.beta_bar(j) - q_lo * scale / sqn;
  }
  return ci;
}

}  // namespace pertboot
