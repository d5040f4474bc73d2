#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "pertboot/mest.hpp"
#include "pertboot/perturb.hpp"
#include "pertboot/score.hpp"

namespace pertboot {

enum class PivotKind {
  standardized_f,
  naive_studentized_h,
  modified_studentized_htilde,
  hetero_studentized_hbreve,
};

/// Empirical bootstrap distribution: one pivot per row, plus rejection
/// bookkeeping. Rejected replicates are redrawn with fresh weights so
/// rows(pivots) == B_requested.
struct PivotSample {
  PivotKind kind = PivotKind::standardized_f;
  Eigen::MatrixXd pivots;  // B x p
  std::uint64_t n_rejected = 0;
  std::uint64_t seed = 0;
  std::uint64_t B_requested = 0;
  bool unreliable = false;  // rejection rate above 1%
};

/// All four bootstrap pivots computed from one shared replicate stream
/// (same beta* and weights per row across the matrices).
struct MultiPivotSample {
  Eigen::MatrixXd f, h, htilde, hbreve;  // each B x p
  std::uint64_t n_rejected = 0;
  std::uint64_t seed = 0;
  std::uint64_t B_requested = 0;
  bool unreliable = false;
};

/// Solves the weighted estimating equation sum_i x_i psi(y_i - x_i'b) G_i = 0
/// by Newton from beta_bar, restricted to the trust region
/// ||b - beta_bar|| <= 10 sqrt(p log n / n) sigma_hat ||A_n^-1||^{1/2}.
/// Returns nullopt when the replicate must be rejected (non-convergence,
/// singular weighted system, or trust region exceeded).
std::optional<Eigen::VectorXd> perturb_replicate(const RegressionData& data,
                                                 const ScoreFunction& score,
                                                 const MFit& fit,
                                                 const Eigen::VectorXd& weights);

/// Solves the replicate and studentizes it. nullopt = replicate rejected.
std::optional<Eigen::VectorXd> perturb_pivot(const RegressionData& data,
                                             const ScoreFunction& score,
                                             const MFit& fit,
                                             const Eigen::VectorXd& weights,
                                             const WeightScheme& scheme,
                                             PivotKind kind);

/// Same, from an already-solved beta*.
std::optional<Eigen::VectorXd> perturb_pivot_from_replicate(
    const RegressionData& data, const ScoreFunction& score, const MFit& fit,
    const Eigen::VectorXd& weights, const WeightScheme& scheme, PivotKind kind,
    const Eigen::VectorXd& beta_star);

/// B accepted replicates, all four pivots per replicate. Deterministic in
/// (seed, B) for any worker count. Throws when the rejection rate exceeds
/// 10% or the fit is degenerate.
MultiPivotSample run_perturbation_bootstrap_all(const RegressionData& data,
                                                const ScoreFunction& score,
                                                const MFit& fit,
                                                const WeightScheme& scheme,
                                                std::uint64_t B,
                                                std::uint64_t seed);

PivotSample run_perturbation_bootstrap(const RegressionData& data,
                                       const ScoreFunction& score,
                                       const MFit& fit,
                                       const WeightScheme& scheme,
                                       PivotKind kind, std::uint64_t B,
                                       std::uint64_t seed);

/// Residual bootstrap comparator: resamples centered residuals, refits,
/// returns naive studentized pivots (H form with the refit sigma_hat).
PivotSample run_residual_bootstrap(const RegressionData& data,
                                   const ScoreFunction& score, const MFit& fit,
                                   std::uint64_t B, std::uint64_t seed);

/// Wild bootstrap comparator (least squares only): multiplies residuals by
/// Mammen two-point draws, refits LS, returns hetero-studentized pivots.
PivotSample run_wild_bootstrap(const RegressionData& data, const MFit& fit,
                               std::uint64_t B, std::uint64_t seed);

/// Mammen two-point draw: (1-sqrt5)/2 w.p. (sqrt5+1)/(2 sqrt5), else
/// (1+sqrt5)/2. Mean 0, variance 1, third moment 1.
double mammen_draw(class Rng& rng);

struct ConfidenceIntervals {
  Eigen::VectorXd lower, upper;  // length p
  bool extrapolation_warning = false;
};

/// Percentile-of-pivot inversion. For coordinate j the interval is
///   beta_j - q_{1-a/2} scale_j / sqrt(n) ... beta_j - q_{a/2} scale_j / sqrt(n)
/// with q the empirical pivot quantiles and scale_j = (S^-1)_jj, where S is
/// the pivot's standardizing transform: S = sigma_hat^-1 A_n^{1/2} for the
/// H and Htilde kinds, S = A2_bar^{-1/2} A1_bar for the F and Hbreve kinds.
ConfidenceIntervals bootstrap_ci(const PivotSample& sample, const MFit& fit,
                                 double level, PivotKind kind);

}  // namespace pertboot
