#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pertboot/mest.hpp"

namespace pertboot {

enum class DesignGen {
  fixed_csv,           // caller supplies the design matrix
  iid_gaussian,  // IID standard normal entries
  ones,                // intercept-only location model
};

enum class ErrorLaw {
  normal,                // sigma * Z
  centered_exponential,  // Exp(lambda) - 1/lambda
  scaled_t,              // unit-variance t(df), integer df > 4
  hetero,                // sigma_i * Z with sigma_i = 0.5 + |x_i| (or custom)
};

struct Scenario {
  Eigen::Index n = 100;
  Eigen::Index p = 1;
  DesignGen design_gen = DesignGen::ones;
  Eigen::MatrixXd fixed_design;  // used when design_gen == fixed_csv
  ErrorLaw error_law = ErrorLaw::normal;
  double error_param = 1.0;       // sigma / lambda / df
  Eigen::VectorXd hetero_sigmas;  // optional custom per-row scale
  std::string score_name = "ls";
  double tuning = 1.345;
  Eigen::VectorXd beta_true;
  std::uint64_t M = 50;              // outer MC repetitions (bootstrap runs)
  std::uint64_t B = 2000;            // bootstrap replicates per run
  std::uint64_t truth_draws = 20000; // MC draws estimating the pivot's law
  std::uint64_t seed = 0;
  double ci_level = 0.95;
};

/// One row per method. sup_distances and covered have one entry per outer
/// repetition, in outer-index order, so cross-method comparisons are
/// seed-paired.
struct MethodReport {
  std::string method;
  std::vector<double> sup_distances;
  std::vector<std::uint8_t> covered;
  double median_sup = 0.0;
  double scaled_distance = 0.0;  // sqrt(n) * median_sup
  double sup_mc_se = 0.0;        // asymptotic SE of the median
  double coverage = 0.0;
  double coverage_mc_se = 0.0;
};

struct SimReport {
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  std::vector<MethodReport> methods;
  bool partial = false;  // an engine failure truncated the outer loop
};

/// Generates the scenario's design matrix (deterministic in the seed).
Eigen::MatrixXd make_design(const Scenario& s);

/// Draws one error vector for the given design; stream is a pure function of
/// (seed, which).
Eigen::VectorXd draw_errors(const Scenario& s, const Eigen::MatrixXd& X,
                            std::uint64_t which);

/// Estimates the law of the studentized original pivots by truth_draws MC
/// repetitions, then for each of M outer datasets runs every bootstrap
/// method with B replicates and records per-coordinate sup-distance to the
/// truth sample (plus axis-aligned rectangle distances when p = 2) and CI
/// coverage of beta_true. Methods: normal-approx, perturb-naive,
/// perturb-modified, perturb-hetero, residual, and (least squares only) wild.
SimReport run_scenario(const Scenario& s);

/// run_scenario across a grid of sample sizes (same scenario otherwise).
/// Requires at least 3 increasing sizes.
std::vector<SimReport> rate_sweep(const Scenario& s,
                                  const std::vector<Eigen::Index>& n_grid);

/// Sup over per-coordinate two-sample KS distances; for p = 2 also the sup
/// over axis-aligned rectangles on a 20x20 quantile grid of the second
/// sample.
double sup_distance(const Eigen::MatrixXd& sample,
                    const Eigen::MatrixXd& reference);

}  // namespace pertboot
