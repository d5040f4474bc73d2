#pragma once

#include <functional>
#include <string>

namespace pertboot {

/// A score function psi with exact first and second derivatives. All
/// built-ins are odd with monotone psi and Lipschitz psi''; derivatives
/// are analytic, never numeric.
struct ScoreFunction {
  std::string name;
  double tuning = 0.0;  // scale constant; 0 means none
  std::function<double(double)> eval;    // psi
  std::function<double(double)> deriv1;  // psi'
  std::function<double(double)> deriv2;  // psi''
};

/// psi(x) = x (least squares).
ScoreFunction make_least_squares();

/// Pseudo-Huber score psi(x) = x / sqrt(1 + x^2/c^2); smooth, bounded by c.
ScoreFunction make_smooth_huber(double c);

/// Lookup by CLI name: "ls" or "pseudo-huber".
ScoreFunction make_score_by_name(const std::string& name, double tuning = 1.0);

}  // namespace pertboot
