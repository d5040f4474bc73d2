#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace pertboot {

class invalid_parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class singular_design_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a studentization quantity (s_n, tau_n, or a scale matrix)
/// collapses, e.g. on a perfect fit.
class degenerate_studentization_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton failed to converge; carries the best iterate seen.
class non_convergence_error : public std::runtime_error {
 public:
  non_convergence_error(const std::string& what, Eigen::VectorXd best_iterate,
                        double eq_norm)
      : std::runtime_error(what),
        best_iterate(std::move(best_iterate)),
        eq_norm(eq_norm) {}

  Eigen::VectorXd best_iterate;
  double eq_norm;
};

class unsupported_model_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class unsupported_score_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bootstrap engine could not produce the requested replicates (rejection
/// rate above 10%, or a replicate kept failing after many redraws).
class bootstrap_failure_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pertboot
