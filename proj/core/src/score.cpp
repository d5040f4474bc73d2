#include "pertboot/score.hpp"

#include <cmath>

#include "pertboot/errors.hpp"

namespace pertboot {

ScoreFunction make_least_squares() {
  ScoreFunction s;
  s.name = "ls";
  s.eval = [](double x) { return x; };
  s.deriv1 = [](double) { return 1.0; };
  s.deriv2 = [](double) { return 0.0; };
  return s;
}

ScoreFunction make_smooth_huber(double c) {
  if (!(c > 0.0)) throw invalid_parameter_error("pseudo-huber tuning constant must be > 0");
  ScoreFunction s;
  s.name = "pseudo-huber";
  s.tuning = c;
  const double c2 = c * c;
  s.eval = [c2](double x) { return x / std::sqrt(1.0 + x * x / c2); };
  s.deriv1 = [c2](double x) { return std::pow(1.0 + x * x / c2, -1.5); };
  s.deriv2 = [c2](double x) { return -3.0 * x / c2 * std::pow(1.0 + x * x / c2, -2.5); };
  return s;
}

ScoreFunction make_score_by_name(const std::string& name, double tuning) {
  if (name == "ls") return make_least_squares();
  if (name == "pseudo-huber") return make_smooth_huber(tuning);
  throw invalid_parameter_error("unknown score: " + name);
}

}  // namespace pertboot
