// Acceptance suite: one line per criterion, PASS or FAIL, nonzero exit when
// anything fails. Every check runs from fixed seeds.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pertboot/boot.hpp"
#include "pertboot/diagnostics.hpp"
#include "pertboot/edgeworth.hpp"
#include "pertboot/errors.hpp"
#include "pertboot/perturb.hpp"
#include "pertboot/rng.hpp"
#include "pertboot/sim.hpp"
#include "pertboot/stats.hpp"

using namespace pertboot;

namespace {

int g_failures = 0;

void report(int id, const std::string& what, bool pass,
            const std::string& detail = "") {
  std::printf("%s criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", id,
              what.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

double huber_location_bisect(const Eigen::VectorXd& y, double c) {
  const ScoreFunction s = make_smooth_huber(c);
  auto g = [&](double m) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) acc += s.eval(y(i) - m);
    return acc;
  };
  double lo = y.minCoeff() - 1.0, hi = y.maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void criterion1() {
  Rng rng(1001);
  bool ok = true;
  double worst = 0.0;
  const ScoreFunction ls = make_least_squares();
  int done = 0;
  while (done < 100) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(5));
    const Eigen::Index n = p + 5 + static_cast<Eigen::Index>(rng.below(45 - p));
    RegressionData d;
    d.X.resize(n, p);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.X(i, 0) = 1.0;
      for (Eigen::Index j = 1; j < p; ++j) d.X(i, j) = rng.normal();
      d.y(i) = rng.normal();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.X);
    if (svd.singularValues()(p - 1) < 1e-3 * svd.singularValues()(0)) continue;
    ++done;
    const MFit fit = m_estimate(d, ls);
    const Eigen::VectorXd ne =
        (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    const double rel = (fit.beta_bar - ne).norm() / std::max(1.0, ne.norm());
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-10;
  }
  double worst_h = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index n = 15 + static_cast<Eigen::Index>(rng.below(30));
    RegressionData d;
    d.X = Eigen::MatrixXd::Ones(n, 1);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      d.y(i) = rng.normal() + (rng.uniform() < 0.15 ? 6.0 : 0.0);
    const double c = 1.0 + rng.uniform();
    const MFit fit = m_estimate(d, make_smooth_huber(c));
    worst_h = std::max(worst_h,
                       std::abs(fit.beta_bar(0) - huber_location_bisect(d.y, c)));
  }
  ok = ok && worst_h <= 1e-8;
  report(1, "solver matches normal equations and the bisection oracle", ok,
         "worst ls rel " + fmt(worst) + ", worst location abs " + fmt(worst_h));
}

// ---------------------------------------------------------------- criterion 2

void criterion2() {
  const ValidationReport r = validate_scheme(make_beta_half(), 1000000, 2002);
  const bool ok = r.pass && r.mean_check.pass && r.variance_check.pass &&
                  r.third_central_check.pass && r.negative_draws == 0;
  report(2, "Beta(1/2,3/2) weight moments match analytic values", ok,
         "mean " + fmt(r.mean_check.sample) + ", var " +
             fmt(r.variance_check.sample) + ", third " +
             fmt(r.third_central_check.sample));
}

// ---------------------------------------------------------------- criterion 3

void criterion3() {
  Rng rng(3003);
  RegressionData d;
  const Eigen::Index n = 30, p = 2;
  d.X.resize(n, p);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = rng.normal();
    d.y(i) = 1.0 + 0.5 * d.X(i, 1) + rng.normal();
  }
  const ScoreFunction ls = make_least_squares();
  const MFit fit = m_estimate(d, ls);
  const WeightScheme scheme = make_scaled_beta_half(4.0);
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    Eigen::VectorXd w(n);
    const std::uint64_t key = derive_seed(77, r);
    for (Eigen::Index i = 0; i < n; ++i)
      w(i) = scheme.sampler(key, static_cast<std::uint64_t>(i));
    const auto beta_star = perturb_replicate(d, ls, fit, w);
    if (!beta_star) continue;
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      xtx += d.X.row(i).transpose() * d.X.row(i) * w(i);
      xty += d.X.row(i).transpose() * (d.y(i) * w(i));
    }
    const Eigen::VectorXd oracle = xtx.fullPivLu().solve(xty);
    const double rel = (*beta_star - oracle).norm() / std::max(1.0, oracle.norm());
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-10;
  }
  report(3, "quadratic-loss replicates equal the weighted normal equations", ok,
         "worst rel " + fmt(worst));
}

// ---------------------------------------------------------------- criterion 4

void criterion4() {
  Rng rng(4004);
  RegressionData d;
  const Eigen::Index n = 50;
  d.X.resize(n, 2);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = rng.normal();
    d.y(i) = 0.3 * d.X(i, 1) + rng.normal();
  }
  const ScoreFunction score = make_smooth_huber(1.5);
  const MFit fit = m_estimate(d, score);
  const WeightScheme s1 = make_scaled_beta_half(4.0);
  const WeightScheme s3 = make_scaled_beta_half(12.0);

  bool exact = true;
  for (double c : {1.0, 0.25, 4.0}) {
    const auto b = perturb_replicate(d, score, fit,
                                     Eigen::VectorXd::Constant(n, c));
    exact = exact && b && (*b - fit.beta_bar).norm() == 0.0;
  }

  bool rescale = true;
  for (std::uint64_t r = 0; r < 50; ++r) {
    Eigen::VectorXd w(n);
    const std::uint64_t key = derive_seed(44, r);
    for (Eigen::Index i = 0; i < n; ++i)
      w(i) = s1.sampler(key, static_cast<std::uint64_t>(i));
    const auto b1 = perturb_replicate(d, score, fit, w);
    const auto b3 = perturb_replicate(d, score, fit, 3.0 * w);
    if (!b1 || !b3) continue;
    rescale = rescale && (*b1 - *b3).norm() <= 1e-12 * std::max(1.0, b1->norm());
    const auto h1 = perturb_pivot_from_replicate(
        d, score, fit, w, s1, PivotKind::modified_studentized_htilde, *b1);
    const auto h3 = perturb_pivot_from_replicate(
        d, score, fit, 3.0 * w, s3, PivotKind::modified_studentized_htilde, *b3);
    rescale = rescale && h1 && h3 &&
              (*h1 - *h3).norm() <= 1e-12 * std::max(1.0, h1->norm());
  }

  setenv("PERTBOOT_THREADS", "1", 1);
  const MultiPivotSample one =
      run_perturbation_bootstrap_all(d, score, fit, s1, 500, 45);
  setenv("PERTBOOT_THREADS", "2", 1);
  const MultiPivotSample two =
      run_perturbation_bootstrap_all(d, score, fit, s1, 500, 45);
  setenv("PERTBOOT_THREADS", "4", 1);
  const MultiPivotSample four =
      run_perturbation_bootstrap_all(d, score, fit, s1, 500, 45);
  setenv("PERTBOOT_THREADS", "1", 1);
  const bool threads = one.f == two.f && two.f == four.f &&
                       one.htilde == two.htilde && two.htilde == four.htilde &&
                       one.hbreve == four.hbreve && one.h == four.h;

  report(4, "constant-weight exactness, rescale invariance, thread determinism",
         exact && rescale && threads,
         std::string("exact=") + (exact ? "y" : "n") + " rescale=" +
             (rescale ? "y" : "n") + " threads=" + (threads ? "y" : "n"));
}

// ---------------------------------------------------------------- criterion 5

void criterion5() {
  const Eigen::Index n = 200;
  Rng rng(5005);
  RegressionData d;
  d.X = Eigen::MatrixXd::Ones(n, 1);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) d.y(i) = 0.7 + rng.normal();
  const ScoreFunction ls = make_least_squares();
  const MFit fit = m_estimate(d, ls);
  const MultiPivotSample s = run_perturbation_bootstrap_all(
      d, ls, fit, make_scaled_beta_half(4.0), 5000, 505);

  auto ks = [](const Eigen::MatrixXd& m) {
    return ks_distance_normal({m.col(0).data(), m.col(0).data() + m.rows()});
  };
  const double kf = ks(s.f), kh = ks(s.h), kt = ks(s.htilde), kb = ks(s.hbreve);
  const bool ok = kf < 0.06 && kh < 0.06 && kt < 0.06 && kb < 0.06;
  report(5, "all four pivot samples are near standard normal", ok,
         "KS f " + fmt(kf) + ", h " + fmt(kh) + ", htilde " + fmt(kt) +
             ", hbreve " + fmt(kb));
}

// ------------------------------------------------------------- criteria 6, 11

const MethodReport& find_method(const SimReport& r, const std::string& name) {
  for (const auto& m : r.methods)
    if (m.method == name) return m;
  throw std::runtime_error("method missing from report");
}

// Mean and paired-t statistic of d_k = a_k - b_k.
std::pair<double, double> paired_stat(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  const std::size_t k = a.size();
  std::vector<double> diff(k);
  for (std::size_t i = 0; i < k; ++i) diff[i] = a[i] - b[i];
  const double m = mean(diff);
  const double se = std::sqrt(variance(diff) / static_cast<double>(k));
  return {m, se > 0.0 ? m / se : 0.0};
}

void criterion6() {
  Scenario s;
  s.n = 100;
  s.p = 1;
  s.design_gen = DesignGen::ones;
  s.error_law = ErrorLaw::centered_exponential;
  s.error_param = 1.0;
  s.score_name = "ls";
  s.M = 50;
  s.B = 2000;
  s.truth_draws = 20000;
  s.seed = 6006;

  const SimReport skew = run_scenario(s);
  const MethodReport& naive = find_method(skew, "perturb-naive");
  const MethodReport& modified = find_method(skew, "perturb-modified");
  const auto [gap, t_skew] =
      paired_stat(naive.sup_distances, modified.sup_distances);
  const bool skew_ok =
      modified.median_sup < naive.median_sup && t_skew >= 3.0;

  s.error_law = ErrorLaw::normal;
  s.error_param = 1.0;
  const SimReport sym = run_scenario(s);
  const auto [gap_n, t_norm] =
      paired_stat(find_method(sym, "perturb-naive").sup_distances,
                  find_method(sym, "perturb-modified").sup_distances);
  const bool norm_ok = std::abs(t_norm) <= 3.0;

  report(6, "modified beats naive under skew, ties under symmetry",
         skew_ok && norm_ok,
         "skew medians " + fmt(modified.median_sup) + " < " +
             fmt(naive.median_sup) + ", paired t " + fmt(t_skew) +
             "; normal paired t " + fmt(t_norm));
}

void criterion11() {
  // One-sided 95% upper confidence bounds: the second-order effect shows
  // up in one-sided coverage at the sqrt(n) order, whereas equal-tailed
  // two-sided coverage errors largely cancel between the two pivots.
  const Eigen::Index n = 100;
  const std::uint64_t B = 2000;
  const int M = 2000;
  const ScoreFunction ls = make_least_squares();
  const WeightScheme scheme = make_scaled_beta_half(4.0);
  RegressionData d;
  d.X = Eigen::MatrixXd::Ones(n, 1);
  d.y.resize(n);

  int hit_mod = 0, hit_naive = 0;
  std::vector<double> diff;
  for (int k = 0; k < M; ++k) {
    Rng er(derive_seed(1111, 1, k));
    for (Eigen::Index i = 0; i < n; ++i) d.y(i) = er.exponential() - 1.0;
    const MFit fit = m_estimate(d, ls);
    const MultiPivotSample s = run_perturbation_bootstrap_all(
        d, ls, fit, scheme, B, derive_seed(1111, 2, k));
    const double scale = fit.sigma_hat / std::sqrt(static_cast<double>(n));
    auto upper_covers = [&](const Eigen::MatrixXd& piv) {
      std::vector<double> col(piv.col(0).data(),
                              piv.col(0).data() + piv.rows());
      return 0.0 <= fit.beta_bar(0) - quantile(col, 0.05) * scale;
    };
    const int cm = upper_covers(s.htilde);
    const int cn = upper_covers(s.h);
    hit_mod += cm;
    hit_naive += cn;
    diff.push_back(cm - cn);
  }

  const double cov_mod = static_cast<double>(hit_mod) / M;
  const double cov_naive = static_cast<double>(hit_naive) / M;
  const bool cov_ok = cov_mod >= 0.92 && cov_mod <= 0.975;
  const double m = mean(diff);
  const double se = std::sqrt(variance(diff) / static_cast<double>(M));
  const bool sep_ok = se > 0.0 && std::abs(m) > 3.0 * se;

  report(11, "modified-pivot coverage is calibrated and differs from naive",
         cov_ok && sep_ok,
         "coverage modified " + fmt(cov_mod) + ", naive " + fmt(cov_naive) +
             ", paired diff " + fmt(m) + " (se " + fmt(se) + ")");
}

// ---------------------------------------------------------------- criterion 7

void criterion7() {
  // The measured sup-distance carries a Monte Carlo floor of roughly
  // 0.87 sqrt(1/B + 1/truth_draws); keeping B and truth_draws proportional
  // to n holds that floor constant on the sqrt(n) scale, so the trend in
  // the scaled error reflects the estimators rather than the noise.
  const std::vector<Eigen::Index> grid = {50, 100, 200, 400};
  std::vector<double> mod, nai;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Scenario s;
    s.n = grid[i];
    s.p = 1;
    s.design_gen = DesignGen::ones;
    s.error_law = ErrorLaw::centered_exponential;
    s.error_param = 1.0;
    s.score_name = "ls";
    s.M = 50;
    s.B = static_cast<std::uint64_t>(100 * grid[i]);
    s.truth_draws = static_cast<std::uint64_t>(400 * grid[i]);
    s.seed = derive_seed(7007, i);
    const SimReport r = run_scenario(s);
    mod.push_back(find_method(r, "perturb-modified").scaled_distance);
    nai.push_back(find_method(r, "perturb-naive").scaled_distance);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < mod.size(); ++i)
    decreasing = decreasing && mod[i] < mod[i - 1];
  const bool naive_floor = nai.back() > 0.5 * nai.front();

  std::string detail = "modified scaled:";
  for (double v : mod) detail += " " + fmt(v);
  detail += "; naive scaled:";
  for (double v : nai) detail += " " + fmt(v);
  report(7, "sqrt(n)-scaled error shrinks for modified, floors for naive",
         decreasing && naive_floor, detail);
}

// ---------------------------------------------------------------- criterion 8

void criterion8() {
  const Eigen::Index n = 200;
  Rng xr(8008);
  Eigen::VectorXd x(n), sig(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = 1.0 + xr.uniform();
    sig(i) = 0.5 + x(i);
  }
  const double sxx = x.squaredNorm();
  double target = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    target += x(i) * x(i) * sig(i) * sig(i);
  target /= sxx * sxx;

  const ScoreFunction ls = make_least_squares();
  const WeightScheme scheme = make_scaled_beta_half(4.0);
  const std::size_t datasets = 50;
  const std::uint64_t B = 2000;
  std::vector<double> perturb_vars, residual_vars;
  RegressionData d;
  d.X = x;
  d.y.resize(n);
  for (std::size_t k = 0; k < datasets; ++k) {
    Rng er(derive_seed(8008, 1, k));
    for (Eigen::Index i = 0; i < n; ++i)
      d.y(i) = 2.0 * x(i) + sig(i) * er.normal();
    const MFit fit = m_estimate(d, ls);

    // Conditional variance of the perturbation estimator by MC.
    double s1 = 0.0, s2 = 0.0;
    std::uint64_t used = 0;
    for (std::uint64_t r = 0; r < B; ++r) {
      Eigen::VectorXd w(n);
      const std::uint64_t key = derive_seed(8008, 2, k * B + r);
      for (Eigen::Index i = 0; i < n; ++i)
        w(i) = scheme.sampler(key, static_cast<std::uint64_t>(i));
      const auto beta_star = perturb_replicate(d, ls, fit, w);
      if (!beta_star) continue;
      const double v = (*beta_star)(0);
      s1 += v;
      s2 += v * v;
      ++used;
    }
    const double du = static_cast<double>(used);
    perturb_vars.push_back(s2 / du - (s1 / du) * (s1 / du));

    // Residual bootstrap conditional variance in closed form.
    const Eigen::VectorXd ec = fit.residuals.array() - fit.residuals.mean();
    residual_vars.push_back(ec.squaredNorm() / static_cast<double>(n) / sxx);
  }

  const double mp = mean(perturb_vars);
  const double sep = std::sqrt(variance(perturb_vars) /
                               static_cast<double>(datasets));
  const double mr = mean(residual_vars);
  const double ser = std::sqrt(variance(residual_vars) /
                               static_cast<double>(datasets));
  const bool perturb_ok = std::abs(mp - target) <= 3.0 * sep;
  const bool residual_off = std::abs(mr - target) >= 3.0 * ser;

  // Exactness of the closed form itself, by enumeration at n = 3.
  Eigen::VectorXd x3(3), e3(3);
  x3 << 1.0, 2.0, 3.0;
  e3 << 0.4, -0.7, 0.1;
  const Eigen::VectorXd ec3 = e3.array() - e3.mean();
  const double sxx3 = x3.squaredNorm();
  double acc = 0.0, acc2 = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const double delta =
            (x3(0) * ec3(a) + x3(1) * ec3(b) + x3(2) * ec3(c)) / sxx3;
        acc += delta;
        acc2 += delta * delta;
      }
  acc /= 27.0;
  acc2 = acc2 / 27.0 - acc * acc;
  const bool identity_ok =
      std::abs(acc2 - ec3.squaredNorm() / 3.0 / sxx3) <= 1e-14;

  report(8, "perturbation variance tracks heteroscedastic target, residual does not",
         perturb_ok && residual_off && identity_ok,
         "target " + fmt(target) + ", perturb " + fmt(mp) + " (se " + fmt(sep) +
             "), residual " + fmt(mr) + " (se " + fmt(ser) + ")");
}

// ---------------------------------------------------------------- criterion 9

template <typename F>
double simpson(F f, double a, double b, int m) {
  const double h = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

void criterion9() {
  Rng rng(9009);
  bool ok = true;
  double worst_mass = 0.0, worst_cdf = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Edgeworth1D e;
    e.b11 = 2.0 * rng.uniform() - 1.0;
    e.b31 = 4.0 * rng.uniform() - 2.0;
    e.n = 50 + rng.below(2000);
    const double mass =
        simpson([&](double x) { return edgeworth_density(e, x); }, -14.0, 14.0,
                56000);
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));

    const double x0 = 4.0 * rng.uniform() - 2.0;
    const double tail =
        simpson([&](double x) { return edgeworth_density(e, x); }, -14.0, x0,
                56000);
    worst_cdf = std::max(worst_cdf, std::abs(tail - edgeworth_cdf(e, x0)));
  }
  ok = worst_mass <= 1e-8 && worst_cdf <= 1e-8;

  const Edgeworth1D ce = location_model_original(1.0, 2.0, 100);
  ok = ok && ce.b11 == -1.0 && ce.b31 == -4.0;
  report(9, "expansion density, CDF, and location coefficients are consistent",
         ok, "worst mass err " + fmt(worst_mass) + ", worst cdf err " +
                 fmt(worst_cdf));
}

// --------------------------------------------------------------- criterion 10

void criterion10() {
  bool sweep_ok = true;
  std::string detail;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    double lo = 1e300, hi = 0.0;
    for (Eigen::Index n : {100, 400, 1600}) {
      Scenario s;
      s.n = n;
      s.p = 2;
      s.design_gen = DesignGen::iid_gaussian;
      s.seed = seed;
      const double v = design_diagnostics(make_design(s), 0.5).n_times_sum;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    sweep_ok = sweep_ok && hi / lo <= 5.0;
    detail += (detail.empty() ? "ratios " : ", ") + fmt(hi / lo);
  }

  const double ones_val =
      design_diagnostics(Eigen::MatrixXd::Ones(128, 1), 0.5).n_times_sum;
  const bool ones_ok = std::abs(ones_val - 2.0) <= 1e-10;

  const bool gap_ok =
      second_order_gap({1.0, 0.0, 1.0, 2.0}) == -2.0 &&
      second_order_gap({1.0, 0.0, 1.0, 0.0}) == 0.0;

  report(10, "design diagnostic is sweep-stable, exact on constants; gap values",
         sweep_ok && ones_ok && gap_ok,
         detail + "; ones " + fmt(ones_val));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
