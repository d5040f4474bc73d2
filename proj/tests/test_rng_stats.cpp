#include <cmath>
#include <vector>

#include <doctest.h>

#include "pertboot/errors.hpp"
#include "pertboot/rng.hpp"
#include "pertboot/stats.hpp"

using namespace pertboot;

TEST_CASE("derive_seed separates streams and is order-insensitive in value only") {
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
  CHECK(derive_seed(7, 5) == derive_seed(7, 5));
}

TEST_CASE("uniform stays strictly inside (0,1)") {
  Rng rng(42);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal and exponential sample moments") {
  Rng rng(7);
  const int m = 200000;
  double sn = 0, sn2 = 0, se = 0, se2 = 0;
  for (int i = 0; i < m; ++i) {
    const double z = rng.normal();
    const double e = rng.exponential();
    sn += z;
    sn2 += z * z;
    se += e;
    se2 += e * e;
  }
  CHECK(std::abs(sn / m) < 0.01);
  CHECK(std::abs(sn2 / m - 1.0) < 0.02);
  CHECK(std::abs(se / m - 1.0) < 0.01);
  CHECK(std::abs(se2 / m - 2.0) < 0.05);
}

TEST_CASE("normal cdf and quantile invert each other") {
  for (double p : {1e-6, 0.01, 0.1, 0.5, 0.9, 0.975, 1.0 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
}

TEST_CASE("empirical quantile interpolates linearly") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(v, 1.0) == doctest::Approx(4.0));
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(median(v) == doctest::Approx(2.5));
}

TEST_CASE("two-sample KS distance on known samples") {
  // Disjoint supports: distance 1.
  CHECK(ks_distance({1.0, 2.0}, {5.0, 6.0}) == doctest::Approx(1.0));
  // Identical samples: distance 0.
  CHECK(ks_distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
  // Interleaved: {1,3} vs {2,4} -> sup 1/2.
  CHECK(ks_distance({1.0, 3.0}, {2.0, 4.0}) == doctest::Approx(0.5));
}

TEST_CASE("one-sample KS against the normal detects a shift") {
  Rng rng(3);
  std::vector<double> sample(20000);
  for (auto& x : sample) x = rng.normal();
  CHECK(ks_distance_normal(sample) < 0.02);
  for (auto& x : sample) x += 1.0;
  CHECK(ks_distance_normal(sample) > 0.3);
}

TEST_CASE("symmetric square root round-trips and rejects near-singular input") {
  Eigen::MatrixXd m(2, 2);
  m << 4.0, 1.0, 1.0, 3.0;
  const Eigen::MatrixXd r = sym_sqrt(m);
  CHECK((r * r - m).norm() < 1e-12);
  const Eigen::MatrixXd ri = sym_inv_sqrt(m);
  CHECK((ri * m * ri - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);

  Eigen::MatrixXd sing(2, 2);
  sing << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(sym_inv_sqrt(sing), degenerate_studentization_error);
}

TEST_CASE("parallel_for writes every slot once for any worker count") {
  for (int threads : {1, 2, 4}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, threads);
    for (int h : hits) CHECK(h == 1);
  }
}
