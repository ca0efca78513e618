#include <doctest.h>

#include "analysis.hpp"
#include "qmc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace podnn;

TEST_CASE("radical inverse of small indices") {
  CHECK(qmc::radical_inverse(0, 2) == 0.0);
  CHECK(qmc::radical_inverse(1, 2) == 0.5);
  CHECK(qmc::radical_inverse(3, 2) == 0.75);
  CHECK(qmc::radical_inverse(1, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(qmc::radical_inverse(1, 1), Error);
}

TEST_CASE("prime table") {
  const auto primes = qmc::first_primes(8);
  CHECK(primes == std::vector<int>{2, 3, 5, 7, 11, 13, 17, 19});
  // Dimensions beyond any precomputed table still work.
  CHECK(qmc::first_primes(100).back() == 541);
}

TEST_CASE("halton points match hand-computed radical inverses") {
  qmc::QmcConfig cfg;
  cfg.s = 2;
  cfg.n_points = 2;
  cfg.start_index = 1;
  const Mat pts = qmc::halton_points(cfg);
  CHECK(pts(0, 0) == 0.5);
  CHECK(pts(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(pts(1, 0) == 0.25);
  CHECK(pts(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  qmc::QmcConfig zero;
  zero.s = 1;
  zero.n_points = 1;
  zero.start_index = 0;
  CHECK(qmc::halton_points(zero)(0, 0) == 0.0);
}

TEST_CASE("rescaling onto the parameter cube") {
  Mat mid(1, 2);
  mid << 0.5, 0.5;
  CHECK(qmc::to_parameter_cube(mid).isZero(0.0));

  Mat corner(1, 1);
  corner << 0.0;
  CHECK(qmc::to_parameter_cube(corner)(0, 0) == -1.0);

  Mat generic(1, 2);
  generic << 0.75, 1.0 / 3.0;
  const Mat out = qmc::to_parameter_cube(generic);
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));

  Mat bad(1, 1);
  bad << 1.0;
  CHECK_THROWS_AS(qmc::to_parameter_cube(bad), Error);
}

TEST_CASE("equal-weight quadrature mean") {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  CHECK(qmc::qmc_mean(ones) == 1.0);
  const std::vector<double> pair{0.0, 2.0};
  CHECK(qmc::qmc_mean(pair) == 1.0);
  CHECK_THROWS_AS(qmc::qmc_mean(std::vector<double>{}), Error);
}

namespace {

// f(y) = prod_j (1 + y_j / 2^j) integrates to 1 over [-1,1]^s with the
// uniform product measure: every factor has mean one.
double product_integrand(const Vec& y) {
  double value = 1.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    value *= 1.0 + y(j) / std::pow(2.0, static_cast<double>(j + 1));
  }
  return value;
}

double quadrature_error(int s, long n) {
  qmc::QmcConfig cfg;
  cfg.s = s;
  cfg.n_points = n;
  const Mat pts = qmc::to_parameter_cube(qmc::halton_points(cfg));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    values.push_back(product_integrand(pts.row(i)));
  }
  return std::abs(qmc::qmc_mean(values) - 1.0);
}

}  // namespace

TEST_CASE("product integrand is integrated to one") {
  CHECK(quadrature_error(4, 1 << 10) < 0.01);
}

TEST_CASE("empirical quadrature convergence rate") {
  std::vector<double> ns, errs;
  for (int m = 4; m <= 12; ++m) {
    ns.push_back(static_cast<double>(1L << m));
    errs.push_back(quadrature_error(4, 1L << m));
  }
  CHECK(analysis::fit_rate(ns, errs) <= -0.8);
}

TEST_CASE("determinism and range of generated points") {
  qmc::QmcConfig cfg;
  cfg.s = 11;
  cfg.n_points = 200;
  const Mat a = qmc::halton_points(cfg);
  const Mat b = qmc::halton_points(cfg);
  CHECK((a.array() == b.array()).all());
  const Mat cube = qmc::to_parameter_cube(a);
  CHECK((cube.array() >= -1.0).all());
  CHECK((cube.array() < 1.0).all());
}

TEST_CASE("base-2 prefix is the dyadic grid") {
  const int m = 4;
  qmc::QmcConfig cfg;
  cfg.s = 1;
  cfg.n_points = 1 << m;
  cfg.start_index = 0;
  const Mat pts = qmc::halton_points(cfg);
  std::vector<double> sorted(pts.data(), pts.data() + pts.size());
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < (1 << m); ++k) {
    CHECK(sorted[static_cast<std::size_t>(k)] ==
          static_cast<double>(k) / static_cast<double>(1 << m));
  }
}

TEST_CASE("config validation") {
  qmc::QmcConfig cfg;
  cfg.s = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.s = 1;
  cfg.n_points = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.n_points = 1;
  cfg.start_index = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);

  qmc::RateConfig rates;
  rates.p = 1.0;
  CHECK_THROWS_AS(rates.validate(), Error);
  rates.p = 0.5;
  rates.alpha = 0.0;
  CHECK_THROWS_AS(rates.validate(), Error);
}
