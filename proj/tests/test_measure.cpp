#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "minaffine/error.hpp"
#include "minaffine/measure.hpp"
#include "oracles.hpp"

using namespace minaffine;

namespace {

Measure1D uniform(double a, double b) { return build_measure({spec::Uniform{a, b}}); }

// Standard normal quantile by bisection on erfc; no shared code with the library.
double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("measure") {

TEST_CASE("uniform(0,1) compiles to the identity CDF") {
  const auto m = uniform(0, 1);
  REQUIRE(m.knots().size() == 2);
  CHECK(m.knots()[0].x == 0.0);
  CHECK(m.knots()[0].F == 0.0);
  CHECK(m.knots()[1].x == 1.0);
  CHECK(m.knots()[1].F == 1.0);
}

TEST_CASE("piecewise density 2 on [0,0.5]") {
  const auto m = build_measure({spec::PiecewiseDensity{{0.0, 0.5}, {2.0}}});
  // hand integration: F(x) = 2x on [0, 0.5]
  CHECK(m.cdf(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.cdf(0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.support_hi() == 0.5);
  CHECK(m.quantile(0.5) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("unnormalized density is rescaled") {
  const auto m = build_measure({spec::PiecewiseDensity{{0.0, 1.0, 3.0}, {3.0, 1.5}}});
  // masses 3 and 3 before normalization
  CHECK(m.cdf(1.0) == doctest::Approx(0.5));
  CHECK(m.mass(-10, 10) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gaussian(0,1) truncated at 1e-9") {
  const auto m = build_measure({spec::Gaussian{0.0, 1.0}, 1e-9});
  const double q = normal_quantile(1e-9);
  CHECK(q == doctest::Approx(-5.9978).epsilon(1e-4));
  CHECK(m.support_lo() == doctest::Approx(q).epsilon(1e-9));
  CHECK(m.support_hi() == doctest::Approx(-q).epsilon(1e-9));
  CHECK(m.mass(-100, 100) == 1.0);
  CHECK(m.cdf(m.support_hi()) == 1.0);
  CHECK(std::abs(m.mean()) < 1e-9);
  // the piecewise-linear CDF tracks the normal CDF closely
  for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    CHECK(std::abs(m.cdf(x) - 0.5 * std::erfc(-x / std::sqrt(2.0))) < 1e-5);
  }
}

TEST_CASE("gaussian truncation must be positive and small") {
  CHECK_THROWS_AS(build_measure({spec::Gaussian{0, 1}, 0.0}), InputError);
  CHECK_THROWS_AS(build_measure({spec::Gaussian{0, 1}, 1e-3}), InputError);
  CHECK_THROWS_AS(build_measure({spec::Gaussian{0, 0}}), InputError);
}

TEST_CASE("triangular mean and mode") {
  const auto m = build_measure({spec::Triangular{0.0, 1.0, 3.0}});
  CHECK(m.mean() == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
  CHECK(m.cdf(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("empirical samples interpolate order statistics") {
  const auto m = build_measure({spec::Empirical{{3.0, 1.0, 2.0}}});
  CHECK(m.support_lo() == 1.0);
  CHECK(m.support_hi() == 3.0);
  CHECK(m.cdf(2.0) == doctest::Approx(0.5));
  CHECK(m.quantile(0.25) == doctest::Approx(1.5));
}

TEST_CASE("empirical needs two distinct samples") {
  CHECK_THROWS_AS(build_measure({spec::Empirical{{1.0, 1.0, 1.0}}}), InputError);
  CHECK_THROWS_AS(build_measure({spec::Empirical{{1.0}}}), InputError);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(uniform(1, 1), InputError);
  CHECK_THROWS_AS(build_measure({spec::PiecewiseDensity{{0, 1}, {0.0}}}), InputError);
  CHECK_THROWS_AS(build_measure({spec::PiecewiseDensity{{0, 1}, {-1.0}}}), InputError);
  CHECK_THROWS_AS(build_measure({spec::PiecewiseDensity{{0, 1, 1}, {1, 1}}}), InputError);
  CHECK_THROWS_AS(Measure1D({{0, 0}, {0, 1}}), InputError);  // atom
  CHECK_THROWS_AS(Measure1D({{0, 0}, {1, 0.5}}), InputError);
}

TEST_CASE("read_samples skips blank lines and reports bad ones") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto good = dir / "minaffine_samples_good.txt";
  const auto bad = dir / "minaffine_samples_bad.txt";
  std::ofstream(good) << "0.5\n\n1.5\n  2.5  \n";
  std::ofstream(bad) << "0.5\nabc\n";
  CHECK(read_samples(good) == std::vector<double>{0.5, 1.5, 2.5});
  CHECK_THROWS_AS(read_samples(bad), InputError);
  CHECK_THROWS_AS(read_samples(dir / "minaffine_no_such_file.txt"), InputError);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST_CASE("cdf examples") {
  CHECK(uniform(0, 1).cdf(0.5) == 0.5);
  CHECK(uniform(0, 1).cdf(-1) == 0.0);
  CHECK(uniform(0, 1).cdf(7) == 1.0);
  CHECK(uniform(0, 2).cdf(2.0 / 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("quantile examples") {
  CHECK(uniform(0, 1).quantile(0.25) == 0.25);
  CHECK(uniform(0, 2).quantile(0.5) == 1.0);
  CHECK(uniform(0, 2).quantile(0.0) == 0.0);
  CHECK(uniform(0, 2).quantile(1.0) == 2.0);
}

TEST_CASE("quantile is the least x on flat stretches") {
  const auto m = build_measure({spec::PiecewiseDensity{{0, 1, 2, 3}, {1, 0, 1}}});
  CHECK(m.quantile(0.5) == doctest::Approx(1.0));
  CHECK(m.cdf(1.5) == doctest::Approx(0.5));
}

TEST_CASE("partial first moment examples") {
  const auto m = uniform(0, 1);
  const double quad = oracle_ref::simpson([](double x) { return x; }, 0.0, 0.5);
  CHECK(m.partial_first_moment(0, 0.5) == doctest::Approx(quad).epsilon(1e-14));
  CHECK(m.partial_first_moment(0, 0.5) == doctest::Approx(0.125).epsilon(1e-15));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(m.partial_first_moment(-inf, inf) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.partial_first_moment(0.3, 0.3) == 0.0);
  CHECK(m.partial_first_moment(0.7, 0.3) == 0.0);
}

TEST_CASE("partial moment of a two-slope density matches quadrature") {
  const auto m = build_measure({spec::PiecewiseDensity{{-1, 0.5, 2}, {0.2, 0.4}}});
  // normalize by hand: total = 0.3 + 0.6
  const double quad_a = oracle_ref::simpson([](double x) { return x * 0.2 / 0.9; }, -0.5, 0.5);
  const double quad_b = oracle_ref::simpson([](double x) { return x * 0.4 / 0.9; }, 0.5, 1.7);
  CHECK(m.partial_first_moment(-0.5, 1.7) == doctest::Approx(quad_a + quad_b).epsilon(1e-12));
}

TEST_CASE("moment between levels") {
  const auto m = uniform(0, 2);
  // density 1/2: int_0^1 x/2 dx and int_1^2 x/2 dx
  CHECK(m.moment_between_levels(0.0, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.moment_between_levels(0.5, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("discretize examples") {
  auto a = discretize(uniform(0, 1), 2);
  REQUIRE(a.size() == 2);
  CHECK(a[0].position == 0.25);
  CHECK(a[1].position == 0.75);
  CHECK(a[0].weight == 0.5);
  CHECK(a[1].weight == 0.5);

  a = discretize(uniform(0, 1), 4);
  const double want[] = {0.125, 0.375, 0.625, 0.875};
  for (int i = 0; i < 4; ++i) CHECK(a[i].position == doctest::Approx(want[i]).epsilon(1e-15));

  a = discretize(uniform(0, 2), 2);
  CHECK(a[0].position == 0.5);
  CHECK(a[1].position == 1.5);

  CHECK_THROWS_AS(discretize(uniform(0, 1), 0), InputError);
}

TEST_CASE("affine image reflects and shifts") {
  const auto m = build_measure({spec::PiecewiseDensity{{0, 1, 3}, {1, 1}}});
  const auto r = m.affine_image(-2.0, 1.0);
  CHECK(r.support_lo() == doctest::Approx(-5.0));
  CHECK(r.support_hi() == doctest::Approx(1.0));
  CHECK(r.mean() == doctest::Approx(-2.0 * m.mean() + 1.0));
  CHECK(r.cdf(-1.0) == doctest::Approx(1.0 - m.cdf(1.0)));
}

// Properties

TEST_CASE("property: cdf is monotone") {
  gen::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = gen::random_measure(rng);
    double x1 = rng.uniform(m.support_lo() - 1, m.support_hi() + 1);
    double x2 = rng.uniform(m.support_lo() - 1, m.support_hi() + 1);
    if (x1 > x2) std::swap(x1, x2);
    CHECK(m.cdf(x1) <= m.cdf(x2));
    CHECK(m.cdf(x1) >= 0.0);
    CHECK(m.cdf(x2) <= 1.0);
  }
}

TEST_CASE("property: cdf(quantile(p)) = p") {
  gen::Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = gen::random_measure(rng);
    const double p = rng.uniform(1e-6, 1 - 1e-6);
    CHECK(std::abs(m.cdf(m.quantile(p)) - p) <= 1e-12);
  }
}

TEST_CASE("property: quantile(cdf(x)) = x on the interior") {
  gen::Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = gen::random_measure(rng);
    const double x = rng.uniform(m.support_lo(), m.support_hi());
    CHECK(std::abs(m.quantile(m.cdf(x)) - x) <= 1e-12 * (1 + std::abs(x)));
  }
}

TEST_CASE("property: partial moments are additive") {
  gen::Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = gen::random_measure(rng);
    double p[3];
    for (auto& v : p) v = rng.uniform(m.support_lo() - 0.5, m.support_hi() + 0.5);
    std::sort(p, p + 3);
    const double split = m.partial_first_moment(p[0], p[1]) + m.partial_first_moment(p[1], p[2]);
    CHECK(std::abs(split - m.partial_first_moment(p[0], p[2])) <= 1e-12);
  }
}

TEST_CASE("property: discretized weights sum to 1, mean converges") {
  gen::Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-3, 3);
    const double b = a + rng.uniform(0.1, 4);
    const auto m = uniform(a, b);
    const int count = rng.integer(1, 500);
    const auto atoms = discretize(m, count);
    double total = 0.0, mean = 0.0;
    for (const auto& at : atoms) {
      total += at.weight;
      mean += at.weight * at.position;
    }
    CHECK(total == 1.0);
    CHECK(std::abs(mean - m.mean()) <= (b - a) / count);
  }
}

}  // TEST_SUITE
