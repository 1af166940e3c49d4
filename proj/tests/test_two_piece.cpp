#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "minaffine/error.hpp"
#include "minaffine/oracle.hpp"
#include "minaffine/partition.hpp"
#include "minaffine/two_piece.hpp"
#include "oracles.hpp"

using namespace minaffine;

namespace {

Measure1D u01() { return build_measure(gen::uniform01()); }

double normalized_form(const Normalization& n, double x, double y) {
  return n.alpha * std::min(n.u(x), n.b * n.w(y)) + n.lin_x * x + n.lin_y * y;
}

AffinePiece random_piece(gen::Rng& rng) {
  return {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)};
}

}  // namespace

TEST_SUITE("two_piece") {

TEST_CASE("normalize: already in normal form") {
  auto n = normalize({1, 0, 0}, {0, 1, 0});
  CHECK(n.b == 1.0);
  CHECK(n.alpha == 1.0);
  CHECK(n.lin_x == 0.0);
  CHECK(n.lin_y == 0.0);

  n = normalize({1, 0, 0}, {0, 2, 0});
  CHECK(n.b == 2.0);
  CHECK(n.lin_x == 0.0);
  CHECK(n.lin_y == 0.0);
}

TEST_CASE("normalize: x+y against 2x-y") {
  const AffinePiece l1{1, 1, 0}, l2{2, -1, 0};
  const auto n = normalize(l1, l2);
  // subtracting 2x + y leaves -x and -2y, so x is reflected
  CHECK(n.alpha > 0);
  CHECK(n.x_sign == -1.0);
  CHECK(n.lin_x == doctest::Approx(2.0));
  CHECK(n.lin_y == doctest::Approx(1.0));
  gen::Rng rng(31);
  for (int i = 0; i < 5; ++i) {
    const double x = rng.uniform(-5, 5), y = rng.uniform(-5, 5);
    CHECK(normalized_form(n, x, y) ==
          doctest::Approx(std::min(l1(x, y), l2(x, y))).epsilon(1e-13));
  }
}

TEST_CASE("normalize rejects degenerate pairs") {
  CHECK_THROWS_AS(normalize({1, 0, 0}, {1, 1, 0}), DegenerateError);
  CHECK_THROWS_AS(normalize({1, 1, 0}, {1, 1, 2}), DegenerateError);
}

TEST_CASE("min(x,y) on uniforms") {
  const auto mu = u01(), nu = u01();
  const auto sol = solve_two_piece(mu, nu, {1, 0, 0}, {0, 1, 0});
  CHECK(std::abs(sol.split - 0.5) <= 1e-9);
  CHECK(std::abs(sol.value - 0.25) <= 1e-9);
  // closed form: int_0^1/2 x dx + int_0^1/2 y dy
  const double closed = 2 * oracle_ref::simpson([](double x) { return x; }, 0, 0.5);
  CHECK(sol.value == doctest::Approx(closed).epsilon(1e-12));
  CHECK(sol.region.is_anti_monotone());
  CHECK(sol.anchor[0] == doctest::Approx(0.5));
  CHECK(sol.anchor[1] == doctest::Approx(0.5));

  const auto a = discretize(mu, 200), b = discretize(nu, 200);
  const auto lp = solve_discrete_ot(DiscreteProblem::two_marginal(a, b, MinAffineCost({{1, 0, 0}, {0, 1, 0}})));
  CHECK(std::abs(lp.value - sol.value) <= 3e-3);
}

TEST_CASE("min(x,2y) on uniforms") {
  const auto mu = u01(), nu = u01();
  const auto sol = solve_two_piece(mu, nu, {1, 0, 0}, {0, 2, 0});
  // s = 1 - s/2
  CHECK(std::abs(sol.split - 2.0 / 3.0) <= 1e-9);
  // 2/9 + 1/9
  CHECK(std::abs(sol.value - 1.0 / 3.0) <= 1e-9);
  const auto lp = solve_discrete_ot(DiscreteProblem::two_marginal(
      discretize(mu, 200), discretize(nu, 200), MinAffineCost({{1, 0, 0}, {0, 2, 0}})));
  CHECK(std::abs(lp.value - sol.value) <= 3e-3);
}

TEST_CASE("min(x, x+y) is degenerate") {
  CHECK_THROWS_AS(solve_two_piece(u01(), u01(), {1, 0, 0}, {1, 1, 0}), DegenerateError);
}

TEST_CASE("negative b is handled by reflection") {
  // min(x, -y): comonotone region
  const auto mu = u01(), nu = u01();
  const auto sol = solve_two_piece(mu, nu, {1, 0, 0}, {0, -1, 0});
  CHECK_FALSE(sol.region.is_anti_monotone());
  const std::vector<AffinePiece> pieces{{1, 0, 0}, {0, -1, 0}};
  const auto c = [&](double x, double y) { return oracle_ref::min_affine(pieces, x, y); };
  const auto id = [](double p) { return p; };
  const double co = oracle_ref::coupling_cost(id, id, c, false);
  CHECK(sol.value <= co + 1e-9);
  const auto lp = solve_discrete_ot(DiscreteProblem::two_marginal(
      discretize(mu, 200), discretize(nu, 200), MinAffineCost(pieces)));
  CHECK(std::abs(lp.value - sol.value) <= 3e-3);
}

// Properties

TEST_CASE("property: balance, plan cost, region and couplings") {
  gen::Rng rng(32);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto mu = gen::random_measure(rng), nu = gen::random_measure(rng);
    const AffinePiece l1 = random_piece(rng), l2 = random_piece(rng);
    const MinAffineCost cost({l1, l2});
    if (!validate_pairwise_A(cost).passed) continue;
    TwoPieceSolution sol;
    try {
      sol = solve_two_piece(mu, nu, l1, l2);
    } catch (const SolverError&) {
      continue;  // split outside the supports
    }
    ++solved;
    CHECK(std::abs(sol.balance_residual) <= 1e-12);
    CHECK(sol.normalization.alpha > 0);
    CHECK(sol.b > 0);
    CHECK(l1(sol.anchor[0], sol.anchor[1]) ==
          doctest::Approx(l2(sol.anchor[0], sol.anchor[1])).epsilon(1e-9));

    const MarginalRefs refs{mu, nu};
    CHECK(marginal_reconstruction_error(sol.plan, refs) <= 1e-9);
    CHECK(plan_cost(sol.plan, cost, mu, nu) ==
          doctest::Approx(sol.value).epsilon(1e-10));

    const auto pts = sample_plan(sol.plan, refs, 300);
    std::vector<std::array<double, 2>> xy;
    for (const auto& p : pts) {
      const double scale = 1e-9 * (1 + std::abs(p.x[0]) + std::abs(p.x[1]));
      CHECK(region_membership(sol.region, p.x, scale));
      xy.push_back({p.x[0], p.x[1]});
    }
    CHECK(cyclic_monotonicity_check(xy, cost, 2).passed);

    const auto c = [&](double x, double y) { return cost(x, y); };
    const auto qx = [&](double p) { return mu.quantile(p); };
    const auto qy = [&](double p) { return nu.quantile(p); };
    const double slack = 1e-6 * (1 + std::abs(sol.value));
    CHECK(sol.value <= oracle_ref::coupling_cost(qx, qy, c, false, 20000) + slack);
    CHECK(sol.value <= oracle_ref::coupling_cost(qx, qy, c, true, 20000) + slack);
  }
  CHECK(solved >= 20);
}

TEST_CASE("property: the excluded two-point configuration never occurs") {
  // max(x1, b y1) < min(x2, b y2) in normalized coordinates is never cyclically
  // monotone; the plan must avoid it
  gen::Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = gen::random_measure(rng), nu = gen::random_measure(rng);
    const double b = rng.uniform(0.3, 3);
    const AffinePiece l1{1, 0, 0}, l2{0, b, 0};
    TwoPieceSolution sol;
    try {
      sol = solve_two_piece(mu, nu, l1, l2);
    } catch (const SolverError&) {
      continue;
    }
    const auto pts = sample_plan(sol.plan, {mu, nu}, 200);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const double lo = std::max(pts[i].x[0], b * pts[i].x[1]);
        const double hi = std::min(pts[j].x[0], b * pts[j].x[1]);
        REQUIRE_FALSE(lo < hi - 1e-9);
      }
    }
  }
}

}  // TEST_SUITE
