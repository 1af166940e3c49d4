#include <doctest.h>

#include <cmath>
#include <numeric>

#include "generators.hpp"
#include "minaffine/error.hpp"
#include "minaffine/multimarginal.hpp"
#include "minaffine/oracle.hpp"
#include "minaffine/two_piece.hpp"
#include "oracles.hpp"

using namespace minaffine;

namespace {

MultiMarginalProblem uniforms(int m) {
  MultiMarginalProblem p;
  for (int i = 0; i < m; ++i) p.marginals.push_back(build_measure(gen::uniform01()));
  return p;
}

std::vector<std::vector<double>> support(const MultiMarginalSolution& sol,
                                         const MultiMarginalProblem& p, int count) {
  std::vector<std::vector<double>> pts;
  for (auto& w : sample_plan(sol.plan, p.refs(), count)) pts.push_back(w.x);
  return pts;
}

}  // namespace

TEST_SUITE("multimarginal") {

TEST_CASE("compute_s examples") {
  CHECK(compute_s(uniforms(2)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(compute_s(uniforms(3)) - 1.0 / 3.0) <= 1e-12);

  MultiMarginalProblem p;
  p.marginals.push_back(build_measure({spec::Uniform{0, 1}}));
  p.marginals.push_back(build_measure({spec::Uniform{0, 2}}));
  // x + x/2 = 1
  CHECK(std::abs(compute_s(p) - 2.0 / 3.0) <= 1e-12);

  CHECK_THROWS_AS(compute_s(uniforms(1)), InputError);
}

TEST_CASE("m=2 matches the two-piece solver on min(x,y)") {
  const auto p = uniforms(2);
  const auto sol = solve_min_coordinates(p);
  CHECK(std::abs(sol.value - 0.25) <= 1e-9);
  const auto two = solve_two_piece(p.marginals[0], p.marginals[1], {1, 0, 0}, {0, 1, 0});
  CHECK(std::abs(sol.value - two.value) <= 1e-9);
}

TEST_CASE("m=3 uniforms") {
  const auto p = uniforms(3);
  const auto sol = solve_min_coordinates(p);
  // 3 * int_0^{1/3} x dx
  const double closed = 3 * oracle_ref::simpson([](double x) { return x; }, 0, 1.0 / 3.0);
  CHECK(std::abs(sol.value - 1.0 / 6.0) <= 1e-9);
  CHECK(sol.value == doctest::Approx(closed).epsilon(1e-12));
  for (double q : sol.low_mass) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  std::vector<std::vector<Atom>> atoms(3, discretize(p.marginals[0], 9));
  const auto lp = solve_discrete_mmot(DiscreteProblem::min_coordinates(atoms));
  CHECK(std::abs(lp.value - 1.0 / 6.0) <= 0.04);
}

TEST_CASE("narrow far marginal: everything is designated to the first") {
  MultiMarginalProblem p;
  p.marginals.push_back(build_measure({spec::Uniform{0, 1}}));
  p.marginals.push_back(build_measure({spec::Uniform{10, 10.001}}));
  const auto sol = solve_min_coordinates(p);
  // sum F_i stays at 1 on [1, 10]; the supremum is the right end
  CHECK(sol.threshold == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(sol.low_mass[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(sol.low_mass[1]) <= 1e-12);
  CHECK(sol.value == doctest::Approx(0.5).epsilon(1e-12));

  const auto lp = solve_discrete_ot(DiscreteProblem::two_marginal(
      discretize(p.marginals[0], 50), discretize(p.marginals[1], 50),
      MinAffineCost({{1, 0, 0}, {0, 1, 0}})));
  CHECK(lp.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(verify_support_conditions(support(sol, p, 500), sol.threshold).passed);
}

TEST_CASE("support condition examples") {
  auto check = [](std::vector<double> pt) {
    std::vector<std::vector<double>> pts{std::move(pt)};
    return verify_support_conditions(pts, 0.5);
  };
  CHECK(check({0.2, 0.7}).passed);
  const auto low = check({0.2, 0.3});
  CHECK_FALSE(low.passed);
  CHECK(low.low_violators == std::vector<std::size_t>{0});
  const auto high = check({0.7, 0.9});
  CHECK_FALSE(high.passed);
  CHECK(high.high_violators == std::vector<std::size_t>{0});
  CHECK(high.low_violators.empty());
  CHECK(check({0.5, 0.5}).passed);
}

// Properties

TEST_CASE("property: low masses sum to 1, plan checks out") {
  gen::Rng rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    MultiMarginalProblem p;
    const int m = rng.integer(2, 5);
    for (int i = 0; i < m; ++i) p.marginals.push_back(gen::random_measure(rng));
    const auto sol = solve_min_coordinates(p);
    const double total = std::accumulate(sol.low_mass.begin(), sol.low_mass.end(), 0.0);
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(marginal_reconstruction_error(sol.plan, p.refs()) <= 1e-9);
    const auto pts = support(sol, p, 1000);
    const auto rep = verify_support_conditions(pts, sol.threshold);
    CHECK(rep.passed);
    CHECK(rep.checked == pts.size());
    // value = sum of partial moments below s
    double v = 0;
    for (const auto& mu : p.marginals) v += mu.partial_first_moment(-1e300, sol.threshold);
    CHECK(sol.value == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("property: more mass below x cannot raise s") {
  gen::Rng rng(52);
  for (int trial = 0; trial < 50; ++trial) {
    MultiMarginalProblem p;
    const int m = rng.integer(2, 4);
    for (int i = 0; i < m; ++i) p.marginals.push_back(gen::random_measure(rng));
    const double s = compute_s(p);
    // squeezing marginal 0 towards its lower end raises its CDF pointwise
    auto q = p;
    const auto& m0 = p.marginals[0];
    const double lo = m0.support_lo();
    const double f = rng.uniform(0.2, 0.9);
    q.marginals[0] = m0.affine_image(f, lo * (1 - f));
    CHECK(compute_s(q) <= s + 1e-12);
  }
}

TEST_CASE("property: m=2 agrees with the two-piece solver on random marginals") {
  gen::Rng rng(53);
  for (int trial = 0; trial < 40; ++trial) {
    MultiMarginalProblem p;
    p.marginals.push_back(gen::random_measure(rng));
    p.marginals.push_back(gen::random_measure(rng));
    TwoPieceSolution two;
    try {
      two = solve_two_piece(p.marginals[0], p.marginals[1], {1, 0, 0}, {0, 1, 0});
    } catch (const SolverError&) {
      continue;
    }
    CHECK(solve_min_coordinates(p).value == doctest::Approx(two.value).epsilon(1e-9));
  }
}

}  // TEST_SUITE
