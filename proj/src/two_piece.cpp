#include "minaffine/two_piece.hpp"

#include <cmath>
#include <limits>

#include "minaffine/error.hpp"

namespace minaffine {

Normalization normalize(const AffinePiece& l1, const AffinePiece& l2) {
  const MinAffineCost pair({l1, l2});
  const PairwiseReport check = validate_pairwise_A(pair);
  if (!check.passed)
    throw DegenerateError("degenerate cost: " + check.issues.front().describe());

  // Subtract l = a2 x + b1 y: l1 - l = A x + c1, l2 - l = B y + c2.
  const double A = l1.a - l2.a;
  const double B = l2.b - l1.b;
  Normalization n;
  n.lin_x = l2.a;
  n.lin_y = l1.b;
  n.alpha = std::abs(A);
  n.x_sign = A > 0.0 ? 1.0 : -1.0;
  n.x_shift = l1.c0 / n.alpha;
  const double b0 = B / n.alpha;
  if (b0 > 0.0) {
    n.b = b0;
    n.y_sign = 1.0;
    n.y_shift = l2.c0 / B;
  } else {
    n.b = -b0;
    n.y_sign = -1.0;
    n.y_shift = -l2.c0 / B;
  }
  return n;
}

TwoPieceSolution solve_two_piece(const Measure1D& mu, const Measure1D& nu,
                                 const AffinePiece& l1, const AffinePiece& l2) {
  TwoPieceSolution sol;
  sol.normalization = normalize(l1, l2);
  const Normalization& n = sol.normalization;
  const double b = n.b;
  const Measure1D mu_n = mu.affine_image(n.x_sign, n.x_shift);
  const Measure1D nu_n = nu.affine_image(n.y_sign, n.y_shift);

  // g is continuous and non-decreasing; the smallest root is the infimum of
  // {g >= 0}.
  const auto g = [&](double s) { return mu_n.cdf(s) - (1.0 - nu_n.cdf(s / b)); };
  double lo = std::min(mu_n.support_lo(), b * nu_n.support_lo());
  double hi = std::max(mu_n.support_hi(), b * nu_n.support_hi());
  lo -= 1.0 + std::abs(lo);
  hi += 1.0 + std::abs(hi);
  const double g_lo = g(lo), g_hi = g(hi);
  if (!(g_lo < 0.0) || !(g_hi >= 0.0)) {
    throw SolverError("no root bracket for the split equation: g(lo) = " +
                      std::to_string(g_lo) + ", g(hi) = " + std::to_string(g_hi));
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) >= 0.0 ? hi : lo) = mid;
  }
  const double s = hi;
  sol.split = s;
  sol.b = b;
  sol.balance_residual = g(s);
  sol.anchor_normalized = {s, s / b};
  sol.anchor = {n.x_of(s), n.y_of(s / b)};

  const double p = mu_n.cdf(s);
  sol.low_mass = p;
  const double value_normalized =
      mu_n.partial_first_moment(-std::numeric_limits<double>::infinity(), s) +
      b * nu_n.partial_first_moment(-std::numeric_limits<double>::infinity(),
                                     s / b);
  sol.correction = n.correction(mu, nu);
  sol.value = n.alpha * value_normalized + sol.correction;

  sol.region = n.x_sign == n.y_sign
                   ? SupportRegion::anti_monotone(sol.anchor[0], sol.anchor[1])
                   : SupportRegion::comonotone(sol.anchor[0], sol.anchor[1]);

  // Cell 0: u < s with w > s/b (l1 active). Cell 1: the complement.
  // Both cells carry identical mass on the two axes by construction.
  sol.plan.dimension = 2;
  const double x_lo_0 = n.x_sign > 0 ? 0.0 : 1.0 - p;
  const double y_lo_0 = n.y_sign > 0 ? 1.0 - p : 0.0;
  const double x_lo_1 = n.x_sign > 0 ? p : 0.0;
  const double y_lo_1 = n.y_sign > 0 ? 0.0 : p;
  if (p > 0.0) sol.plan.cells.push_back({p, {x_lo_0, y_lo_0}, 0});
  if (p < 1.0) sol.plan.cells.push_back({1.0 - p, {x_lo_1, y_lo_1}, 1});
  return sol;
}

}  // namespace minaffine
