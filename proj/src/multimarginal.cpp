#include "minaffine/multimarginal.hpp"

#include <algorithm>
#include <limits>

#include "minaffine/error.hpp"

namespace minaffine {

MarginalRefs MultiMarginalProblem::refs() const {
  MarginalRefs out;
  for (const auto& m : marginals) out.push_back(std::cref(m));
  return out;
}

double compute_s(const MultiMarginalProblem& problem) {
  const auto& ms = problem.marginals;
  if (ms.size() < 2) throw InputError("the min-coordinate problem needs m >= 2 marginals");
  const auto G = [&](double x) {
    double sum = -1.0;
    for (const auto& m : ms) sum += m.cdf(x);
    return sum;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& m : ms) {
    lo = std::min(lo, m.support_lo());
    hi = std::max(hi, m.support_hi());
  }
  // G(lo) = -1 <= 0 and G(hi) = m - 1 > 0; keep that bracket and return the
  // last point where G <= 0, i.e. the right end of any flat stretch.
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (G(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

MultiMarginalSolution solve_min_coordinates(const MultiMarginalProblem& problem) {
  MultiMarginalSolution sol;
  sol.threshold = compute_s(problem);
  const std::size_t m = problem.marginals.size();
  double total = 0.0;
  for (const auto& mu : problem.marginals) {
    sol.low_mass.push_back(mu.cdf(sol.threshold));
    total += sol.low_mass.back();
  }
  if (!(total > 0.0)) throw SolverError("threshold carries no mass");
  for (double& p : sol.low_mass) p /= total;

  sol.plan.dimension = m;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = sol.low_mass[i];
    sol.value += problem.marginals[i].moment_between_levels(0.0, p);
    if (!(p > 0.0)) continue;
    PlanCell cell;
    cell.mass = p;
    cell.label = static_cast<int>(i);
    cell.level_lo.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) {
        cell.level_lo[j] = 0.0;
        continue;
      }
      // Slices of mu_j above s, handed out to blocks in index order.
      double start = sol.low_mass[j];
      for (std::size_t k = 0; k < i; ++k)
        if (k != j) start += sol.low_mass[k];
      cell.level_lo[j] = start;
    }
    sol.plan.cells.push_back(std::move(cell));
  }
  return sol;
}

SupportConditionReport verify_support_conditions(
    std::span<const std::vector<double>> points, double s, double tol) {
  SupportConditionReport out;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& x = points[p];
    ++out.checked;
    bool low_ok = true, high_ok = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] <= s - tol) {
        for (std::size_t j = 0; j < x.size(); ++j)
          if (j != i && x[j] < s - tol) low_ok = false;
      }
      if (x[i] >= s + tol) {
        bool some_low = false;
        for (std::size_t j = 0; j < x.size(); ++j)
          if (j != i && x[j] <= s + tol) some_low = true;
        if (!some_low) high_ok = false;
      }
    }
    if (!low_ok) out.low_violators.push_back(p);
    if (!high_ok) out.high_violators.push_back(p);
  }
  out.passed = out.low_violators.empty() && out.high_violators.empty();
  return out;
}

}  // namespace minaffine
