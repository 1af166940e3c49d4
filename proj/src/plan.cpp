#include "minaffine/plan.hpp"

#include <algorithm>
#include <cmath>

#include "minaffine/error.hpp"

namespace minaffine {

std::pair<double, double> PlanCell::interval(std::size_t axis,
                                             const Measure1D& m) const {
  const double lo = level_lo.at(axis);
  return {m.quantile(lo), m.quantile(std::min(1.0, lo + mass))};
}

std::vector<WeightedPoint> sample_plan(const TransportPlan& plan,
                                       const MarginalRefs& marginals,
                                       int count) {
  if (marginals.size() != plan.dimension)
    throw InputError("plan dimension does not match marginal count");
  if (count < 1) throw InputError("sample count must be positive");
  std::vector<WeightedPoint> out;
  for (std::size_t c = 0; c < plan.cells.size(); ++c) {
    const PlanCell& cell = plan.cells[c];
    if (!(cell.mass > 0.0)) continue;
    const long n = std::max(1L, std::lround(count * cell.mass));
    for (long k = 0; k < n; ++k) {
      const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      WeightedPoint p{std::vector<double>(plan.dimension),
                      cell.mass / static_cast<double>(n), static_cast<int>(c)};
      for (std::size_t a = 0; a < plan.dimension; ++a)
        p.x[a] = marginals[a].get().quantile(cell.level_lo[a] + q * cell.mass);
      out.push_back(std::move(p));
    }
  }
  return out;
}

double marginal_reconstruction_error(const TransportPlan& plan,
                                     const MarginalRefs& marginals, int grid) {
  if (marginals.size() != plan.dimension)
    throw InputError("plan dimension does not match marginal count");
  double worst = 0.0;
  for (std::size_t a = 0; a < plan.dimension; ++a) {
    const Measure1D& m = marginals[a].get();
    const double lo = m.support_lo();
    const double width = m.support_width();
    for (int g = 0; g < grid; ++g) {
      const double x0 = lo + width * g / grid;
      const double x1 = g + 1 == grid ? m.support_hi() : lo + width * (g + 1) / grid;
      const double F0 = g == 0 ? 0.0 : m.cdf(x0);
      const double F1 = g + 1 == grid ? 1.0 : m.cdf(x1);
      double pushed = 0.0;
      for (const PlanCell& cell : plan.cells) {
        const double s0 = cell.level_lo[a];
        const double s1 = s0 + cell.mass;
        pushed += std::max(0.0, std::min(F1, s1) - std::max(F0, s0));
      }
      worst = std::max(worst, std::abs(pushed - (F1 - F0)));
    }
  }
  return worst;
}

}  // namespace minaffine
