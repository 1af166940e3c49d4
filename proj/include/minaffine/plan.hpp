#pragma once

#include <functional>
#include <span>
#include <vector>

#include "minaffine/measure.hpp"

namespace minaffine {

using MarginalRefs = std::vector<std::reference_wrapper<const Measure1D>>;

/// One block of a transport plan. On axis k the block carries the slice of
/// marginal k between levels level_lo[k] and level_lo[k] + mass; inside the
/// block all axes are coupled comonotonically in block-local quantile.
struct PlanCell {
  double mass = 0.0;
  std::vector<double> level_lo;
  /// Active affine piece for two-marginal plans, designated low coordinate
  /// for min-coordinate plans. Zero-based.
  int label = 0;

  /// Closure of the slice on the given axis: [q(level_lo), q(level_lo + mass)].
  std::pair<double, double> interval(std::size_t axis, const Measure1D& m) const;
};

struct TransportPlan {
  std::size_t dimension = 2;
  std::vector<PlanCell> cells;
};

struct WeightedPoint {
  std::vector<double> x;
  double weight;
  int cell;
};

/// Deterministic support sample: each cell gets max(1, round(count * mass))
/// points at mid-levels of its slices, weights proportional to mass.
std::vector<WeightedPoint> sample_plan(const TransportPlan& plan,
                                       const MarginalRefs& marginals,
                                       int count);

/// Largest |plan pushforward - marginal| over `grid` equal intervals spanning
/// each marginal's support, maximized over axes.
double marginal_reconstruction_error(const TransportPlan& plan,
                                     const MarginalRefs& marginals,
                                     int grid = 64);

}  // namespace minaffine
