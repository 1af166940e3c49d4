#pragma once

#include <span>
#include <vector>

#include "minaffine/measure.hpp"
#include "minaffine/plan.hpp"

namespace minaffine {

/// m >= 2 atomless marginals with cost min(x_1, ..., x_m).
struct MultiMarginalProblem {
  std::vector<Measure1D> marginals;

  MarginalRefs refs() const;
};

struct MultiMarginalSolution {
  /// s = sup{x : sum_i mu_i(-inf, x] <= 1}
  double threshold = 0.0;
  /// p_i = mu_i(-inf, s], normalized to sum to exactly 1.
  std::vector<double> low_mass;
  double value = 0.0;
  /// Block i has mass p_i; label i is its designated low coordinate.
  TransportPlan plan;
};

/// Throws InputError for fewer than two marginals.
double compute_s(const MultiMarginalProblem& problem);

MultiMarginalSolution solve_min_coordinates(const MultiMarginalProblem& problem);

struct SupportConditionReport {
  bool passed = true;
  std::size_t checked = 0;
  /// Points with a coordinate <= s whose other coordinates are not all >= s.
  std::vector<std::size_t> low_violators;
  /// Points with a coordinate >= s and no other coordinate <= s.
  std::vector<std::size_t> high_violators;
};

SupportConditionReport verify_support_conditions(
    std::span<const std::vector<double>> points, double s, double tol = 1e-9);

}  // namespace minaffine
