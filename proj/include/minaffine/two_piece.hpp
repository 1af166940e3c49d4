#pragma once

#include <array>

#include "minaffine/cost.hpp"
#include "minaffine/measure.hpp"
#include "minaffine/plan.hpp"

namespace minaffine {

/// Affine change of variables bringing min(l1, l2) to the form
///
///   min(l1, l2)(x, y) = alpha * min(u, b * w) + lin_x * x + lin_y * y
///
/// with u = x_sign * x + x_shift, w = y_sign * y + y_shift, alpha > 0, b > 0.
/// The plane lin_x * x + lin_y * y integrates to the same value under every
/// coupling, so it only contributes a plan-independent correction.
struct Normalization {
  double alpha = 1.0;
  double b = 1.0;
  double x_sign = 1.0, x_shift = 0.0;
  double y_sign = 1.0, y_shift = 0.0;
  double lin_x = 0.0, lin_y = 0.0;

  double u(double x) const { return x_sign * x + x_shift; }
  double w(double y) const { return y_sign * y + y_shift; }
  double x_of(double u) const { return x_sign * (u - x_shift); }
  double y_of(double w) const { return y_sign * (w - y_shift); }
  double correction(const Measure1D& mu, const Measure1D& nu) const {
    return lin_x * mu.mean() + lin_y * nu.mean();
  }
};

/// Throws DegenerateError if the pair violates the non-degeneracy condition.
Normalization normalize(const AffinePiece& l1, const AffinePiece& l2);

struct TwoPieceSolution {
  /// Split point s in normalized coordinates: mu'(-inf, s) = nu'(s/b, +inf).
  double split = 0.0;
  double b = 1.0;
  std::array<double, 2> anchor_normalized{};
  /// Pre-image of the anchor; lies on {l1 = l2}.
  std::array<double, 2> anchor{};
  double value = 0.0;
  double correction = 0.0;
  /// mu-mass of the cell where l1 is active.
  double low_mass = 0.0;
  /// g(s) = mu'(-inf, s) - nu'(s/b, +inf) at the returned s.
  double balance_residual = 0.0;
  SupportRegion region;
  Normalization normalization;
  TransportPlan plan;  // cell labels: 0 -> l1, 1 -> l2
};

/// Optimal plan and value for c = min(l1, l2). The plan couples each
/// quadrant of the support region comonotonically.
TwoPieceSolution solve_two_piece(const Measure1D& mu, const Measure1D& nu,
                                 const AffinePiece& l1, const AffinePiece& l2);

}  // namespace minaffine
