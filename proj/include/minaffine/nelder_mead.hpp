#pragma once

#include <functional>
#include <span>
#include <vector>

namespace minaffine {

struct NelderMeadOptions {
  double initial_step = 0.1;
  /// Stop when the simplex diameter (inf-norm) falls below x_tol and the
  /// spread of vertex values below f_tol.
  double x_tol = 1e-13;
  double f_tol = 1e-15;
  int max_evaluations = 4000;
  /// Rebuild the simplex around the best vertex after convergence, up to
  /// this many times, while that keeps improving the value.
  int restarts = 3;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained simplex-reflection minimizer (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2).
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             const NelderMeadOptions& options = {});

}  // namespace minaffine
