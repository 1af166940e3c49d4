#pragma once

// Data-parallel kernels. Every kernel has a plain serial reference that the
// tests compare against; the OpenMP variants must return identical results
// for any worker count.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "minaffine/cost.hpp"

namespace minaffine {

/// Worker count from MINAFFINE_WORKERS, falling back to 1.
int default_workers();

/// Runs body(i) for i in [0, n). With workers > 1 the iterations are
/// distributed dynamically over an OpenMP team; body must only write to
/// slots owned by index i.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

namespace kernels {

/// Row-major |xs| x |ys| matrix of c(x_i, y_j).
std::vector<double> cost_matrix_serial(std::span<const double> xs,
                                       std::span<const double> ys,
                                       const MinAffineCost& cost);
std::vector<double> cost_matrix_parallel(std::span<const double> xs,
                                         std::span<const double> ys,
                                         const MinAffineCost& cost, int workers);

struct PairViolation {
  /// max over i < j of c(P_i) + c(P_j) - c(x_i, y_j) - c(x_j, y_i);
  /// -inf when fewer than two points.
  double worst;
  std::size_t i, j;
  std::size_t tested;
};

/// Ties go to the lexicographically smallest (i, j).
PairViolation worst_pair_serial(std::span<const std::array<double, 2>> points,
                                const MinAffineCost& cost);
PairViolation worst_pair_parallel(std::span<const std::array<double, 2>> points,
                                  const MinAffineCost& cost, int workers);

}  // namespace kernels
}  // namespace minaffine
