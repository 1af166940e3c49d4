#include "minaffine/parallel.hpp"

#include <cstdlib>
#include <limits>
#include <string>

namespace minaffine {

int default_workers() {
  if (const char* env = std::getenv("MINAFFINE_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (...) {
    }
  }
  return 1;
}

namespace kernels {

std::vector<double> cost_matrix_serial(std::span<const double> xs,
                                       std::span<const double> ys,
                                       const MinAffineCost& cost) {
  std::vector<double> out(xs.size() * ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      out[i * ys.size() + j] = cost(xs[i], ys[j]);
  return out;
}

std::vector<double> cost_matrix_parallel(std::span<const double> xs,
                                         std::span<const double> ys,
                                         const MinAffineCost& cost,
                                         int workers) {
  std::vector<double> out(xs.size() * ys.size());
  const long rows = static_cast<long>(xs.size());
  const std::size_t cols = ys.size();
#pragma omp parallel for schedule(static) num_threads(workers)
  for (long i = 0; i < rows; ++i) {
    double* row = out.data() + static_cast<std::size_t>(i) * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] = cost(xs[i], ys[j]);
  }
  return out;
}

namespace {

struct RowBest {
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t j = 0;
};

RowBest scan_row(std::span<const std::array<double, 2>> p,
                 std::span<const double> diag, const MinAffineCost& cost,
                 std::size_t i) {
  RowBest best;
  for (std::size_t j = i + 1; j < p.size(); ++j) {
    const double v = diag[i] + diag[j] - cost(p[i][0], p[j][1]) -
                     cost(p[j][0], p[i][1]);
    if (v > best.worst) best = {v, j};
  }
  return best;
}

std::vector<double> diagonal(std::span<const std::array<double, 2>> p,
                             const MinAffineCost& cost) {
  std::vector<double> d(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) d[i] = cost(p[i][0], p[i][1]);
  return d;
}

PairViolation reduce_rows(const std::vector<RowBest>& rows, std::size_t n) {
  PairViolation out{-std::numeric_limits<double>::infinity(), 0, 0,
                    n < 2 ? 0 : n * (n - 1) / 2};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].worst > out.worst) {
      out.worst = rows[i].worst;
      out.i = i;
      out.j = rows[i].j;
    }
  }
  return out;
}

}  // namespace

PairViolation worst_pair_serial(std::span<const std::array<double, 2>> points,
                                const MinAffineCost& cost) {
  const auto diag = diagonal(points, cost);
  std::vector<RowBest> rows(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    rows[i] = scan_row(points, diag, cost, i);
  return reduce_rows(rows, points.size());
}

PairViolation worst_pair_parallel(std::span<const std::array<double, 2>> points,
                                  const MinAffineCost& cost, int workers) {
  const auto diag = diagonal(points, cost);
  std::vector<RowBest> rows(points.size());
  parallel_for(points.size(), workers,
               [&](std::size_t i) { rows[i] = scan_row(points, diag, cost, i); });
  return reduce_rows(rows, points.size());
}

}  // namespace kernels
}  // namespace minaffine
