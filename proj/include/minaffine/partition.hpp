#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "minaffine/cost.hpp"
#include "minaffine/measure.hpp"
#include "minaffine/plan.hpp"

namespace minaffine {

/// A (mu, nu)-partition of order k. Cells are numbered by their x-order.
/// Cell i owns the mu-mass slice [levels[i], levels[i+1]) on the x-axis;
/// on the y-axis the cells are stacked bottom-to-top in the order y_order,
/// each taking a nu-slice of the same mass.
class Partition {
 public:
  /// levels: 0 = U_0 < U_1 < ... < U_k = 1. y_order: a permutation of
  /// {0..k-1}. Throws InputError if a cell has non-positive mass or the
  /// permutation is invalid.
  Partition(std::vector<double> levels, std::vector<int> y_order);

  /// Order 1: the whole line on both axes.
  static Partition trivial();

  int order() const { return static_cast<int>(y_order_.size()); }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<int>& y_order() const { return y_order_; }
  double mass(int i) const { return levels_[i + 1] - levels_[i]; }
  /// Lower nu-level of cell i's y-slice.
  double y_level(int i) const { return y_level_[i]; }

  /// Interior x-breakpoints t_1 < ... < t_{k-1} (mu-quantiles of the levels).
  std::vector<double> x_breakpoints(const Measure1D& mu) const;
  /// Interior y-breakpoints in bottom-to-top order.
  std::vector<double> y_breakpoints(const Measure1D& nu) const;
  /// Closures of I_i and J_i restricted to where the marginals carry mass.
  std::array<double, 2> x_interval(int i, const Measure1D& mu) const;
  std::array<double, 2> y_interval(int i, const Measure1D& nu) const;

 private:
  std::vector<double> levels_;
  std::vector<int> y_order_;
  std::vector<double> y_level_;
};

struct JEvaluation {
  double value = 0.0;
  std::vector<int> active;  // per cell, lowest index attaining the inner min
};

/// J(P) = sum_i min_j (a_j int_{I_i} x dmu + b_j int_{J_i} y dnu + c_j mu(I_i)).
JEvaluation evaluate_J(const Partition& p, const MinAffineCost& cost,
                       const Measure1D& mu, const Measure1D& nu);

/// Same functional on raw levels (zero-mass cells allowed, contribute 0).
/// y_order must be a permutation of {0..levels.size()-2}.
double evaluate_J_levels(std::span<const double> levels,
                         std::span<const int> y_order,
                         const MinAffineCost& cost, const Measure1D& mu,
                         const Measure1D& nu);

struct CellCheck {
  int cell;
  int claimed;
  double margin;  // max over corners and j of l_claimed - l_j; > tol fails
};

struct PartitionVerification {
  bool passed = true;
  double worst_margin = 0.0;
  std::vector<CellCheck> violations;
};

/// Corner test of c = l_{active[i]} on each (I_i x J_i) intersected with the
/// box. Exact for affine differences on rectangles.
PartitionVerification verify_partition(const Partition& p,
                                       std::span<const int> active,
                                       const MinAffineCost& cost,
                                       const Measure1D& mu, const Measure1D& nu,
                                       const Box& box, double tol = 1e-9);

struct CyclicReport {
  bool passed = true;
  int depth = 2;
  /// Largest left-minus-right excess over tested cycles (-inf if none).
  double worst_violation = 0.0;
  std::vector<std::size_t> worst_cycle;
  std::size_t tested = 0;
};

/// Checks all pairs (depth 2) and additionally all 3-cycles in both
/// orientations (depth 3). A cycle violates when its excess exceeds tol.
CyclicReport cyclic_monotonicity_check(
    std::span<const std::array<double, 2>> points, const MinAffineCost& cost,
    int depth = 2, double tol = 1e-9, int workers = 1);

struct SolveOptions {
  int max_order = 0;  // 0: number of essential pieces
  int restarts = 16;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;
  int workers = 1;
  /// Cells lighter than this are folded into a neighbour.
  double collapse_mass = 1e-9;
  /// Plan samples used for the cyclic-monotonicity check.
  int samples = 1000;
  /// Best grid points that seed a local search, besides the random starts.
  int grid_starts = 4;
};

/// Best local result for one (order, y-order) subproblem.
struct SubproblemResult {
  int order = 1;
  std::vector<int> y_order;
  std::vector<double> levels;
  double value = 0.0;
  long evaluations = 0;
  int starts = 0;
};

struct SolveReport {
  double value = 0.0;
  Partition partition = Partition::trivial();
  /// Per cell, zero-based index into the caller's cost.
  std::vector<int> active;
  TransportPlan plan;
  PartitionVerification verification;
  CyclicReport cyclic;
  double marginal_error = 0.0;
  std::vector<int> essential;
  std::vector<int> dropped;
  int restarts = 0;
  long evaluations = 0;
  int rejected_candidates = 0;
  std::vector<SubproblemResult> table;
};

/// Searches every order k up to max_order and every y-order, minimizing J
/// over mass-coordinate breakpoints by multi-start Nelder-Mead. Throws
/// DegenerateError for costs failing validation on the working box.
SolveReport optimize(const Measure1D& mu, const Measure1D& nu,
                     const MinAffineCost& cost, const SolveOptions& options = {});

/// One subproblem; exposed for tests and benchmarks.
SubproblemResult solve_subproblem(int order, std::span<const int> y_order,
                                  const MinAffineCost& cost, const Measure1D& mu,
                                  const Measure1D& nu, const SolveOptions& options);

/// All (order, y-order) pairs for orders 1..max_order, lexicographic.
std::vector<std::vector<int>> enumerate_subproblems(int max_order);

/// Reference sweep and its OpenMP counterpart; results are identical.
std::vector<SubproblemResult> solve_subproblems_serial(
    const std::vector<std::vector<int>>& tasks, const MinAffineCost& cost,
    const Measure1D& mu, const Measure1D& nu, const SolveOptions& options);
std::vector<SubproblemResult> solve_subproblems_parallel(
    const std::vector<std::vector<int>>& tasks, const MinAffineCost& cost,
    const Measure1D& mu, const Measure1D& nu, const SolveOptions& options,
    int workers);

/// Two-marginal plan for a partition: cell i carries mass m_i, comonotone
/// within the cell, labelled with active[i].
TransportPlan plan_from_partition(const Partition& p, std::span<const int> active);

/// Exact integral of c over a plan whose cell labels are active pieces.
double plan_cost(const TransportPlan& plan, const MinAffineCost& cost,
                 const Measure1D& mu, const Measure1D& nu);

}  // namespace minaffine
