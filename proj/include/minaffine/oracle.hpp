#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "minaffine/cost.hpp"
#include "minaffine/measure.hpp"

namespace minaffine {

/// Discretized transport problem. For m marginals the cost is a dense
/// tensor in row-major order (last marginal varies fastest).
struct DiscreteProblem {
  std::vector<std::vector<Atom>> marginals;
  std::vector<double> cost;

  std::size_t dimension() const { return marginals.size(); }
  std::size_t cells() const;

  static DiscreteProblem two_marginal(std::vector<Atom> source,
                                      std::vector<Atom> target,
                                      const MinAffineCost& cost, int workers = 1);
  static DiscreteProblem tensor(std::vector<std::vector<Atom>> marginals,
                                const std::function<double(std::span<const double>)>& cost);
  static DiscreteProblem min_coordinates(std::vector<std::vector<Atom>> marginals);
};

struct PlanEntry {
  std::vector<int> index;
  double mass;
};

struct OracleResult {
  double value = 0.0;
  std::vector<PlanEntry> plan;
  long iterations = 0;
  std::string status;
};

/// Exact transportation LP by the network (transportation) simplex:
/// north-west corner start, Bland's rule. Up to 2000 atoms per side.
OracleResult solve_discrete_ot(const DiscreteProblem& problem);

/// Exact multi-marginal LP by a dense two-phase simplex with Bland's rule.
/// At most 3 marginals and 15 atoms per marginal.
OracleResult solve_discrete_mmot(const DiscreteProblem& problem);

/// Largest |plan marginal - atom weight| over all marginals and atoms.
double plan_marginal_error(const DiscreteProblem& problem, const OracleResult& result);

}  // namespace minaffine
