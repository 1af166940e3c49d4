#include "minaffine/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "minaffine/error.hpp"
#include "minaffine/nelder_mead.hpp"
#include "minaffine/parallel.hpp"

namespace minaffine {

namespace {

constexpr int kMaxOrder = 8;

bool is_permutation_of_range(std::span<const int> order) {
  std::vector<char> seen(order.size(), 0);
  for (int v : order) {
    if (v < 0 || static_cast<std::size_t>(v) >= order.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

// Lower y-level of every cell given x-masses and the bottom-to-top order.
template <class Masses>
std::vector<double> stack_levels(const Masses& mass, std::span<const int> y_order) {
  std::vector<double> y(y_order.size());
  double acc = 0.0;
  for (int cell : y_order) {
    y[cell] = acc;
    acc += mass(cell);
  }
  return y;
}

double cell_value(const AffinePiece& l, double mx, double my, double m) {
  return l.a * mx + l.b * my + l.c0 * m;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Portable uniform double in [0, 1) from a 64-bit engine.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> levels_from_free(std::span<const double> z) {
  std::vector<double> levels(z.size() + 2);
  levels.front() = 0.0;
  levels.back() = 1.0;
  for (std::size_t k = 0; k < z.size(); ++k) levels[k + 1] = std::clamp(z[k], 0.0, 1.0);
  std::sort(levels.begin() + 1, levels.end() - 1);
  return levels;
}

// Folds cells lighter than min_mass into an x-neighbour, which keeps its
// y-position. Returns a valid partition.
Partition collapse(std::vector<double> levels, std::vector<int> y_order,
                   double min_mass) {
  for (;;) {
    const int k = static_cast<int>(y_order.size());
    if (k == 1) break;
    int light = -1;
    for (int i = 0; i < k; ++i) {
      if (levels[i + 1] - levels[i] < min_mass) {
        light = i;
        break;
      }
    }
    if (light < 0) break;
    // Merge into the right neighbour when there is one.
    if (light + 1 < k) {
      levels.erase(levels.begin() + light + 1);
    } else {
      levels.erase(levels.begin() + light);
    }
    std::vector<int> next;
    for (int v : y_order) {
      if (v == light) continue;
      next.push_back(v > light ? v - 1 : v);
    }
    y_order = std::move(next);
  }
  levels.front() = 0.0;
  levels.back() = 1.0;
  return Partition(std::move(levels), std::move(y_order));
}

// Active piece per cell (lowest index on ties) for raw levels.
std::vector<int> active_labels(std::span<const double> levels, std::span<const int> y_order,
                               const MinAffineCost& cost, const Measure1D& mu,
                               const Measure1D& nu) {
  const std::size_t k = y_order.size();
  const auto ylo = stack_levels([&](int c) { return levels[c + 1] - levels[c]; }, y_order);
  std::vector<int> act(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const double m = levels[i + 1] - levels[i];
    const double mx = mu.moment_between_levels(levels[i], levels[i + 1]);
    const double my = nu.moment_between_levels(ylo[i], ylo[i] + m);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cost.size(); ++j) {
      const double v = cell_value(cost[j], mx, my, m);
      if (v < best) {
        best = v;
        act[i] = static_cast<int>(j);
      }
    }
  }
  return act;
}

// Exact partial derivative of J in level r (the boundary between cells r-1
// and r) with the active pieces held fixed. Raising the level moves mass from
// cell r into cell r-1; every y-slice stacked above either of them shifts.
double level_slope(std::span<const double> levels, std::span<const int> y_order,
                   std::span<const int> act, int r, const MinAffineCost& cost,
                   const Measure1D& mu, const Measure1D& nu) {
  const AffinePiece& left = cost[act[r - 1]];
  const AffinePiece& right = cost[act[r]];
  double g = (left.a - right.a) * mu.quantile(levels[r]) + (left.c0 - right.c0);
  double v = 0.0, dv = 0.0;
  for (int cell : y_order) {
    const double m = levels[cell + 1] - levels[cell];
    const double dm = cell == r - 1 ? 1.0 : cell == r ? -1.0 : 0.0;
    if (dv != 0.0 || dm != 0.0)
      g += cost[act[cell]].b * (nu.quantile(v + m) * (dv + dm) - nu.quantile(v) * dv);
    v += m;
    dv += dm;
  }
  return g;
}

// Nelder-Mead stops about sqrt(eps) short of smooth minima, enough to flip a
// corner check. Each level is refined by bisection on the sign of the exact
// slope inside a small bracket (a kink where the active piece changes is a
// sign change too). Near a smooth minimum J is flat to rounding, so moves are
// kept unless they raise J by more than a few ulps.
std::vector<double> polish_levels(std::vector<double> levels, std::span<const int> y_order,
                                  const MinAffineCost& cost, const Measure1D& mu,
                                  const Measure1D& nu) {
  constexpr double kBracket = 1e-5;
  constexpr int kSweeps = 8;
  const int k = static_cast<int>(y_order.size());
  double current = evaluate_J_levels(levels, y_order, cost, mu, nu);
  std::vector<double> lv;
  const auto slope_at = [&](int r, double u) {
    lv[r] = u;
    return level_slope(lv, y_order, active_labels(lv, y_order, cost, mu, nu), r, cost, mu, nu);
  };
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    bool moved = false;
    for (int r = 1; r < k; ++r) {
      lv = levels;
      double lo = std::max(levels[r - 1], levels[r] - kBracket);
      double hi = std::min(levels[r + 1], levels[r] + kBracket);
      if (!(lo < hi) || slope_at(r, lo) > 0.0 || slope_at(r, hi) < 0.0) continue;
      for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (slope_at(r, mid) < 0.0 ? lo : hi) = mid;
      }
      lv[r] = 0.5 * (lo + hi);
      const double value = evaluate_J_levels(lv, y_order, cost, mu, nu);
      const double noise = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(current));
      if (value <= current + noise && lv[r] != levels[r]) {
        levels = lv;
        current = value;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return levels;
}

}  // namespace

Partition::Partition(std::vector<double> levels, std::vector<int> y_order)
    : levels_(std::move(levels)), y_order_(std::move(y_order)) {
  if (levels_.size() < 2 || levels_.size() != y_order_.size() + 1)
    throw InputError("partition needs k+1 levels for k cells");
  if (levels_.front() != 0.0 || levels_.back() != 1.0)
    throw InputError("partition levels must run from 0 to 1");
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i] > levels_[i - 1]))
      throw InputError("every partition cell needs positive mass");
  }
  if (!is_permutation_of_range(y_order_))
    throw InputError("y-order must be a permutation of the cells");
  y_level_ = stack_levels([this](int c) { return mass(c); }, y_order_);
}

Partition Partition::trivial() { return Partition({0.0, 1.0}, {0}); }

std::vector<double> Partition::x_breakpoints(const Measure1D& mu) const {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < levels_.size(); ++i)
    out.push_back(mu.quantile(levels_[i]));
  return out;
}

std::vector<double> Partition::y_breakpoints(const Measure1D& nu) const {
  std::vector<double> out;
  double acc = 0.0;
  for (std::size_t r = 0; r + 1 < y_order_.size(); ++r) {
    acc += mass(y_order_[r]);
    out.push_back(nu.quantile(acc));
  }
  return out;
}

std::array<double, 2> Partition::x_interval(int i, const Measure1D& mu) const {
  return {mu.quantile(levels_[i]), mu.quantile(levels_[i + 1])};
}

std::array<double, 2> Partition::y_interval(int i, const Measure1D& nu) const {
  return {nu.quantile(y_level_[i]),
          nu.quantile(std::min(1.0, y_level_[i] + mass(i)))};
}

JEvaluation evaluate_J(const Partition& p, const MinAffineCost& cost,
                       const Measure1D& mu, const Measure1D& nu) {
  JEvaluation out;
  out.active.resize(static_cast<std::size_t>(p.order()));
  for (int i = 0; i < p.order(); ++i) {
    const double m = p.mass(i);
    const double mx = mu.moment_between_levels(p.levels()[i], p.levels()[i + 1]);
    const double my = nu.moment_between_levels(p.y_level(i), p.y_level(i) + m);
    double best = cell_value(cost[0], mx, my, m);
    int arg = 0;
    for (std::size_t j = 1; j < cost.size(); ++j) {
      const double v = cell_value(cost[j], mx, my, m);
      if (v < best) {
        best = v;
        arg = static_cast<int>(j);
      }
    }
    out.value += best;
    out.active[i] = arg;
  }
  return out;
}

double evaluate_J_levels(std::span<const double> levels,
                         std::span<const int> y_order, const MinAffineCost& cost,
                         const Measure1D& mu, const Measure1D& nu) {
  const auto mass = [&](int c) { return levels[c + 1] - levels[c]; };
  const std::vector<double> y = stack_levels(mass, y_order);
  double total = 0.0;
  for (std::size_t i = 0; i < y_order.size(); ++i) {
    const double m = mass(static_cast<int>(i));
    if (!(m > 0.0)) continue;
    const double mx = mu.moment_between_levels(levels[i], levels[i + 1]);
    const double my = nu.moment_between_levels(y[i], y[i] + m);
    double best = std::numeric_limits<double>::infinity();
    for (const AffinePiece& l : cost.pieces()) best = std::min(best, cell_value(l, mx, my, m));
    total += best;
  }
  return total;
}

PartitionVerification verify_partition(const Partition& p,
                                       std::span<const int> active,
                                       const MinAffineCost& cost,
                                       const Measure1D& mu, const Measure1D& nu,
                                       const Box& box, double tol) {
  if (active.size() != static_cast<std::size_t>(p.order()))
    throw InputError("one active piece per cell is required");
  const double extent = std::max({std::abs(box.x_lo), std::abs(box.x_hi),
                                  std::abs(box.y_lo), std::abs(box.y_hi), 1.0});
  const double threshold = tol * (1.0 + cost.coefficient_scale() * extent);
  PartitionVerification out;
  out.worst_margin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.order(); ++i) {
    const int claimed = active[i];
    if (claimed < 0 || static_cast<std::size_t>(claimed) >= cost.size())
      throw InputError("active piece index out of range");
    auto xi = p.x_interval(i, mu);
    auto yi = p.y_interval(i, nu);
    xi = {std::max(xi[0], box.x_lo), std::min(xi[1], box.x_hi)};
    yi = {std::max(yi[0], box.y_lo), std::min(yi[1], box.y_hi)};
    if (xi[0] > xi[1] || yi[0] > yi[1]) continue;
    double margin = -std::numeric_limits<double>::infinity();
    for (double x : xi) {
      for (double y : yi) {
        const double own = cost[claimed](x, y);
        for (std::size_t j = 0; j < cost.size(); ++j) {
          if (static_cast<int>(j) == claimed) continue;
          margin = std::max(margin, own - cost[j](x, y));
        }
      }
    }
    if (cost.size() == 1) margin = 0.0;
    out.worst_margin = std::max(out.worst_margin, margin);
    if (margin > threshold) {
      out.passed = false;
      out.violations.push_back({i, claimed, margin});
    }
  }
  if (!std::isfinite(out.worst_margin)) out.worst_margin = 0.0;
  return out;
}

CyclicReport cyclic_monotonicity_check(
    std::span<const std::array<double, 2>> points, const MinAffineCost& cost,
    int depth, double tol, int workers) {
  if (depth != 2 && depth != 3) throw InputError("cycle depth must be 2 or 3");
  CyclicReport out;
  out.depth = depth;
  const auto pairs = workers > 1 ? kernels::worst_pair_parallel(points, cost, workers)
                                 : kernels::worst_pair_serial(points, cost);
  out.tested = pairs.tested;
  out.worst_violation = pairs.worst;
  if (pairs.tested > 0) out.worst_cycle = {pairs.i, pairs.j};

  if (depth == 3) {
    const std::size_t n = points.size();
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = cost(points[i][0], points[i][1]);
    const auto c = [&](std::size_t i, std::size_t j) {
      return cost(points[i][0], points[j][1]);
    };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
          const double lhs = diag[i] + diag[j] + diag[k];
          // (i -> j -> k) and its reverse orientation
          const double fwd = lhs - (c(i, k) + c(j, i) + c(k, j));
          const double bwd = lhs - (c(i, j) + c(j, k) + c(k, i));
          out.tested += 2;
          if (fwd > out.worst_violation) {
            out.worst_violation = fwd;
            out.worst_cycle = {i, j, k};
          }
          if (bwd > out.worst_violation) {
            out.worst_violation = bwd;
            out.worst_cycle = {i, k, j};
          }
        }
      }
    }
  }
  out.passed = !(out.worst_violation > tol);
  return out;
}

std::vector<std::vector<int>> enumerate_subproblems(int max_order) {
  if (max_order < 1) throw InputError("max order must be at least 1");
  if (max_order > kMaxOrder)
    throw InputError("orders above " + std::to_string(kMaxOrder) +
                     " are not supported");
  std::vector<std::vector<int>> tasks;
  for (int k = 1; k <= max_order; ++k) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      tasks.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return tasks;
}

SubproblemResult solve_subproblem(int order, std::span<const int> y_order,
                                  const MinAffineCost& cost, const Measure1D& mu,
                                  const Measure1D& nu, const SolveOptions& options) {
  if (static_cast<int>(y_order.size()) != order || !is_permutation_of_range(y_order))
    throw InputError("y-order must be a permutation of the cells");
  SubproblemResult res;
  res.order = order;
  res.y_order.assign(y_order.begin(), y_order.end());
  const std::size_t d = static_cast<std::size_t>(order - 1);

  const auto objective = [&](std::span<const double> z) {
    const auto levels = levels_from_free(z);
    return evaluate_J_levels(levels, y_order, cost, mu, nu);
  };

  if (d == 0) {
    res.levels = {0.0, 1.0};
    res.value = objective({});
    res.evaluations = 1;
    res.starts = 1;
    return res;
  }

  // Uniform grid over strictly increasing level tuples.
  const int G = d == 1 ? 32 : d == 2 ? 16 : 10;
  std::vector<std::pair<double, std::vector<double>>> grid;
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    std::vector<double> z(d);
    for (std::size_t k = 0; k < d; ++k) z[k] = (idx[k] + 1.0) / (G + 1.0);
    grid.emplace_back(objective(z), std::move(z));
    ++res.evaluations;
    // next combination of d indices out of G
    int pos = static_cast<int>(d) - 1;
    while (pos >= 0 && idx[pos] == G - static_cast<int>(d) + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (std::size_t k = pos + 1; k < d; ++k) idx[k] = idx[k - 1] + 1;
  }
  std::stable_sort(grid.begin(), grid.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::vector<double>> starts;
  for (int g = 0; g < options.grid_starts && g < static_cast<int>(grid.size()); ++g)
    starts.push_back(grid[g].second);
  std::uint64_t h = splitmix64(options.seed) ^ static_cast<std::uint64_t>(order);
  for (int v : y_order) h = splitmix64(h ^ static_cast<std::uint64_t>(v + 1));
  std::mt19937_64 rng(h);
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> z(d);
    for (double& v : z) v = unit_draw(rng);
    std::sort(z.begin(), z.end());
    starts.push_back(std::move(z));
  }

  NelderMeadOptions nm;
  nm.initial_step = 0.5 / (G + 1.0);
  nm.max_evaluations = 2000 * static_cast<int>(d);
  res.value = grid.front().first;
  std::vector<double> best_z = grid.front().second;
  for (const auto& z0 : starts) {
    const NelderMeadResult r = nelder_mead(objective, z0, nm);
    res.evaluations += r.evaluations;
    if (r.value < res.value) {
      res.value = r.value;
      best_z = r.x;
    }
  }
  res.starts = static_cast<int>(starts.size());
  res.levels = polish_levels(levels_from_free(best_z), y_order, cost, mu, nu);
  res.value = evaluate_J_levels(res.levels, y_order, cost, mu, nu);
  return res;
}

std::vector<SubproblemResult> solve_subproblems_serial(
    const std::vector<std::vector<int>>& tasks, const MinAffineCost& cost,
    const Measure1D& mu, const Measure1D& nu, const SolveOptions& options) {
  std::vector<SubproblemResult> out(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t)
    out[t] = solve_subproblem(static_cast<int>(tasks[t].size()), tasks[t], cost,
                              mu, nu, options);
  return out;
}

std::vector<SubproblemResult> solve_subproblems_parallel(
    const std::vector<std::vector<int>>& tasks, const MinAffineCost& cost,
    const Measure1D& mu, const Measure1D& nu, const SolveOptions& options,
    int workers) {
  std::vector<SubproblemResult> out(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t t) {
    out[t] = solve_subproblem(static_cast<int>(tasks[t].size()), tasks[t], cost,
                              mu, nu, options);
  });
  return out;
}

TransportPlan plan_from_partition(const Partition& p, std::span<const int> active) {
  if (active.size() != static_cast<std::size_t>(p.order()))
    throw InputError("one active piece per cell is required");
  TransportPlan plan;
  plan.dimension = 2;
  for (int i = 0; i < p.order(); ++i)
    plan.cells.push_back({p.mass(i), {p.levels()[i], p.y_level(i)}, active[i]});
  return plan;
}

double plan_cost(const TransportPlan& plan, const MinAffineCost& cost,
                 const Measure1D& mu, const Measure1D& nu) {
  double total = 0.0;
  for (const PlanCell& c : plan.cells) {
    const AffinePiece& l = cost[static_cast<std::size_t>(c.label)];
    const double mx = mu.moment_between_levels(c.level_lo[0], c.level_lo[0] + c.mass);
    const double my = nu.moment_between_levels(c.level_lo[1], c.level_lo[1] + c.mass);
    total += cell_value(l, mx, my, c.mass);
  }
  return total;
}

SolveReport optimize(const Measure1D& mu, const Measure1D& nu,
                     const MinAffineCost& cost, const SolveOptions& options) {
  const Box box = working_box(mu, nu);
  const CostValidation validation = validate_cost(cost, box);
  if (!validation.pairwise.passed) {
    std::string msg = "degenerate cost:";
    for (const auto& issue : validation.pairwise.issues) msg += " " + issue.describe() + ";";
    throw DegenerateError(msg);
  }
  if (validation.essential.empty()) throw DegenerateError("no essential pieces");

  const MinAffineCost reduced = cost.subset(validation.essential);
  const int max_order =
      options.max_order > 0 ? options.max_order : static_cast<int>(reduced.size());
  const auto tasks = enumerate_subproblems(max_order);
  const auto results =
      options.workers > 1
          ? solve_subproblems_parallel(tasks, reduced, mu, nu, options, options.workers)
          : solve_subproblems_serial(tasks, reduced, mu, nu, options);

  SolveReport report;
  report.essential = validation.essential;
  report.dropped = validation.dropped;
  report.table = results;
  report.restarts = options.restarts;
  for (const auto& r : results) report.evaluations += r.evaluations;

  // Candidates by value; values within tolerance count as ties and are
  // ordered lexicographically by (order, y-order), i.e. by task index.
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return results[a].value < results[b].value;
  });
  for (std::size_t i = 0; i < order.size();) {
    const double v = results[order[i]].value;
    const double band = options.tolerance * (1.0 + std::abs(v));
    std::size_t e = i + 1;
    while (e < order.size() && results[order[e]].value <= v + band) ++e;
    std::sort(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(e));
    i = e;
  }

  const Box support = working_box(mu, nu, 0.0);
  bool accepted = false;
  for (std::size_t c = 0; c < order.size() && !accepted; ++c) {
    const SubproblemResult& r = results[order[c]];
    Partition part = collapse(r.levels, r.y_order, options.collapse_mass);
    JEvaluation J = evaluate_J(part, reduced, mu, nu);
    PartitionVerification ver = verify_partition(part, J.active, reduced, mu, nu, support);
    if (ver.passed || c == 0) {
      report.partition = std::move(part);
      report.value = J.value;
      report.active.clear();
      for (int a : J.active) report.active.push_back(validation.essential[a]);
      report.verification = std::move(ver);
      accepted = report.verification.passed;
    }
    if (!ver.passed) ++report.rejected_candidates;
  }

  report.plan = plan_from_partition(report.partition, report.active);
  const MarginalRefs refs{std::cref(mu), std::cref(nu)};
  const auto samples = sample_plan(report.plan, refs, options.samples);
  std::vector<std::array<double, 2>> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back({s.x[0], s.x[1]});
  report.cyclic = cyclic_monotonicity_check(pts, cost, 2, 1e-9, options.workers);
  report.marginal_error = marginal_reconstruction_error(report.plan, refs);
  return report;
}

}  // namespace minaffine
