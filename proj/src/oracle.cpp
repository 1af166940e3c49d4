#include "minaffine/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "minaffine/error.hpp"
#include "minaffine/parallel.hpp"

namespace minaffine {

namespace {

constexpr std::size_t kMaxOtAtoms = 2000;
constexpr std::size_t kMaxMmotMarginals = 3;
constexpr std::size_t kMaxMmotAtoms = 15;
constexpr std::size_t kScanChunk = 64;
constexpr std::size_t kMinBlock = 16;
constexpr int kStallLimit = 32;

void check_weights(const std::vector<Atom>& atoms) {
  if (atoms.empty()) throw InputError("every marginal needs at least one atom");
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!(a.weight >= 0.0) || !std::isfinite(a.position))
      throw InputError("atom weights must be >= 0 and positions finite");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("unbalanced weights: marginal mass != 1");
}

std::vector<double> positions(const std::vector<Atom>& atoms) {
  std::vector<double> x;
  x.reserve(atoms.size());
  for (const Atom& a : atoms) x.push_back(a.position);
  return x;
}

}  // namespace

std::size_t DiscreteProblem::cells() const {
  std::size_t n = 1;
  for (const auto& m : marginals) n *= m.size();
  return n;
}

DiscreteProblem DiscreteProblem::two_marginal(std::vector<Atom> source,
                                              std::vector<Atom> target,
                                              const MinAffineCost& cost,
                                              int workers) {
  DiscreteProblem p;
  const auto xs = positions(source);
  const auto ys = positions(target);
  p.cost = workers > 1 ? kernels::cost_matrix_parallel(xs, ys, cost, workers)
                       : kernels::cost_matrix_serial(xs, ys, cost);
  p.marginals = {std::move(source), std::move(target)};
  return p;
}

DiscreteProblem DiscreteProblem::tensor(
    std::vector<std::vector<Atom>> marginals,
    const std::function<double(std::span<const double>)>& cost) {
  DiscreteProblem p;
  p.marginals = std::move(marginals);
  const std::size_t m = p.marginals.size();
  const std::size_t total = p.cells();
  p.cost.resize(total);
  std::vector<double> point(m);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rest = t;
    for (std::size_t k = m; k-- > 0;) {
      const std::size_t nk = p.marginals[k].size();
      point[k] = p.marginals[k][rest % nk].position;
      rest /= nk;
    }
    p.cost[t] = cost(point);
  }
  return p;
}

DiscreteProblem DiscreteProblem::min_coordinates(std::vector<std::vector<Atom>> marginals) {
  return tensor(std::move(marginals), [](std::span<const double> x) {
    return *std::min_element(x.begin(), x.end());
  });
}

OracleResult solve_discrete_ot(const DiscreteProblem& problem) {
  if (problem.dimension() != 2) throw InputError("transportation oracle needs two marginals");
  const auto& src = problem.marginals[0];
  const auto& dst = problem.marginals[1];
  check_weights(src);
  check_weights(dst);
  if (src.size() > kMaxOtAtoms || dst.size() > kMaxOtAtoms)
    throw InputError("transportation oracle is limited to 2000 atoms per side");
  const std::size_t m = src.size(), n = dst.size();
  const std::size_t nodes = m + n;
  const auto& C = problem.cost;
  if (C.size() != m * n) throw InputError("cost matrix has the wrong size");

  double cscale = 1.0;
  for (double c : C) {
    if (!std::isfinite(c)) throw InputError("cost entries must be finite");
    cscale = std::max(cscale, std::abs(c));
  }
  const double eps = 1e-12 * cscale;

  struct Basic {
    std::size_t i, j;
    double flow;
  };
  std::vector<Basic> basis;
  basis.reserve(nodes - 1);
  std::vector<int> basic_slot(m * n, -1);

  // North-west corner start: exactly m + n - 1 basic cells, some maybe zero.
  {
    std::vector<double> ra(m), rb(n);
    for (std::size_t i = 0; i < m; ++i) ra[i] = src[i].weight;
    for (std::size_t j = 0; j < n; ++j) rb[j] = dst[j].weight;
    std::size_t i = 0, j = 0;
    for (;;) {
      const double x = std::min(ra[i], rb[j]);
      basic_slot[i * n + j] = static_cast<int>(basis.size());
      basis.push_back({i, j, x});
      ra[i] -= x;
      rb[j] -= x;
      if (i + 1 == m && j + 1 == n) break;
      if (i + 1 == m) {
        ++j;
      } else if (j + 1 == n) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Spanning-tree scratch; node r < m is row r, node m + c is column c.
  std::vector<std::size_t> offset(nodes + 1), edges(2 * (nodes - 1));
  std::vector<double> pot(nodes);
  std::vector<int> parent_edge(nodes), depth(nodes);
  std::vector<std::size_t> parent(nodes), queue(nodes), fill(nodes);

  std::vector<std::size_t> from_col, from_row, cycle;
  int stall = 0;  // consecutive degenerate pivots
  std::size_t cursor = 0;
  const std::size_t block = std::max<std::size_t>(
      kMinBlock, static_cast<std::size_t>(std::sqrt(static_cast<double>(m * n))));
  OracleResult result;
  for (;;) {
    // Rebuild adjacency and potentials u_i + v_j = c_ij on the basis tree.
    std::fill(offset.begin(), offset.end(), 0);
    for (const Basic& b : basis) {
      ++offset[b.i + 1];
      ++offset[m + b.j + 1];
    }
    for (std::size_t v = 0; v < nodes; ++v) offset[v + 1] += offset[v];
    std::copy(offset.begin(), offset.end() - 1, fill.begin());
    for (std::size_t e = 0; e < basis.size(); ++e) {
      edges[fill[basis[e].i]++] = e;
      edges[fill[m + basis[e].j]++] = e;
    }
    std::fill(depth.begin(), depth.end(), -1);
    std::size_t head = 0, tail = 0;
    queue[tail++] = 0;
    depth[0] = 0;
    pot[0] = 0.0;
    parent_edge[0] = -1;
    while (head < tail) {
      const std::size_t v = queue[head++];
      for (std::size_t k = offset[v]; k < offset[v + 1]; ++k) {
        const Basic& b = basis[edges[k]];
        const std::size_t w = v < m ? m + b.j : b.i;
        if (depth[w] >= 0) continue;
        depth[w] = depth[v] + 1;
        parent[w] = v;
        parent_edge[w] = static_cast<int>(edges[k]);
        pot[w] = C[b.i * n + b.j] - pot[v];
        queue[tail++] = w;
      }
    }
    if (tail != nodes) throw SolverError("basis is not a spanning tree");

    // Pricing. Block search (most negative reduced cost within the first
    // block, scanned cyclically from where the last search stopped, that
    // holds an improving cell) while pivots make progress; Bland (lowest
    // improving index) once a run of degenerate pivots reaches kStallLimit,
    // until a pivot moves flow. Bland's rule cannot cycle and every cycle
    // consists of degenerate pivots only, so the method terminates.
    const double* v = pot.data() + m;
    const auto reduced = [&](std::size_t cell) {
      return C[cell] - pot[cell / n] - v[cell % n];
    };
    std::size_t enter = m * n;
    if (stall >= kStallLimit) {
      for (std::size_t i = 0; i < m && enter == m * n; ++i) {
        const double u = pot[i];
        const double* row = C.data() + i * n;
        for (std::size_t j0 = 0; j0 < n && enter == m * n; j0 += kScanChunk) {
          const std::size_t j1 = std::min(n, j0 + kScanChunk);
          int hit = 0;
          for (std::size_t j = j0; j < j1; ++j) hit |= (row[j] - u - v[j] < -eps);
          if (!hit) continue;
          for (std::size_t j = j0; j < j1; ++j) {
            if (basic_slot[i * n + j] < 0 && row[j] - u - v[j] < -eps) {
              enter = i * n + j;
              break;
            }
          }
        }
      }
    } else {
      double best = -eps;
      std::size_t scanned = 0;
      while (scanned < m * n) {
        const std::size_t len = std::min(block, m * n - scanned);
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t cell = cursor;
          cursor = cursor + 1 == m * n ? 0 : cursor + 1;
          const double rc = reduced(cell);
          if (rc < best && basic_slot[cell] < 0) {
            best = rc;
            enter = cell;
          }
        }
        scanned += len;
        if (enter != m * n) break;
      }
    }
    if (enter == m * n) break;
    ++result.iterations;

    const std::size_t ei = enter / n, ej = enter % n;
    // Cycle: column ej up to the common ancestor, then down to row ei.
    from_col.clear();
    from_row.clear();
    std::size_t a = m + ej, b = ei;
    while (depth[a] > depth[b]) {
      from_col.push_back(static_cast<std::size_t>(parent_edge[a]));
      a = parent[a];
    }
    while (depth[b] > depth[a]) {
      from_row.push_back(static_cast<std::size_t>(parent_edge[b]));
      b = parent[b];
    }
    while (a != b) {
      from_col.push_back(static_cast<std::size_t>(parent_edge[a]));
      a = parent[a];
      from_row.push_back(static_cast<std::size_t>(parent_edge[b]));
      b = parent[b];
    }
    cycle.assign(from_col.begin(), from_col.end());
    cycle.insert(cycle.end(), from_row.rbegin(), from_row.rend());

    // Even positions lose flow. Bland: lowest cell index among the minima.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = 0, leave_cell = m * n;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const Basic& e = basis[cycle[k]];
      const std::size_t cell = e.i * n + e.j;
      if (e.flow < theta || (e.flow == theta && cell < leave_cell)) {
        theta = e.flow;
        leave = cycle[k];
        leave_cell = cell;
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      Basic& e = basis[cycle[k]];
      e.flow = k % 2 == 0 ? std::max(0.0, e.flow - theta) : e.flow + theta;
    }
    stall = theta > 0.0 ? 0 : stall + 1;
    basic_slot[leave_cell] = -1;
    basis[leave] = {ei, ej, theta};
    basic_slot[enter] = static_cast<int>(leave);
  }

  for (const Basic& b : basis) {
    result.value += b.flow * C[b.i * n + b.j];
    if (b.flow > 0.0)
      result.plan.push_back({{static_cast<int>(b.i), static_cast<int>(b.j)}, b.flow});
  }
  std::sort(result.plan.begin(), result.plan.end(),
            [](const PlanEntry& x, const PlanEntry& y) { return x.index < y.index; });
  result.status = "optimal";
  return result;
}

OracleResult solve_discrete_mmot(const DiscreteProblem& problem) {
  const std::size_t dim = problem.dimension();
  if (dim < 2 || dim > kMaxMmotMarginals)
    throw InputError("multi-marginal oracle supports 2 or 3 marginals");
  for (const auto& m : problem.marginals) {
    if (m.size() > kMaxMmotAtoms)
      throw InputError("multi-marginal oracle is limited to 15 atoms per marginal");
    check_weights(m);
  }
  const std::size_t N = problem.cells();
  if (problem.cost.size() != N) throw InputError("cost tensor has the wrong size");

  // Rows: every atom of marginal 0, all but the last atom of the others.
  std::vector<std::size_t> row_base(dim);
  std::size_t R = 0;
  for (std::size_t k = 0; k < dim; ++k) {
    row_base[k] = R;
    R += k == 0 ? problem.marginals[k].size() : problem.marginals[k].size() - 1;
  }
  const std::size_t cols = N + R;  // structural then artificial
  const std::size_t width = cols + 1;
  std::vector<double> T((R + 1) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return T[r * width + c]; };

  std::vector<std::size_t> idx(dim);
  for (std::size_t t = 0; t < N; ++t) {
    std::size_t rest = t;
    for (std::size_t k = dim; k-- > 0;) {
      idx[k] = rest % problem.marginals[k].size();
      rest /= problem.marginals[k].size();
    }
    for (std::size_t k = 0; k < dim; ++k) {
      if (k > 0 && idx[k] + 1 == problem.marginals[k].size()) continue;
      at(row_base[k] + idx[k], t) = 1.0;
    }
  }
  std::vector<std::size_t> basis(R);
  for (std::size_t k = 0; k < dim; ++k) {
    const std::size_t rows = k == 0 ? problem.marginals[k].size()
                                    : problem.marginals[k].size() - 1;
    for (std::size_t a = 0; a < rows; ++a) {
      const std::size_t r = row_base[k] + a;
      at(r, cols) = problem.marginals[k][a].weight;
      at(r, N + r) = 1.0;
      basis[r] = N + r;
    }
  }

  double cscale = 1.0;
  for (double c : problem.cost) cscale = std::max(cscale, std::abs(c));
  const double pivot_tol = 1e-12;

  OracleResult result;
  auto pivot = [&](std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c < width; ++c) at(pr, c) *= inv;
    for (std::size_t r = 0; r <= R; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < width; ++c) at(r, c) -= f * at(pr, c);
    }
    basis[pr] = pc;
    ++result.iterations;
  };
  // Objective row R holds reduced costs; rhs column holds -objective.
  auto price = [&](auto&& cost_of) {
    for (std::size_t c = 0; c < width; ++c) {
      double v = c < cols ? cost_of(c) : 0.0;
      for (std::size_t r = 0; r < R; ++r) v -= cost_of(basis[r]) * at(r, c);
      at(R, c) = v;
    }
  };
  auto run = [&](std::size_t entering_limit, double eps) {
    for (;;) {
      std::size_t pc = entering_limit;
      for (std::size_t c = 0; c < entering_limit; ++c) {
        if (at(R, c) < -eps) {
          pc = c;
          break;
        }
      }
      if (pc == entering_limit) return;
      std::size_t pr = R;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < R; ++r) {
        if (at(r, pc) <= pivot_tol) continue;
        const double ratio = at(r, cols) / at(r, pc);
        if (ratio < best || (ratio == best && basis[r] < basis[pr])) {
          best = ratio;
          pr = r;
        }
      }
      if (pr == R) throw SolverError("multi-marginal LP is unbounded");
      pivot(pr, pc);
    }
  };

  // Phase 1: minimize the artificial sum.
  price([&](std::size_t c) { return c >= N ? 1.0 : 0.0; });
  run(cols, 1e-12);
  if (-at(R, cols) > 1e-9) throw SolverError("multi-marginal LP is infeasible");
  for (std::size_t r = 0; r < R; ++r) {
    if (basis[r] < N) continue;
    for (std::size_t c = 0; c < N; ++c) {
      if (std::abs(at(r, c)) > pivot_tol) {
        pivot(r, c);
        break;
      }
    }
  }

  // Phase 2 over structural columns only.
  price([&](std::size_t c) { return c < N ? problem.cost[c] : 0.0; });
  run(N, 1e-12 * cscale);

  std::vector<double> x(N, 0.0);
  for (std::size_t r = 0; r < R; ++r)
    if (basis[r] < N) x[basis[r]] = std::max(0.0, at(r, cols));
  for (std::size_t t = 0; t < N; ++t) {
    if (!(x[t] > 0.0)) continue;
    result.value += x[t] * problem.cost[t];
    PlanEntry e{std::vector<int>(dim), x[t]};
    std::size_t rest = t;
    for (std::size_t k = dim; k-- > 0;) {
      e.index[k] = static_cast<int>(rest % problem.marginals[k].size());
      rest /= problem.marginals[k].size();
    }
    result.plan.push_back(std::move(e));
  }
  result.status = "optimal";
  return result;
}

double plan_marginal_error(const DiscreteProblem& problem, const OracleResult& result) {
  double worst = 0.0;
  for (std::size_t k = 0; k < problem.dimension(); ++k) {
    std::vector<double> mass(problem.marginals[k].size(), 0.0);
    for (const PlanEntry& e : result.plan) mass[static_cast<std::size_t>(e.index[k])] += e.mass;
    for (std::size_t a = 0; a < mass.size(); ++a)
      worst = std::max(worst, std::abs(mass[a] - problem.marginals[k][a].weight));
  }
  return worst;
}

}  // namespace minaffine
