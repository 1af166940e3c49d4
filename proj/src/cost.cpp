#include "minaffine/cost.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "minaffine/error.hpp"
#include "minaffine/measure.hpp"

namespace minaffine {

Box working_box(const Measure1D& mu, const Measure1D& nu, double expand) {
  const double dx = expand * mu.support_width();
  const double dy = expand * nu.support_width();
  return {mu.support_lo() - dx, mu.support_hi() + dx, nu.support_lo() - dy,
          nu.support_hi() + dy};
}

MinAffineCost::MinAffineCost(std::vector<AffinePiece> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InputError("cost needs at least one affine piece");
  for (const auto& p : pieces_) {
    if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.c0))
      throw InputError("affine coefficients must be finite");
  }
}

Evaluation MinAffineCost::evaluate(double x, double y) const {
  Evaluation best{pieces_[0](x, y), 0};
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    const double v = pieces_[i](x, y);
    if (v < best.value) best = {v, static_cast<int>(i)};
  }
  return best;
}

double MinAffineCost::coefficient_scale() const {
  double s = 1e-300;
  for (const auto& p : pieces_)
    s = std::max({s, std::abs(p.a), std::abs(p.b), std::abs(p.c0)});
  return s;
}

MinAffineCost MinAffineCost::subset(std::span<const int> indices) const {
  std::vector<AffinePiece> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(pieces_.at(static_cast<std::size_t>(i)));
  return MinAffineCost(std::move(out));
}

std::string PairIssue::describe() const {
  std::string head = "pair (" + std::to_string(i + 1) + "," +
                     std::to_string(j + 1) + "): ";
  switch (defect) {
    case PairDefect::IdenticalPieces:
      return head + "identical pieces";
    case PairDefect::ParallelPlanes:
      return head + "equal slopes, coincidence set empty";
    case PairDefect::EqualXSlopes:
      return head + "equal x-slopes";
    case PairDefect::EqualYSlopes:
      return head + "equal y-slopes";
  }
  return head;
}

PairwiseReport validate_pairwise_A(const MinAffineCost& cost) {
  const double tau = 1e-12 * cost.coefficient_scale();
  PairwiseReport report;
  const auto& p = cost.pieces();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const bool same_a = std::abs(p[i].a - p[j].a) <= tau;
      const bool same_b = std::abs(p[i].b - p[j].b) <= tau;
      if (!same_a && !same_b) continue;
      PairDefect d;
      if (same_a && same_b) {
        d = std::abs(p[i].c0 - p[j].c0) <= tau ? PairDefect::IdenticalPieces
                                               : PairDefect::ParallelPlanes;
      } else {
        d = same_a ? PairDefect::EqualXSlopes : PairDefect::EqualYSlopes;
      }
      report.issues.push_back({static_cast<int>(i), static_cast<int>(j), d});
    }
  }
  report.passed = report.issues.empty();
  return report;
}

namespace {

struct Line {
  // alpha x + beta y = gamma
  double alpha, beta, gamma;
};

Line coincidence(const AffinePiece& p, const AffinePiece& q) {
  return {p.a - q.a, p.b - q.b, q.c0 - p.c0};
}

bool inside(const Box& box, double x, double y, double slack) {
  return x >= box.x_lo - slack && x <= box.x_hi + slack &&
         y >= box.y_lo - slack && y <= box.y_hi + slack;
}

}  // namespace

double essential_margin(const MinAffineCost& cost, int i, const Box& box) {
  const auto& p = cost.pieces();
  if (p.size() == 1) return std::numeric_limits<double>::infinity();
  const auto margin = [&](double x, double y) {
    double m = std::numeric_limits<double>::infinity();
    const double li = p[static_cast<std::size_t>(i)](x, y);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (static_cast<int>(j) != i) m = std::min(m, p[j](x, y) - li);
    return m;
  };

  // The margin is concave piecewise-linear; its maximum over the box sits at
  // a box corner, a breakline/edge crossing, or a breakline/breakline crossing.
  std::vector<std::array<double, 2>> candidates = {
      {box.x_lo, box.y_lo}, {box.x_lo, box.y_hi},
      {box.x_hi, box.y_lo}, {box.x_hi, box.y_hi}};
  std::vector<Line> breaklines;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (static_cast<int>(j) == i) continue;
    for (std::size_t k = j + 1; k < p.size(); ++k) {
      if (static_cast<int>(k) == i) continue;
      breaklines.push_back(coincidence(p[j], p[k]));
    }
  }
  const double extent = std::max({std::abs(box.x_lo), std::abs(box.x_hi),
                                  std::abs(box.y_lo), std::abs(box.y_hi), 1.0});
  const double slack = 1e-12 * extent;
  for (const Line& L : breaklines) {
    if (L.beta != 0.0) {
      for (double x : {box.x_lo, box.x_hi})
        candidates.push_back({x, (L.gamma - L.alpha * x) / L.beta});
    }
    if (L.alpha != 0.0) {
      for (double y : {box.y_lo, box.y_hi})
        candidates.push_back({(L.gamma - L.beta * y) / L.alpha, y});
    }
  }
  for (std::size_t u = 0; u < breaklines.size(); ++u) {
    for (std::size_t v = u + 1; v < breaklines.size(); ++v) {
      const Line& A = breaklines[u];
      const Line& B = breaklines[v];
      const double det = A.alpha * B.beta - A.beta * B.alpha;
      if (det == 0.0) continue;
      candidates.push_back({(A.gamma * B.beta - A.beta * B.gamma) / det,
                            (A.alpha * B.gamma - A.gamma * B.alpha) / det});
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (!std::isfinite(c[0]) || !std::isfinite(c[1])) continue;
    if (!inside(box, c[0], c[1], slack)) continue;
    const double x = std::clamp(c[0], box.x_lo, box.x_hi);
    const double y = std::clamp(c[1], box.y_lo, box.y_hi);
    best = std::max(best, margin(x, y));
  }
  return best;
}

std::vector<int> essential_pieces(const MinAffineCost& cost, const Box& box) {
  const double extent = std::max({std::abs(box.x_lo), std::abs(box.x_hi),
                                  std::abs(box.y_lo), std::abs(box.y_hi), 1.0});
  const double tol = 1e-12 * cost.coefficient_scale() * extent;
  std::vector<int> out;
  for (std::size_t i = 0; i < cost.size(); ++i) {
    if (essential_margin(cost, static_cast<int>(i), box) > tol)
      out.push_back(static_cast<int>(i));
  }
  return out;
}

CostValidation validate_cost(const MinAffineCost& cost, const Box& box) {
  CostValidation v;
  v.pairwise = validate_pairwise_A(cost);
  v.essential = essential_pieces(cost, box);
  for (std::size_t i = 0; i < cost.size(); ++i) {
    if (std::find(v.essential.begin(), v.essential.end(), static_cast<int>(i)) ==
        v.essential.end())
      v.dropped.push_back(static_cast<int>(i));
  }
  return v;
}

double MultiAffinePiece::operator()(std::span<const double> x) const {
  if (x.size() != coef.size()) throw InputError("dimension mismatch");
  double v = offset;
  for (std::size_t k = 0; k < x.size(); ++k) v += coef[k] * x[k];
  return v;
}

std::vector<MultiAffinePiece> min_coordinate_pieces(int m) {
  std::vector<MultiAffinePiece> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    out[i].coef.assign(static_cast<std::size_t>(m), 0.0);
    out[i].coef[i] = 1.0;
  }
  return out;
}

NondegeneracyReport validate_mm_nondegeneracy(
    std::span<const MultiAffinePiece> pieces) {
  const std::size_t m = pieces.size();
  if (m < 2) throw InputError("need at least two pieces");
  double scale = 1e-300;
  for (const auto& p : pieces) {
    if (p.coef.size() != m)
      throw InputError("number of pieces must equal the number of marginals");
    for (double c : p.coef) scale = std::max(scale, std::abs(c));
    scale = std::max(scale, std::abs(p.offset));
  }
  const double tau = 1e-12 * scale;

  // Rows: (coef_1 - coef_k) . x = offset_k - offset_1, k = 2..m.
  const std::size_t rows = m - 1;
  std::vector<std::vector<double>> A(rows, std::vector<double>(m + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < m; ++c)
      A[r][c] = pieces[0].coef[c] - pieces[r + 1].coef[c];
    A[r][m] = pieces[r + 1].offset - pieces[0].offset;
  }

  // Forward elimination with partial pivoting, recording pivot columns.
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m && r < rows; ++c) {
    std::size_t best = r;
    for (std::size_t k = r + 1; k < rows; ++k)
      if (std::abs(A[k][c]) > std::abs(A[best][c])) best = k;
    if (std::abs(A[best][c]) <= tau) continue;
    std::swap(A[r], A[best]);
    for (std::size_t k = 0; k < rows; ++k) {
      if (k == r) continue;
      const double f = A[k][c] / A[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j <= m; ++j) A[k][j] -= f * A[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }

  NondegeneracyReport report;
  if (pivot_col.size() < rows) {
    report.reason = "coincidence set is not a line (rank deficient)";
    return report;
  }
  std::size_t free_col = 0;
  for (std::size_t c = 0; c < m; ++c) {
    if (std::find(pivot_col.begin(), pivot_col.end(), c) == pivot_col.end()) {
      free_col = c;
      break;
    }
  }
  std::vector<double> v(m, 0.0), point(m, 0.0);
  v[free_col] = 1.0;
  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t c = pivot_col[k];
    v[c] = -A[k][free_col] / A[k][c];
    point[c] = A[k][m] / A[k][c];
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  std::size_t lead = 0;
  while (lead < m && std::abs(v[lead]) <= tau * norm) ++lead;
  const double sign = (lead < m && v[lead] < 0.0) ? -1.0 : 1.0;
  for (double& x : v) x *= sign / norm;
  report.direction = v;
  report.point = point;
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(v[k]) <= 1e-12) {
      report.reason = "direction has a zero component at coordinate " +
                      std::to_string(k + 1);
      return report;
    }
  }
  report.passed = true;
  return report;
}

SupportRegion SupportRegion::anti_monotone(double x0, double y0) {
  return {{x0, y0}, {Relation::GreaterEq, Relation::GreaterEq}};
}

SupportRegion SupportRegion::comonotone(double x0, double y0) {
  return {{x0, y0}, {Relation::GreaterEq, Relation::LessEq}};
}

SupportRegion SupportRegion::from_direction(std::vector<double> anchor,
                                            std::span<const double> direction) {
  if (anchor.size() != direction.size()) throw InputError("dimension mismatch");
  SupportRegion r;
  r.anchor = std::move(anchor);
  for (double v : direction)
    r.signs.push_back(v > 0.0 ? Relation::GreaterEq : Relation::LessEq);
  return r;
}

bool SupportRegion::is_anti_monotone() const {
  return signs.size() == 2 && signs[0] == signs[1];
}

namespace {
bool satisfies(double x, Relation rel, double anchor, double tol) {
  return rel == Relation::LessEq ? x <= anchor + tol : x >= anchor - tol;
}
Relation flip(Relation r) {
  return r == Relation::LessEq ? Relation::GreaterEq : Relation::LessEq;
}
}  // namespace

bool region_membership(const SupportRegion& region,
                       std::span<const double> point, double tol) {
  const std::size_t m = region.anchor.size();
  if (region.signs.size() != m || point.size() != m)
    throw InputError("dimension mismatch in region membership");
  for (std::size_t i = 0; i < m; ++i) {
    bool ok = satisfies(point[i], flip(region.signs[i]), region.anchor[i], tol);
    for (std::size_t j = 0; ok && j < m; ++j) {
      if (j != i) ok = satisfies(point[j], region.signs[j], region.anchor[j], tol);
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace minaffine
