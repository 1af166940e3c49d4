#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace minaffine {

class Measure1D;

/// l(x, y) = a x + b y + c0
struct AffinePiece {
  double a = 0.0;
  double b = 0.0;
  double c0 = 0.0;

  double operator()(double x, double y) const { return a * x + b * y + c0; }
};

/// Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi].
struct Box {
  double x_lo, x_hi, y_lo, y_hi;
};

/// Product of the two supports, each side widened by `expand` times its width.
Box working_box(const Measure1D& mu, const Measure1D& nu, double expand = 0.01);

struct Evaluation {
  double value;
  int argmin;  // zero-based, lowest index wins ties
};

/// c = min_i l_i, the lower envelope of a non-empty affine family.
class MinAffineCost {
 public:
  explicit MinAffineCost(std::vector<AffinePiece> pieces);

  Evaluation evaluate(double x, double y) const;
  double operator()(double x, double y) const { return evaluate(x, y).value; }

  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  const AffinePiece& operator[](std::size_t i) const { return pieces_[i]; }

  /// Largest absolute coefficient over the family (at least 1e-300).
  double coefficient_scale() const;
  /// Family restricted to the given (zero-based) indices, in that order.
  MinAffineCost subset(std::span<const int> indices) const;

 private:
  std::vector<AffinePiece> pieces_;
};

enum class PairDefect { IdenticalPieces, ParallelPlanes, EqualXSlopes, EqualYSlopes };

struct PairIssue {
  int i, j;  // zero-based, i < j
  PairDefect defect;

  /// e.g. "pair (1,2): equal x-slopes" (one-based, as shown to users)
  std::string describe() const;
};

struct PairwiseReport {
  bool passed = true;
  std::vector<PairIssue> issues;
};

/// Every pair must have a_i != a_j and b_i != b_j (relative tolerance
/// 1e-12 of the largest coefficient), i.e. the coincidence line exists and
/// is parallel to neither axis.
PairwiseReport validate_pairwise_A(const MinAffineCost& cost);

/// Largest margin min_{j != i} (l_j - l_i) over the box; +inf for n = 1.
double essential_margin(const MinAffineCost& cost, int i, const Box& box);

/// Zero-based indices of pieces that are strictly the minimum somewhere in
/// the interior of the box.
std::vector<int> essential_pieces(const MinAffineCost& cost, const Box& box);

struct CostValidation {
  PairwiseReport pairwise;
  std::vector<int> essential;
  std::vector<int> dropped;

  bool valid() const { return pairwise.passed && !essential.empty(); }
};

CostValidation validate_cost(const MinAffineCost& cost, const Box& box);

/// Multi-marginal affine piece: sum_k coef[k] x_k + offset.
struct MultiAffinePiece {
  std::vector<double> coef;
  double offset = 0.0;

  double operator()(std::span<const double> x) const;
};

/// The m pieces x_1, ..., x_m.
std::vector<MultiAffinePiece> min_coordinate_pieces(int m);

struct NondegeneracyReport {
  bool passed = false;
  /// Unit direction of {l_1 = ... = l_m}, first non-zero component positive.
  std::vector<double> direction;
  /// A point on the coincidence line (free coordinate set to zero).
  std::vector<double> point;
  std::string reason;
};

/// Solves l_1 = ... = l_m by elimination. Passes iff the solution set is a
/// line whose direction has no zero component. Throws InputError when the
/// number of pieces differs from their dimension.
NondegeneracyReport validate_mm_nondegeneracy(
    std::span<const MultiAffinePiece> pieces);

enum class Relation { LessEq, GreaterEq };

/// Orthant union anchored at M: the point belongs iff for some i the
/// coordinate x_i satisfies the flipped relation against M_i and every other
/// coordinate x_j satisfies signs[j] against M_j. For m = 2, signs (>=, >=)
/// is the anti-monotone quadrant pair and (>=, <=) the comonotone pair.
struct SupportRegion {
  std::vector<double> anchor;
  std::vector<Relation> signs;

  static SupportRegion anti_monotone(double x0, double y0);
  static SupportRegion comonotone(double x0, double y0);
  /// signs[i] = >= where v_i > 0 and <= where v_i < 0.
  static SupportRegion from_direction(std::vector<double> anchor,
                                      std::span<const double> direction);

  bool is_anti_monotone() const;
};

/// Throws InputError on dimension mismatch. `tol` loosens every inequality.
bool region_membership(const SupportRegion& region,
                       std::span<const double> point, double tol = 1e-9);

}  // namespace minaffine
