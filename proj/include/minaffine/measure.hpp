#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace minaffine {

/// One knot of a piecewise-linear CDF.
struct CdfKnot {
  double x;
  double F;
};

/// An atomless probability measure on the real line, stored as a continuous
/// piecewise-linear CDF. The density is constant on every segment, so mass,
/// quantile and partial first moments are all closed-form per segment.
///
/// Immutable after construction.
class Measure1D {
 public:
  /// Knots must have strictly increasing x, non-decreasing F, F.front() == 0
  /// and F.back() == 1. Throws InputError otherwise.
  explicit Measure1D(std::vector<CdfKnot> knots);

  double cdf(double x) const;
  /// Least x with F(x) >= p. p is clamped to [0, 1].
  double quantile(double p) const;
  /// mu([lo, hi)); zero when hi <= lo.
  double mass(double lo, double hi) const;
  /// Integral of x dmu over [lo, hi). Extended reals are allowed.
  double partial_first_moment(double lo, double hi) const;
  /// Integral of x dmu over the mass slice between levels p_lo and p_hi,
  /// i.e. over [quantile(p_lo), quantile(p_hi)).
  double moment_between_levels(double p_lo, double p_hi) const;

  double mean() const { return moments_.back(); }
  double support_lo() const { return knots_.front().x; }
  double support_hi() const { return knots_.back().x; }
  double support_width() const { return support_hi() - support_lo(); }
  const std::vector<CdfKnot>& knots() const { return knots_; }

  /// Law of scale * X + shift. A negative scale reflects the measure.
  Measure1D affine_image(double scale, double shift) const;

 private:
  // Integral of x dmu over (-inf, x].
  double moment_below(double x) const;
  // Same, located by segment index k with knots_[k].x <= x <= knots_[k+1].x.
  double moment_in_segment(std::size_t k, double x) const;

  std::vector<CdfKnot> knots_;
  std::vector<double> moments_;  // moments_[k] = moment_below(knots_[k].x)
};

namespace spec {
struct Uniform {
  double a, b;
};
struct Triangular {
  double a, mode, b;
};
/// Piecewise-constant density: densities[i] on [breaks[i], breaks[i+1]).
/// Normalized on construction.
struct PiecewiseDensity {
  std::vector<double> breaks;
  std::vector<double> densities;
};
struct Gaussian {
  double mean, sd;
};
struct Empirical {
  std::vector<double> samples;
};
}  // namespace spec

struct MeasureSpec {
  std::variant<spec::Uniform, spec::Triangular, spec::PiecewiseDensity,
               spec::Gaussian, spec::Empirical>
      family;
  /// Tail mass cut from each side of unbounded families.
  double truncation = 1e-9;
};

Measure1D build_measure(const MeasureSpec& spec);

/// Reads one number per line; blank lines are skipped.
std::vector<double> read_samples(const std::filesystem::path& path);

struct Atom {
  double position;
  double weight;
};

/// count atoms at the mid-level quantiles q((k - 1/2) / count), weight
/// 1/count each. The last weight absorbs rounding so the weights sum to 1.
std::vector<Atom> discretize(const Measure1D& m, int count);

}  // namespace minaffine
