#include "minaffine/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "minaffine/error.hpp"

namespace minaffine {

namespace {

constexpr std::size_t kTriangularSegments = 1024;
constexpr std::size_t kGaussianSegments = 4096;

// Normal CDF written with erfc so both tails keep relative precision.
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

Measure1D::Measure1D(std::vector<CdfKnot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw InputError("a CDF needs at least two knots");
  for (const auto& k : knots_) {
    if (!std::isfinite(k.x) || !std::isfinite(k.F))
      throw InputError("CDF knots must be finite");
  }
  if (knots_.front().F != 0.0 || knots_.back().F != 1.0)
    throw InputError("CDF must run from 0 to 1");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k].x > knots_[k - 1].x))
      throw InputError("CDF knots must have strictly increasing x (no atoms)");
    if (knots_[k].F < knots_[k - 1].F)
      throw InputError("CDF must be non-decreasing");
  }
  moments_.resize(knots_.size());
  moments_[0] = 0.0;
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    const double dF = knots_[k + 1].F - knots_[k].F;
    moments_[k + 1] = moments_[k] + dF * 0.5 * (knots_[k].x + knots_[k + 1].x);
  }
}

double Measure1D::cdf(double x) const {
  if (x <= knots_.front().x) return 0.0;
  if (x >= knots_.back().x) return 1.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                             [](double v, const CdfKnot& k) { return v < k.x; });
  const CdfKnot& r = *it;
  const CdfKnot& l = *(it - 1);
  return l.F + (r.F - l.F) * ((x - l.x) / (r.x - l.x));
}

double Measure1D::quantile(double p) const {
  if (!(p > 0.0)) return knots_.front().x;
  p = std::min(p, 1.0);
  auto it = std::lower_bound(knots_.begin(), knots_.end(), p,
                             [](const CdfKnot& k, double v) { return k.F < v; });
  // it->F >= p and (it-1)->F < p, so the segment has positive slope.
  const CdfKnot& r = *it;
  const CdfKnot& l = *(it - 1);
  const double x = l.x + (r.x - l.x) * ((p - l.F) / (r.F - l.F));
  return std::min(x, r.x);
}

double Measure1D::mass(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  return cdf(hi) - cdf(lo);
}

double Measure1D::moment_in_segment(std::size_t k, double x) const {
  const CdfKnot& l = knots_[k];
  const CdfKnot& r = knots_[k + 1];
  const double density = (r.F - l.F) / (r.x - l.x);
  return moments_[k] + density * (x - l.x) * 0.5 * (x + l.x);
}

double Measure1D::moment_below(double x) const {
  if (x <= knots_.front().x) return 0.0;
  if (x >= knots_.back().x) return moments_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                             [](double v, const CdfKnot& k) { return v < k.x; });
  return moment_in_segment(static_cast<std::size_t>(it - knots_.begin()) - 1, x);
}

double Measure1D::partial_first_moment(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  return moment_below(hi) - moment_below(lo);
}

double Measure1D::moment_between_levels(double p_lo, double p_hi) const {
  if (!(p_hi > p_lo)) return 0.0;
  const double lo = p_lo <= 0.0 ? -std::numeric_limits<double>::infinity()
                                : quantile(p_lo);
  const double hi = p_hi >= 1.0 ? std::numeric_limits<double>::infinity()
                                : quantile(p_hi);
  return partial_first_moment(lo, hi);
}

Measure1D Measure1D::affine_image(double scale, double shift) const {
  if (scale == 0.0 || !std::isfinite(scale) || !std::isfinite(shift))
    throw InputError("affine image needs a finite non-zero scale");
  std::vector<CdfKnot> out;
  out.reserve(knots_.size());
  if (scale > 0.0) {
    for (const auto& k : knots_) out.push_back({scale * k.x + shift, k.F});
  } else {
    for (auto it = knots_.rbegin(); it != knots_.rend(); ++it)
      out.push_back({scale * it->x + shift, 1.0 - it->F});
    out.front().F = 0.0;
    out.back().F = 1.0;
  }
  return Measure1D(std::move(out));
}

namespace {

Measure1D from_cdf_function(double lo, double hi, std::size_t segments,
                            auto&& F) {
  std::vector<CdfKnot> knots(segments + 1);
  for (std::size_t k = 0; k <= segments; ++k) {
    const double x = k == segments
                         ? hi
                         : lo + (hi - lo) * (static_cast<double>(k) /
                                             static_cast<double>(segments));
    knots[k] = {x, std::clamp(F(x), 0.0, 1.0)};
  }
  knots.front().F = 0.0;
  knots.back().F = 1.0;
  for (std::size_t k = 1; k < knots.size(); ++k)
    knots[k].F = std::max(knots[k].F, knots[k - 1].F);
  return Measure1D(std::move(knots));
}

Measure1D build(const spec::Uniform& u, double) {
  if (!std::isfinite(u.a) || !std::isfinite(u.b) || !(u.b > u.a))
    throw InputError("uniform(a, b) needs finite a < b");
  return Measure1D({{u.a, 0.0}, {u.b, 1.0}});
}

Measure1D build(const spec::Triangular& t, double) {
  if (!(t.b > t.a) || t.mode < t.a || t.mode > t.b || !std::isfinite(t.a) ||
      !std::isfinite(t.b))
    throw InputError("triangular(a, mode, b) needs a <= mode <= b, a < b");
  const double width = t.b - t.a;
  return from_cdf_function(t.a, t.b, kTriangularSegments, [&](double x) {
    if (x <= t.mode) {
      return t.mode == t.a ? 0.0 : (x - t.a) * (x - t.a) / (width * (t.mode - t.a));
    }
    return 1.0 - (t.b - x) * (t.b - x) / (width * (t.b - t.mode));
  });
}

Measure1D build(const spec::PiecewiseDensity& d, double) {
  if (d.breaks.size() < 2 || d.densities.size() + 1 != d.breaks.size())
    throw InputError("piecewise density needs k+1 breaks and k densities");
  for (std::size_t i = 0; i < d.breaks.size(); ++i) {
    if (!std::isfinite(d.breaks[i]))
      throw InputError("piecewise density breaks must be finite");
    if (i > 0 && !(d.breaks[i] > d.breaks[i - 1]))
      throw InputError("piecewise density breaks must be strictly increasing");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < d.densities.size(); ++i) {
    if (!(d.densities[i] >= 0.0) || !std::isfinite(d.densities[i]))
      throw InputError("piecewise density values must be finite and >= 0");
    total += d.densities[i] * (d.breaks[i + 1] - d.breaks[i]);
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw InputError("piecewise density is not normalizable");
  // Trim zero-density ends so the support is tight.
  std::size_t first = 0, last = d.densities.size();
  while (d.densities[first] == 0.0) ++first;
  while (d.densities[last - 1] == 0.0) --last;
  std::vector<CdfKnot> knots;
  knots.push_back({d.breaks[first], 0.0});
  double acc = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    acc += d.densities[i] * (d.breaks[i + 1] - d.breaks[i]);
    knots.push_back({d.breaks[i + 1], acc / total});
  }
  knots.back().F = 1.0;
  return Measure1D(std::move(knots));
}

Measure1D build(const spec::Gaussian& g, double truncation) {
  if (!std::isfinite(g.mean) || !(g.sd > 0.0) || !std::isfinite(g.sd))
    throw InputError("gaussian(mean, sd) needs sd > 0");
  if (!(truncation > 0.0) || truncation > 1e-6)
    throw InputError("truncation mass must lie in (0, 1e-6]");
  const boost::math::normal_distribution<double> n01;
  const double z = -boost::math::quantile(n01, truncation);
  const double lo = g.mean - z * g.sd;
  const double hi = g.mean + z * g.sd;
  const double F_lo = std_normal_cdf(-z);
  const double F_hi = std_normal_cdf(z);
  return from_cdf_function(lo, hi, kGaussianSegments, [&](double x) {
    return (std_normal_cdf((x - g.mean) / g.sd) - F_lo) / (F_hi - F_lo);
  });
}

Measure1D build(const spec::Empirical& e, double) {
  std::vector<double> xs = e.samples;
  for (double v : xs)
    if (!std::isfinite(v)) throw InputError("samples must be finite");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  std::vector<CdfKnot> knots;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && xs[j] == xs[i]) ++j;
    // mean rank of the repeated value
    const double rank = 0.5 * static_cast<double>(i + j - 1);
    knots.push_back({xs[i], n > 1 ? rank / static_cast<double>(n - 1) : 0.0});
    i = j;
  }
  if (knots.size() < 2)
    throw InputError("empirical measure needs at least 2 distinct samples");
  knots.front().F = 0.0;
  knots.back().F = 1.0;
  return Measure1D(std::move(knots));
}

}  // namespace

Measure1D build_measure(const MeasureSpec& spec) {
  return std::visit([&](const auto& f) { return build(f, spec.truncation); },
                    spec.family);
}

std::vector<double> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample file " + path.string());
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v;
    if (!(ls >> v))
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<Atom> discretize(const Measure1D& m, int count) {
  if (count < 1) throw InputError("atom count must be positive");
  std::vector<Atom> atoms(static_cast<std::size_t>(count));
  const double w = 1.0 / count;
  double used = 0.0;
  for (int k = 0; k < count; ++k) {
    atoms[k].position = m.quantile((k + 0.5) / count);
    atoms[k].weight = w;
    if (k + 1 < count) used += w;
  }
  atoms.back().weight = 1.0 - used;
  return atoms;
}

}  // namespace minaffine
