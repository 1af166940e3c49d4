#include "minaffine/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace minaffine {

namespace {

struct Vertex {
  std::vector<double> x;
  double f;
};

// One Nelder-Mead descent from a fresh simplex around `start`.
NelderMeadResult descend(const Objective& f, const std::vector<double>& start,
                         double step, const NelderMeadOptions& opt,
                         int budget) {
  const std::size_t d = start.size();
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };

  std::vector<Vertex> s;
  s.push_back({start, eval(start)});
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> x = start;
    x[k] += step;
    s.push_back({x, eval(x)});
  }

  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  bool converged = false;
  while (evals < budget) {
    std::sort(s.begin(), s.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    double diam = 0.0;
    for (std::size_t v = 1; v <= d; ++v)
      for (std::size_t k = 0; k < d; ++k)
        diam = std::max(diam, std::abs(s[v].x[k] - s[0].x[k]));
    if (diam <= opt.x_tol && s[d].f - s[0].f <= opt.f_tol) {
      converged = true;
      break;
    }
    if (diam <= opt.x_tol * 1e-3) {
      // Collapsed simplex on a flat stretch; nothing more to gain here.
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v < d; ++v)
      for (std::size_t k = 0; k < d; ++k) centroid[k] += s[v].x[k];
    for (double& c : centroid) c /= static_cast<double>(d);

    const Vertex& worst = s[d];
    for (std::size_t k = 0; k < d; ++k)
      xr[k] = centroid[k] + (centroid[k] - worst.x[k]);
    const double fr = eval(xr);

    if (fr < s[0].f) {
      for (std::size_t k = 0; k < d; ++k)
        xe[k] = centroid[k] + 2.0 * (centroid[k] - worst.x[k]);
      const double fe = eval(xe);
      s[d] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      continue;
    }
    if (fr < s[d - 1].f) {
      s[d] = {xr, fr};
      continue;
    }
    // Contraction, outside when the reflection beat the worst vertex.
    const bool outside = fr < worst.f;
    const std::vector<double>& toward = outside ? xr : worst.x;
    for (std::size_t k = 0; k < d; ++k)
      xc[k] = centroid[k] + 0.5 * (toward[k] - centroid[k]);
    const double fc = eval(xc);
    if (fc < std::min(fr, worst.f)) {
      s[d] = {xc, fc};
      continue;
    }
    for (std::size_t v = 1; v <= d; ++v) {
      for (std::size_t k = 0; k < d; ++k)
        s[v].x[k] = s[0].x[k] + 0.5 * (s[v].x[k] - s[0].x[k]);
      s[v].f = eval(s[v].x);
    }
  }
  auto best = std::min_element(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) {
    return a.f < b.f;
  });
  return {best->x, best->f, evals, converged};
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             const NelderMeadOptions& options) {
  if (start.empty()) {
    return {start, f(start), 1, true};
  }
  NelderMeadResult best =
      descend(f, start, options.initial_step, options, options.max_evaluations);
  int used = best.evaluations;
  double step = options.initial_step;
  for (int r = 0; r < options.restarts && used < options.max_evaluations; ++r) {
    step *= 0.1;
    NelderMeadResult next =
        descend(f, best.x, step, options, options.max_evaluations - used);
    used += next.evaluations;
    const bool improved = next.value < best.value;
    if (improved) {
      next.evaluations = used;
      best = std::move(next);
    }
    best.evaluations = used;
    if (!improved) break;
  }
  return best;
}

}  // namespace minaffine
