#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "blockfwer/densities.hpp"

namespace bfwer {

namespace {
// p-values reported as exactly 0 would give an infinite first slope.
constexpr double kZeroFloor = 1e-12;

struct Pt {
  double x;
  double y;
};
}  // namespace

double GrenanderFit::integral() const {
  double s = 0.0;
  for (std::size_t i = 0; i < heights.size(); ++i) {
    s += heights[i] * (breakpoints[i + 1] - breakpoints[i]);
  }
  return s;
}

GrenanderFit fit_grenander(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("fit_grenander: empty sample");
  std::vector<double> xs(samples.begin(), samples.end());
  for (double& x : xs) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument("fit_grenander: sample outside [0,1]");
    }
    x = std::max(x, kZeroFloor);
  }
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());

  // ECDF vertices with ties merged into one jump
  std::vector<Pt> pts{{0.0, 0.0}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
    pts.push_back({xs[i], static_cast<double>(i + 1) / n});
  }
  if (pts.back().x < 1.0) pts.push_back({1.0, 1.0});

  // upper hull; collinear points are dropped so slopes strictly decrease
  std::vector<Pt> hull;
  for (const Pt& p : pts) {
    while (hull.size() >= 2) {
      const Pt& a = hull[hull.size() - 2];
      const Pt& b = hull.back();
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }

  GrenanderFit fit;
  fit.sample_size = xs.size();
  fit.breakpoints.reserve(hull.size());
  for (const Pt& p : hull) fit.breakpoints.push_back(p.x);
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    fit.heights.push_back((hull[i + 1].y - hull[i].y) / (hull[i + 1].x - hull[i].x));
  }
  return fit;
}

}  // namespace bfwer
