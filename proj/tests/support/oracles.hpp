#pragma once

// Slow reference implementations used only to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

inline double simes(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  double best = 1.0;
  const double m = static_cast<double>(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) best = std::min(best, m * p[k] / static_cast<double>(k + 1));
  return best;
}

inline bool fisher_rejects(const std::vector<double>& p, double alpha) {
  double stat = 0.0;
  for (double x : p) stat += -2.0 * std::log(std::max(x, 1e-300));
  const boost::math::chi_squared chi(2.0 * static_cast<double>(p.size()));
  return stat > boost::math::quantile(boost::math::complement(chi, alpha));
}

// Closed testing over every subset: H_i is rejected iff every subset that
// contains i is rejected by its local test.
inline std::vector<std::size_t> closed_testing(const std::vector<double>& p, double alpha,
                                               const std::function<bool(const std::vector<double>&, double)>& local) {
  const std::size_t K = p.size();
  const std::uint32_t full = (1u << K);
  std::vector<char> rejected(full, 0);
  for (std::uint32_t s = 1; s < full; ++s) {
    std::vector<double> sub;
    for (std::size_t i = 0; i < K; ++i) {
      if (s & (1u << i)) sub.push_back(p[i]);
    }
    rejected[s] = local(sub, alpha);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < K; ++i) {
    bool ok = true;
    for (std::uint32_t s = 1; s < full && ok; ++s) {
      if ((s & (1u << i)) && !rejected[s]) ok = false;
    }
    if (ok) out.push_back(i);
  }
  return out;
}

inline std::vector<std::size_t> closed_simes(const std::vector<double>& p, double alpha) {
  return closed_testing(p, alpha, [](const std::vector<double>& s, double a) { return simes(s) <= a; });
}

inline std::vector<std::size_t> closed_fisher(const std::vector<double>& p, double alpha) {
  return closed_testing(p, alpha, fisher_rejects);
}

inline std::vector<std::size_t> bonferroni(const std::vector<double>& p, double alpha) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= alpha / static_cast<double>(p.size())) out.push_back(i);
  }
  return out;
}

// Grenander estimate as weighted antitonic regression of the raw ECDF
// slopes, with adjacent equal heights merged.
struct StepDensity {
  std::vector<double> breakpoints;
  std::vector<double> heights;
};

inline StepDensity grenander_pava(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  // distinct support points with their masses
  std::vector<double> pts, mass;
  for (double v : x) {
    if (!pts.empty() && pts.back() == v) {
      mass.back() += 1.0 / n;
    } else {
      pts.push_back(v);
      mass.push_back(1.0 / n);
    }
  }
  struct Block {
    double lo, hi, m;
    double height() const { return m / (hi - lo); }
  };
  std::vector<Block> st;
  double lo = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Block b{lo, pts[i], mass[i]};
    lo = pts[i];
    while (!st.empty() && st.back().height() <= b.height()) {
      b = {st.back().lo, b.hi, st.back().m + b.m};
      st.pop_back();
    }
    st.push_back(b);
  }
  StepDensity d;
  d.breakpoints.push_back(0.0);
  for (const auto& b : st) {
    d.breakpoints.push_back(b.hi);
    d.heights.push_back(b.height());
  }
  if (d.breakpoints.back() < 1.0) {
    d.breakpoints.push_back(1.0);
    d.heights.push_back(0.0);
  }
  return d;
}

// Minimal property driver: runs `check` on `n` generated cases and reports
// the index of the first failing case, or -1.
template <class Gen, class Check>
int for_all(int n, std::uint64_t seed, Gen gen, Check check) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    auto c = gen(rng);
    if (!check(c)) return i;
  }
  return -1;
}

// Random p-vector with a mix of tiny, moderate and tied values.
inline std::vector<double> random_pvalues(std::mt19937_64& rng, std::size_t K) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> p(K);
  for (auto& v : p) {
    const double r = U(rng);
    if (r < 0.3) {
      v = std::pow(U(rng), 4.0) * 0.05;
    } else if (r < 0.35 && &v != &p[0]) {
      v = p[0];
    } else {
      v = U(rng);
    }
    v = std::clamp(v, 1e-12, 1.0);
  }
  return p;
}

}  // namespace oracle
