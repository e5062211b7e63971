#include "blockfwer/allocation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace bfwer {

namespace {

constexpr double kMaxLevel = 1.0 - 1e-12;

// Weighted pool-adjacent-violators for a non-increasing fit.
std::vector<double> antitonic(const std::vector<double>& y, const std::vector<double>& w) {
  struct Block {
    double sum;
    double weight;
    std::size_t count;
  };
  std::vector<Block> st;
  for (std::size_t i = 0; i < y.size(); ++i) {
    st.push_back({y[i] * w[i], w[i], 1});
    while (st.size() >= 2) {
      const Block& b = st.back();
      const Block& a = st[st.size() - 2];
      if (a.sum / a.weight < b.sum / b.weight) {
        Block m{a.sum + b.sum, a.weight + b.weight, a.count + b.count};
        st.pop_back();
        st.back() = m;
      } else {
        break;
      }
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : st) out.insert(out.end(), b.count, b.sum / b.weight);
  return out;
}

double sidak_cost(const std::vector<double>& levels) {
  double s = 0.0;
  for (double l : levels) s += -std::log1p(-l);
  return s;
}

std::vector<double> inverse_all(const CurveRefs& curves, double mu, Budget b) {
  std::vector<double> out(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    out[i] = b == Budget::bonferroni ? curves[i]->right_inverse(mu) : curves[i]->sidak_right_inverse(mu);
  }
  return out;
}

double budget_used(const std::vector<double>& levels, Budget b) {
  return b == Budget::bonferroni ? std::accumulate(levels.begin(), levels.end(), 0.0) : sidak_cost(levels);
}

AllocationResult kkt_bisection(const CurveRefs& curves, double alpha, double eps, Budget budget) {
  if (curves.empty()) throw std::invalid_argument("allocation needs at least one curve");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("allocation alpha must lie in (0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("allocation eps must be positive");
  const std::size_t B = curves.size();
  const double target = budget == Budget::bonferroni ? alpha : -std::log1p(-alpha);

  AllocationResult res;
  res.budget = budget;
  double mu_bar = 0.0;
  for (const PowerCurve* c : curves) {
    mu_bar = std::max(mu_bar, c->max_slope());
    res.cap_binding = res.cap_binding || c->slope_capped();
  }
  res.mu_bar = mu_bar;

  if (!(mu_bar > 0.0)) {
    // every curve is flat: any binding allocation is optimal
    const double l = budget == Budget::bonferroni ? alpha / B : -std::expm1(std::log1p(-alpha) / B);
    res.levels.assign(B, l);
    res.binding = true;
    return res;
  }

  double lo = 0.0;
  double hi = mu_bar * (1.0 + 1e-12);
  std::vector<double> l_hi = inverse_all(curves, hi, budget);
  if (budget_used(l_hi, budget) >= target) {
    // capped mu_bar still over-spends; the cap binds
    res.cap_binding = true;
  }
  while (hi - lo >= eps) {
    const double mid = lo + 0.5 * (hi - lo);
    ++res.iterations;
    const std::vector<double> lv = inverse_all(curves, mid, budget);
    const double used = budget_used(lv, budget);
    if (used > target) {
      lo = mid;
    } else {
      hi = mid;
      l_hi = lv;
      if (target - used <= eps) break;
    }
  }
  res.mu_star = hi;

  // Close the budget: move from the under-spending levels at hi toward the
  // levels at lo (or toward a proportional scale-up) until the budget binds.
  std::vector<double> l_lo = lo > 0.0 ? inverse_all(curves, lo, budget) : std::vector<double>(B, kMaxLevel);
  for (double& x : l_lo) x = std::min(x, kMaxLevel);
  if (budget_used(l_lo, budget) < target) {
    // bracket lost to clamping; fall back to proportional scaling
    l_lo.assign(B, kMaxLevel);
  }
  auto blend = [&](double t) {
    std::vector<double> v(B);
    for (std::size_t i = 0; i < B; ++i) v[i] = l_hi[i] + t * (l_lo[i] - l_hi[i]);
    return v;
  };
  double t_lo = 0.0, t_hi = 1.0;
  if (budget == Budget::bonferroni) {
    const double s_hi = budget_used(l_hi, budget);
    const double s_lo = budget_used(l_lo, budget);
    const double t = s_lo > s_hi ? (alpha - s_hi) / (s_lo - s_hi) : 0.0;
    res.levels = blend(std::clamp(t, 0.0, 1.0));
  } else {
    for (int k = 0; k < 200 && t_hi - t_lo > 1e-16; ++k) {
      const double t = 0.5 * (t_lo + t_hi);
      if (budget_used(blend(t), budget) > target) {
        t_hi = t;
      } else {
        t_lo = t;
      }
    }
    res.levels = blend(t_lo);
  }
  res.binding = std::abs(budget_used(res.levels, budget) - target) <= 1e-9;
  return res;
}

}  // namespace

std::string to_string(Budget b) { return b == Budget::bonferroni ? "bonferroni" : "sidak"; }

Budget budget_from_string(const std::string& s) {
  if (s == "bonferroni") return Budget::bonferroni;
  if (s == "sidak") return Budget::sidak;
  throw std::invalid_argument("unknown budget '" + s + "'");
}

ValueCurve::ValueCurve(std::vector<double> alphas, std::vector<double> values, std::string block_id)
    : alphas_(std::move(alphas)), raw_(std::move(values)), block_id_(std::move(block_id)) {
  if (alphas_.empty() || alphas_.size() != raw_.size()) {
    throw std::invalid_argument("ValueCurve: alphas and values must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (!(alphas_[i] > 0.0 && alphas_[i] < 1.0)) throw std::invalid_argument("ValueCurve: alpha outside (0,1)");
    if (i > 0 && !(alphas_[i] > alphas_[i - 1])) throw std::invalid_argument("ValueCurve: alphas must increase");
  }
  std::vector<double> s(alphas_.size()), w(alphas_.size());
  double px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    w[i] = alphas_[i] - px;
    s[i] = (raw_[i] - py) / w[i];
    px = alphas_[i];
    py = raw_[i];
  }
  slopes_ = antitonic(s, w);
  for (double& x : slopes_) x = std::max(x, 0.0);
  values_.resize(alphas_.size());
  double acc = 0.0;
  px = 0.0;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    acc += slopes_[i] * (alphas_[i] - px);
    values_[i] = acc;
    px = alphas_[i];
  }
}

double ValueCurve::value(double a) const {
  if (a <= 0.0) return 0.0;
  double px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (a <= alphas_[i]) return py + slopes_[i] * (a - px);
    px = alphas_[i];
    py = values_[i];
  }
  return values_.back();
}

double ValueCurve::right_derivative(double a) const {
  if (a < 0.0) a = 0.0;
  // segment i covers [x_i, x_{i+1}) for the right derivative
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (a < alphas_[i]) return slopes_[i];
  }
  return 0.0;
}

double ValueCurve::right_inverse(double mu) const {
  if (mu <= 0.0) return kMaxLevel;
  double best = 0.0;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (slopes_[i] >= mu) best = alphas_[i];
  }
  return best;
}

double ValueCurve::sidak_right_inverse(double mu) const {
  if (mu <= 0.0) return kMaxLevel;
  double best = 0.0;
  double px = 0.0;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (slopes_[i] > 0.0) {
      const double cut = std::min(alphas_[i], 1.0 - mu / slopes_[i]);
      if (cut >= px) best = std::max(best, cut);
    }
    px = alphas_[i];
  }
  return std::min(best, kMaxLevel);
}

double ValueCurve::concavity_adjustment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < raw_.size(); ++i) m = std::max(m, std::abs(raw_[i] - values_[i]));
  return m;
}

nlohmann::json ValueCurve::to_json() const {
  return {{"block_id", block_id_}, {"alphas", alphas_}, {"values", raw_}, {"concave_values", values_}};
}

ValueCurve ValueCurve::from_json(const nlohmann::json& j) {
  return ValueCurve(j.at("alphas").get<std::vector<double>>(), j.at("values").get<std::vector<double>>(),
                    j.value("block_id", std::string{}));
}

PowerLawCurve::PowerLawCurve(double scale, double exponent, std::string block_id, double a_min)
    : c_(scale), p_(exponent), block_id_(std::move(block_id)), a_min_(a_min) {
  if (!(scale > 0.0) || !(exponent > 0.0 && exponent < 1.0)) {
    throw std::invalid_argument("PowerLawCurve needs scale > 0 and 0 < exponent < 1");
  }
}

double PowerLawCurve::value(double a) const { return a <= 0.0 ? 0.0 : c_ * std::pow(a, p_); }

double PowerLawCurve::right_derivative(double a) const {
  a = std::max(a, a_min_);
  return c_ * p_ * std::pow(a, p_ - 1.0);
}

double PowerLawCurve::right_inverse(double mu) const {
  if (mu <= 0.0) return kMaxLevel;
  return std::min(kMaxLevel, std::pow(mu / (c_ * p_), 1.0 / (p_ - 1.0)));
}

double PowerLawCurve::sidak_right_inverse(double mu) const {
  if (mu <= 0.0) return kMaxLevel;
  // (1 - a) c p a^(p-1) is decreasing in a; bisect for equality
  auto h = [&](double a) { return (1.0 - a) * right_derivative(a) - mu; };
  double lo = 0.0, hi = kMaxLevel;
  if (h(hi) >= 0.0) return hi;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

nlohmann::json AllocationResult::to_json() const {
  return {{"levels", levels},         {"mu_star", mu_star},         {"budget", to_string(budget)},
          {"binding", binding},       {"cap_binding", cap_binding}, {"iterations", iterations},
          {"mu_bar", mu_bar}};
}

std::vector<double> default_alpha_grid(double alpha_total, int n_blocks, int n_points) {
  if (n_blocks < 1 || n_points < 2) throw std::invalid_argument("default_alpha_grid: bad sizes");
  const double lo = alpha_total / (10.0 * n_blocks);
  const double hi = std::min(0.5, 5.0 * alpha_total);
  std::vector<double> out(n_points);
  for (int i = 0; i < n_points; ++i) {
    out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n_points - 1));
  }
  return out;
}

ValueCurve build_value_curve(const AltDensity& g, const std::vector<double>& alpha_grid, const QGrid& grid,
                             const SolverParams& params, const std::string& block_id) {
  const ValueCurve c = build_value_curves({g}, alpha_grid, grid, params, 1).front();
  return ValueCurve(c.alphas(), c.raw_values(), block_id);
}

std::vector<ValueCurve> build_value_curves(const std::vector<AltDensity>& densities,
                                           const std::vector<double>& alpha_grid, const QGrid& grid,
                                           const SolverParams& params, int threads) {
  const std::size_t nb = densities.size(), na = alpha_grid.size();
  std::vector<double> vals(nb * na, 0.0);
  std::vector<std::exception_ptr> errs(nb * na);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < nb * na;) {
      try {
        vals[t] = pi3_value(alpha_grid[t % na], densities[t / na], grid, params);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(nb * na)));
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (std::size_t t = 0; t < errs.size(); ++t) {
    if (errs[t]) {
      try {
        std::rethrow_exception(errs[t]);
      } catch (const std::exception& e) {
        throw std::runtime_error("value curve: solver failed at alpha=" + std::to_string(alpha_grid[t % na]) +
                                 " for block " + std::to_string(t / na) + ": " + e.what());
      }
    }
  }
  std::vector<ValueCurve> out;
  for (std::size_t b = 0; b < nb; ++b) {
    out.emplace_back(alpha_grid, std::vector<double>(vals.begin() + b * na, vals.begin() + (b + 1) * na),
                     std::to_string(b));
  }
  return out;
}

AllocationResult kkt_bisection_bonferroni(const CurveRefs& curves, double alpha, double eps) {
  return kkt_bisection(curves, alpha, eps, Budget::bonferroni);
}

AllocationResult kkt_bisection_sidak(const CurveRefs& curves, double alpha, double eps) {
  return kkt_bisection(curves, alpha, eps, Budget::sidak);
}

std::pair<double, double> uniform_splits(double alpha, int n_blocks) {
  if (n_blocks < 1) throw std::invalid_argument("uniform_splits: B must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("uniform_splits: alpha must lie in (0,1)");
  return {alpha / n_blocks, -std::expm1(std::log1p(-alpha) / n_blocks)};
}

double allocation_objective(const CurveRefs& curves, const std::vector<double>& levels) {
  if (curves.size() != levels.size()) throw std::invalid_argument("objective: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < curves.size(); ++i) s += curves[i]->value(levels[i]);
  return s / static_cast<double>(curves.size());
}

}  // namespace bfwer
