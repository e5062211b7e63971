#include "blockfwer/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace bfwer {

namespace {

std::vector<std::size_t> order_of(const std::vector<double>& p) {
  std::vector<std::size_t> o(p.size());
  std::iota(o.begin(), o.end(), 0);
  std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return o;
}

void check_p(const std::vector<double>& p) {
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("p-values must lie in [0,1]");
  }
}

void check_p(const std::vector<double>& p, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0,1)");
  check_p(p);
}

Indices sorted(Indices v) {
  std::sort(v.begin(), v.end());
  return v;
}

Indices threshold(const std::vector<double>& p, double c) {
  Indices out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= c) out.push_back(i);
  }
  return out;
}

double sidak_level(double alpha, double m) { return -std::expm1(std::log1p(-alpha) / m); }

// step-down over sorted p-values with threshold c(i), i = 0..K-1
template <class C>
Indices step_down(const std::vector<double>& p, C c) {
  const auto o = order_of(p);
  Indices out;
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (p[o[i]] <= c(i)) {
      out.push_back(o[i]);
    } else {
      break;
    }
  }
  return sorted(out);
}

template <class C>
Indices step_up(const std::vector<double>& p, C c) {
  const auto o = order_of(p);
  std::size_t n_rej = 0;
  for (std::size_t i = o.size(); i-- > 0;) {
    if (p[o[i]] <= c(i)) {
      n_rej = i + 1;
      break;
    }
  }
  return sorted(Indices(o.begin(), o.begin() + static_cast<std::ptrdiff_t>(n_rej)));
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::bonferroni: return "bonferroni";
    case Method::sidak_ss: return "sidak_ss";
    case Method::holm: return "holm";
    case Method::hochberg: return "hochberg";
    case Method::hommel: return "hommel";
    case Method::sidak_sd: return "sidak_sd";
    case Method::block_holm: return "block_holm";
    case Method::block_hochberg: return "block_hochberg";
    case Method::closed_fisher: return "closed_fisher";
    case Method::meinshausen: return "meinshausen";
    case Method::hartog_evalue: return "hartog_evalue";
    case Method::minp_resampling: return "minp_resampling";
    case Method::bh_fdr: return "bh_fdr";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> v{Method::bonferroni,     Method::sidak_ss,      Method::holm,
                                     Method::hochberg,       Method::hommel,        Method::sidak_sd,
                                     Method::block_holm,     Method::block_hochberg, Method::closed_fisher,
                                     Method::meinshausen,    Method::hartog_evalue, Method::minp_resampling,
                                     Method::bh_fdr};
  return v;
}

Method method_from_string(const std::string& s) {
  for (Method m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown method '" + s + "'");
}

bool needs_partition(Method m) {
  return m == Method::block_holm || m == Method::block_hochberg || m == Method::meinshausen ||
         m == Method::hartog_evalue;
}

bool strong_fwer_valid(Method m) {
  // Block gatekeeping declares every member of a rejected block, so a block
  // holding one null next to strong alternatives leaks false rejections.
  return m != Method::bh_fdr && m != Method::block_holm && m != Method::block_hochberg;
}

Indices bonferroni(const std::vector<double>& p, double alpha) {
  check_p(p, alpha);
  if (p.empty()) return {};
  return threshold(p, alpha / static_cast<double>(p.size()));
}

Indices sidak_single_step(const std::vector<double>& p, double alpha) {
  check_p(p, alpha);
  if (p.empty()) return {};
  return threshold(p, sidak_level(alpha, static_cast<double>(p.size())));
}

Indices holm(const std::vector<double>& p, double alpha) {
  check_p(p, alpha);
  const double K = static_cast<double>(p.size());
  return step_down(p, [&](std::size_t i) { return alpha / (K - static_cast<double>(i)); });
}

Indices hochberg(const std::vector<double>& p, double alpha) {
  check_p(p, alpha);
  const double K = static_cast<double>(p.size());
  return step_up(p, [&](std::size_t i) { return alpha / (K - static_cast<double>(i)); });
}

Indices sidak_step_down(const std::vector<double>& p, double alpha) {
  check_p(p, alpha);
  const double K = static_cast<double>(p.size());
  return step_down(p, [&](std::size_t i) { return sidak_level(alpha, K - static_cast<double>(i)); });
}

Indices hommel(const std::vector<double>& p, double alpha) {
  check_p(p, alpha);
  const std::size_t n = p.size();
  if (n == 0) return {};
  std::vector<double> s(p);
  std::sort(s.begin(), s.end());
  // j = largest i such that p_(n-i+k) > k alpha / i for all k = 1..i
  std::size_t j = 0;
  for (std::size_t i = n; i >= 1; --i) {
    bool all = true;
    for (std::size_t k = 1; k <= i; ++k) {
      if (!(s[n - i + k - 1] > static_cast<double>(k) * alpha / static_cast<double>(i))) {
        all = false;
        break;
      }
    }
    if (all) {
      j = i;
      break;
    }
  }
  if (j == 0) {
    Indices all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  return threshold(p, alpha / static_cast<double>(j));
}

Indices bh_fdr(const std::vector<double>& p, double q) {
  check_p(p, q);
  const double K = static_cast<double>(p.size());
  return step_up(p, [&](std::size_t i) { return static_cast<double>(i + 1) * q / K; });
}

double simes(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("simes: empty input");
  std::vector<double> s(p);
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double best = 1.0;
  for (std::size_t k = 0; k < s.size(); ++k) best = std::min(best, m * s[k] / static_cast<double>(k + 1));
  return best;
}

Indices block_gatekeeping(Method m, const std::vector<double>& p, const BlockPartition& part, double alpha) {
  if (m != Method::block_holm && m != Method::block_hochberg) {
    throw std::invalid_argument("block_gatekeeping: method must be block_holm or block_hochberg");
  }
  check_p(p, alpha);
  part.validate();
  if (p.size() != part.n_hypotheses()) throw std::invalid_argument("p-value count does not match partition");
  std::vector<double> bp;
  for (const auto& b : part.blocks) bp.push_back(simes({p[b[0]], p[b[1]], p[b[2]]}));
  const Indices rb = m == Method::block_holm ? holm(bp, alpha) : hochberg(bp, alpha);
  Indices out;
  for (std::size_t b : rb) out.insert(out.end(), part.blocks[b].begin(), part.blocks[b].end());
  return sorted(out);
}

Indices closed_fisher(const std::vector<double>& p, double alpha, std::vector<std::string>* warnings) {
  check_p(p, alpha);
  const std::size_t K = p.size();
  if (K == 0) return {};
  std::vector<double> lp(K);
  for (std::size_t i = 0; i < K; ++i) {
    double x = p[i];
    if (x <= 0.0) {
      x = 1e-300;
      if (warnings) warnings->push_back("closed_fisher: p-value " + std::to_string(i) + " is 0; clamped to 1e-300");
    }
    lp[i] = -2.0 * std::log(x);
  }
  std::vector<double> crit(K + 1);
  for (std::size_t s = 1; s <= K; ++s) {
    boost::math::chi_squared chi(2.0 * static_cast<double>(s));
    crit[s] = boost::math::quantile(boost::math::complement(chi, alpha));
  }
  // other hypotheses by decreasing p (smallest contribution first)
  const auto o = order_of(p);
  Indices out;
  for (std::size_t i = 0; i < K; ++i) {
    double stat = lp[i];
    bool rejected = stat >= crit[1];
    std::size_t s = 1;
    for (std::size_t r = K; r-- > 0 && rejected;) {
      if (o[r] == i) continue;
      stat += lp[o[r]];
      ++s;
      rejected = stat >= crit[s];
    }
    if (rejected) out.push_back(i);
  }
  return out;
}

Indices tree_closure(Method m, const std::vector<double>& p, const BlockPartition& part, double alpha) {
  check_p(p, alpha);
  part.validate();
  const std::size_t K = p.size();
  if (K != part.n_hypotheses()) throw std::invalid_argument("p-value count does not match partition");
  const double Kd = static_cast<double>(K);
  Indices out;
  if (m == Method::meinshausen) {
    // Simes at level alpha |v| / K on root, blocks, leaves
    if (!(simes(p) <= alpha)) return {};
    for (const auto& b : part.blocks) {
      if (!(simes({p[b[0]], p[b[1]], p[b[2]]}) <= alpha * 3.0 / Kd)) continue;
      for (std::size_t i : b) {
        if (p[i] <= alpha / Kd) out.push_back(i);
      }
    }
  } else if (m == Method::hartog_evalue) {
    auto e = [&](std::size_t i) { return p[i] <= 0.0 ? INFINITY : 0.5 / std::sqrt(p[i]); };
    double root = 0.0;
    for (std::size_t i = 0; i < K; ++i) root += e(i);
    if (!(root >= Kd / alpha)) return {};
    for (const auto& b : part.blocks) {
      if (!(e(b[0]) + e(b[1]) + e(b[2]) >= 3.0 / alpha)) continue;
      for (std::size_t i : b) {
        if (e(i) >= 1.0 / alpha) out.push_back(i);
      }
    }
  } else {
    throw std::invalid_argument("tree_closure: method must be meinshausen or hartog_evalue");
  }
  return sorted(out);
}

double minp_critical_value(const NullSampler& sampler, double alpha, int n_resamples, std::uint64_t seed) {
  if (n_resamples < 100) throw std::invalid_argument("minp_resampling needs at least 100 resamples");
  std::mt19937_64 rng(seed);
  std::vector<double> mins(static_cast<std::size_t>(n_resamples));
  for (auto& m : mins) {
    const auto v = sampler(rng);
    m = v.empty() ? 1.0 : *std::min_element(v.begin(), v.end());
  }
  std::sort(mins.begin(), mins.end());
  const auto k = static_cast<std::size_t>(std::floor(alpha * n_resamples));
  return k == 0 ? 0.0 : mins[k - 1];
}

Indices minp_apply(const std::vector<double>& p, double critical) {
  check_p(p);
  if (!(critical > 0.0)) return {};
  return threshold(p, critical);
}

Indices minp_resampling(const std::vector<double>& p, double alpha, const NullSampler& sampler, int n_resamples,
                        std::uint64_t seed) {
  return minp_apply(p, minp_critical_value(sampler, alpha, n_resamples, seed));
}

Indices run_baseline(Method m, const std::vector<double>& p, double alpha, const BlockPartition* part,
                     std::vector<std::string>* warnings) {
  if (needs_partition(m) && part == nullptr) {
    throw std::invalid_argument("method " + to_string(m) + " requires a block partition");
  }
  switch (m) {
    case Method::bonferroni: return bonferroni(p, alpha);
    case Method::sidak_ss: return sidak_single_step(p, alpha);
    case Method::holm: return holm(p, alpha);
    case Method::hochberg: return hochberg(p, alpha);
    case Method::hommel: return hommel(p, alpha);
    case Method::sidak_sd: return sidak_step_down(p, alpha);
    case Method::block_holm:
    case Method::block_hochberg: return block_gatekeeping(m, p, *part, alpha);
    case Method::closed_fisher: return closed_fisher(p, alpha, warnings);
    case Method::meinshausen:
    case Method::hartog_evalue: return tree_closure(m, p, *part, alpha);
    case Method::bh_fdr: return bh_fdr(p, alpha);
    case Method::minp_resampling:
      throw std::invalid_argument("minp_resampling needs a null sampler; use minp_resampling()");
  }
  throw std::invalid_argument("unhandled method");
}

}  // namespace bfwer
