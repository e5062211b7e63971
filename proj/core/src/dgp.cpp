#include "blockfwer/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace bfwer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

const boost::math::normal kStdNormal{};

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

nlohmann::json family_spec(const std::string& kind, double theta) {
  if (kind == "truncnorm") return {{"kind", kind}, {"params", {{"theta", theta}}}};
  if (kind == "mixnorm") return {{"kind", kind}, {"params", {{"mean1", 1.5 * theta}, {"mean2", 0.5 * theta}}}};
  if (kind == "uniform") return {{"kind", kind}};
  throw std::invalid_argument("family '" + kind + "' needs explicit params");
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)), static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                    static_cast<std::uint32_t>(splitmix64(index ^ 0x5DEECE66DULL)),
                    static_cast<std::uint32_t>(splitmix64(index ^ 0x5DEECE66DULL) >> 32)};
  return std::mt19937_64(seq);
}

std::string Configuration::label() const {
  switch (kind) {
    case ConfigKind::complete_null: return "complete_null";
    case ConfigKind::h_ell: return "h_ell=" + std::to_string(ell);
    case ConfigKind::full_alternative: return "full_alternative";
    case ConfigKind::sparse_blocks: return "sparse_blocks=" + fmt(fraction);
    case ConfigKind::scattered: return "scattered=" + fmt(fraction);
  }
  return "unknown";
}

std::string Dependence::label() const {
  switch (kind) {
    case DependenceKind::independent: return "independent";
    case DependenceKind::equicorrelated: return "equicorrelated=" + fmt(rho);
    case DependenceKind::one_factor: return "one_factor=" + fmt(mean_loading);
  }
  return "unknown";
}

std::vector<double> Dependence::loadings(int n_blocks) const {
  std::vector<double> out(static_cast<std::size_t>(n_blocks), mean_loading);
  if (n_blocks < 2) return out;
  const double half_range = 0.5 * std::min(mean_loading, 1.0 - mean_loading);
  for (int b = 0; b < n_blocks; ++b) {
    out[b] = mean_loading + half_range * (2.0 * b / (n_blocks - 1) - 1.0);
  }
  return out;
}

void SimConfig::validate() const {
  if (K <= 0 || K != 3 * B) throw std::invalid_argument("config: K must equal 3B");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must lie in (0,1)");
  if (n_rep < 100) throw std::invalid_argument("config: n_rep must be >= 100");
  if (dependence.kind == DependenceKind::equicorrelated && !(dependence.rho >= 0.0 && dependence.rho < 1.0)) {
    throw std::invalid_argument("config: rho must lie in [0,1)");
  }
  if (dependence.kind == DependenceKind::one_factor &&
      !(dependence.mean_loading >= 0.0 && dependence.mean_loading < 1.0)) {
    throw std::invalid_argument("config: mean_loading must lie in [0,1)");
  }
  const auto& c = configuration;
  if ((c.kind == ConfigKind::sparse_blocks || c.kind == ConfigKind::scattered) &&
      !(c.fraction > 0.0 && c.fraction <= 1.0)) {
    throw std::invalid_argument("config: fraction must lie in (0,1]");
  }
  if (c.kind == ConfigKind::h_ell && (c.ell < 0 || c.ell > K)) throw std::invalid_argument("config: ell outside [0,K]");
  if (methods.empty()) throw std::invalid_argument("config: no methods requested");
}

std::string SimConfig::label() const {
  std::string s = configuration.label() + ";" + dependence.label();
  if (sidedness == Sidedness::two_sided) s += ";two_sided";
  if (budget == Budget::sidak) s += ";sidak";
  return s;
}

nlohmann::json SimConfig::to_json() const {
  nlohmann::json j;
  j["family"] = family;
  j["K"] = K;
  j["B"] = B;
  j["alpha"] = alpha;
  j["budget"] = to_string(budget);
  nlohmann::json c;
  switch (configuration.kind) {
    case ConfigKind::complete_null: c["type"] = "complete_null"; break;
    case ConfigKind::h_ell: c = {{"type", "h_ell"}, {"ell", configuration.ell}}; break;
    case ConfigKind::full_alternative: c["type"] = "full_alternative"; break;
    case ConfigKind::sparse_blocks: c = {{"type", "sparse_blocks"}, {"fraction", configuration.fraction}}; break;
    case ConfigKind::scattered: c = {{"type", "scattered"}, {"fraction", configuration.fraction}}; break;
  }
  j["configuration"] = c;
  nlohmann::json d;
  switch (dependence.kind) {
    case DependenceKind::independent: d["type"] = "independent"; break;
    case DependenceKind::equicorrelated: d = {{"type", "equicorrelated"}, {"rho", dependence.rho}}; break;
    case DependenceKind::one_factor: d = {{"type", "one_factor"}, {"mean_loading", dependence.mean_loading}}; break;
  }
  j["dependence"] = d;
  j["sidedness"] = sidedness == Sidedness::one_sided ? "one_sided" : "two_sided";
  j["n_rep"] = n_rep;
  j["seed"] = seed;
  j["methods"] = methods;
  j["grid"] = {{"n_per_axis", grid.n_per_axis}, {"grading", grid.grading}};
  j["solver"] = solver.to_json();
  j["minp_resamples"] = minp_resamples;
  return j;
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig s;
  if (j.contains("family")) {
    s.family = j.at("family");
    if (s.family.is_string()) s.family = family_spec(s.family.get<std::string>(), j.value("theta", -2.0));
  }
  s.K = j.value("K", s.K);
  s.B = j.value("B", s.K / 3);
  if (!j.contains("B")) s.B = s.K / 3;
  s.alpha = j.value("alpha", s.alpha);
  if (j.contains("budget")) s.budget = budget_from_string(j.at("budget").get<std::string>());
  if (j.contains("configuration")) {
    const auto& c = j.at("configuration");
    const std::string t = c.is_string() ? c.get<std::string>() : c.at("type").get<std::string>();
    if (t == "complete_null") {
      s.configuration.kind = ConfigKind::complete_null;
    } else if (t == "h_ell") {
      s.configuration.kind = ConfigKind::h_ell;
      s.configuration.ell = c.at("ell").get<int>();
    } else if (t == "full_alternative") {
      s.configuration.kind = ConfigKind::full_alternative;
    } else if (t == "sparse_blocks") {
      s.configuration.kind = ConfigKind::sparse_blocks;
      s.configuration.fraction = c.is_object() ? c.value("fraction", 0.5) : 0.5;
    } else if (t == "scattered") {
      s.configuration.kind = ConfigKind::scattered;
      s.configuration.fraction = c.is_object() ? c.value("fraction", 0.5) : 0.5;
    } else {
      throw std::invalid_argument("config: unknown configuration '" + t + "'");
    }
  }
  if (j.contains("dependence")) {
    const auto& d = j.at("dependence");
    const std::string t = d.is_string() ? d.get<std::string>() : d.at("type").get<std::string>();
    if (t == "independent") {
      s.dependence.kind = DependenceKind::independent;
    } else if (t == "equicorrelated") {
      s.dependence.kind = DependenceKind::equicorrelated;
      s.dependence.rho = d.at("rho").get<double>();
    } else if (t == "one_factor") {
      s.dependence.kind = DependenceKind::one_factor;
      s.dependence.mean_loading = d.at("mean_loading").get<double>();
    } else {
      throw std::invalid_argument("config: unknown dependence '" + t + "'");
    }
  }
  if (j.contains("sidedness")) {
    const auto t = j.at("sidedness").get<std::string>();
    if (t == "one_sided") {
      s.sidedness = Sidedness::one_sided;
    } else if (t == "two_sided") {
      s.sidedness = Sidedness::two_sided;
    } else {
      throw std::invalid_argument("config: sidedness must be one_sided or two_sided");
    }
  }
  s.n_rep = j.value("n_rep", s.n_rep);
  s.seed = j.value("seed", s.seed);
  if (j.contains("methods")) s.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("grid")) {
    s.grid.n_per_axis = j.at("grid").value("n_per_axis", s.grid.n_per_axis);
    s.grid.grading = j.at("grid").value("grading", s.grid.grading);
  }
  if (j.contains("solver")) s.solver = SolverParams::from_json(j.at("solver"));
  s.minp_resamples = j.value("minp_resamples", s.minp_resamples);
  return s;
}

Dgp::Dgp(const SimConfig& cfg) : cfg_(cfg), g_(AltDensity::from_json(cfg.family)) {
  cfg_.validate();
  if (cfg_.dependence.kind == DependenceKind::one_factor) loadings_ = cfg_.dependence.loadings(cfg_.B);
  fixed_alt_.assign(static_cast<std::size_t>(cfg_.K), 0);
  const auto& c = cfg_.configuration;
  switch (c.kind) {
    case ConfigKind::complete_null: break;
    case ConfigKind::h_ell:
      std::fill(fixed_alt_.begin(), fixed_alt_.begin() + c.ell, 1);
      break;
    case ConfigKind::full_alternative:
      std::fill(fixed_alt_.begin(), fixed_alt_.end(), 1);
      break;
    case ConfigKind::sparse_blocks: {
      const int nb = static_cast<int>(std::lround(c.fraction * cfg_.B));
      std::fill(fixed_alt_.begin(), fixed_alt_.begin() + 3 * nb, 1);
      break;
    }
    case ConfigKind::scattered: break;  // drawn per replicate
  }
}

int Dgp::n_alternatives() const {
  if (cfg_.configuration.kind == ConfigKind::scattered) {
    return static_cast<int>(std::lround(cfg_.configuration.fraction * cfg_.K));
  }
  return static_cast<int>(std::count(fixed_alt_.begin(), fixed_alt_.end(), 1));
}

Replicate Dgp::sample_with(std::mt19937_64& rng, bool force_null) const {
  const int K = cfg_.K;
  std::normal_distribution<double> N01(0.0, 1.0);
  Replicate r;
  r.p.resize(static_cast<std::size_t>(K));
  r.is_alt = force_null ? std::vector<char>(static_cast<std::size_t>(K), 0) : fixed_alt_;
  if (!force_null && cfg_.configuration.kind == ConfigKind::scattered) {
    std::vector<int> idx(static_cast<std::size_t>(K));
    std::iota(idx.begin(), idx.end(), 0);
    const int m = n_alternatives();
    // partial Fisher-Yates with explicit draws keeps the stream portable
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, K - 1);
      std::swap(idx[i], idx[pick(rng)]);
      r.is_alt[idx[i]] = 1;
    }
  }
  double z0 = 0.0;
  if (cfg_.dependence.kind != DependenceKind::independent) z0 = N01(rng);
  for (int k = 0; k < K; ++k) {
    const double zk = N01(rng);
    double x = zk;
    if (cfg_.dependence.kind == DependenceKind::equicorrelated) {
      x = std::sqrt(cfg_.dependence.rho) * z0 + std::sqrt(1.0 - cfg_.dependence.rho) * zk;
    } else if (cfg_.dependence.kind == DependenceKind::one_factor) {
      const double l = loadings_[k / 3];
      x = l * z0 + std::sqrt(1.0 - l * l) * zk;
    }
    double v = cfg_.sidedness == Sidedness::one_sided
                   ? boost::math::cdf(kStdNormal, x)
                   : 2.0 * boost::math::cdf(boost::math::complement(kStdNormal, std::abs(x)));
    v = std::clamp(v, 0.0, 1.0);
    r.p[k] = r.is_alt[k] ? g_.quantile(v) : v;
  }
  return r;
}

Replicate Dgp::sample(std::uint64_t replicate_index) const {
  auto rng = replicate_rng(cfg_.seed, replicate_index);
  return sample_with(rng, false);
}

Replicate dgp_sample(const SimConfig& cfg, std::uint64_t replicate_index) {
  return Dgp(cfg).sample(replicate_index);
}

}  // namespace bfwer
