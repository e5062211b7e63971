#include "blockfwer/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/roots.hpp>

namespace bfwer {

namespace {

const boost::math::normal kStdNormal{};

double Phi(double x) { return boost::math::cdf(kStdNormal, x); }
double PhiC(double x) { return boost::math::cdf(boost::math::complement(kStdNormal, x)); }
double PhiInv(double p) { return boost::math::quantile(kStdNormal, p); }
double PhiCInv(double q) { return boost::math::quantile(boost::math::complement(kStdNormal, q)); }

double clamp01(double u) { return std::min(1.0, std::max(0.0, u)); }

struct TruncNormModel {
  double theta;
  double bound;
  double z0;     // null mass on [-B, B]
  double z1;     // alternative mass on [-B, B]
  double lo0;    // Phi(-B)
  double lo1;    // Phi(-B - theta)
  double hi1c;   // PhiC(B - theta)

  TruncNormModel(double th, double b) : theta(th), bound(b) {
    lo0 = Phi(-b);
    z0 = 1.0 - 2.0 * lo0;
    lo1 = Phi(-b - th);
    hi1c = PhiC(b - th);
    z1 = 1.0 - lo1 - hi1c;
  }

  // null truncated-normal quantile
  double x_of_u(double u) const {
    if (u <= 0.5) return PhiInv(lo0 + u * z0);
    return PhiCInv(lo0 + (1.0 - u) * z0);
  }
  double u_of_x(double x) const {
    if (x <= 0.0) return clamp01((Phi(x) - lo0) / z0);
    return clamp01(1.0 - (PhiC(x) - lo0) / z0);
  }
  double pdf(double u) const {
    const double x = x_of_u(clamp01(u));
    return (z0 / z1) * std::exp(theta * x - 0.5 * theta * theta);
  }
  double cdf(double a) const {
    if (a <= 0.0) return 0.0;
    if (a >= 1.0) return 1.0;
    const double s = x_of_u(a) - theta;
    if (s <= 0.0) return clamp01((Phi(s) - lo1) / z1);
    return clamp01(1.0 - (PhiC(s) - hi1c) / z1);
  }
  double quantile(double v) const {
    if (v <= 0.0) return 0.0;
    if (v >= 1.0) return 1.0;
    double x;
    if (v <= 0.5) {
      x = theta + PhiInv(lo1 + v * z1);
    } else {
      x = theta + PhiCInv(hi1c + (1.0 - v) * z1);
    }
    return u_of_x(std::clamp(x, -bound, bound));
  }
  double sup() const { return pdf(0.0); }
};

struct TDistModel {
  double df;
  boost::math::students_t dist;

  explicit TDistModel(double d) : df(d), dist(d) {}

  double pdf(double u) const {
    if (u <= 0.0) return std::numeric_limits<double>::infinity();
    if (u >= 1.0) u = 1.0;
    const double z = PhiCInv(0.5 * u);
    const double logft = std::log(boost::math::pdf(dist, z));
    const double logphi = -0.5 * z * z - 0.5 * std::log(2.0 * M_PI);
    return std::exp(logft - logphi);
  }
  double cdf(double a) const {
    if (a <= 0.0) return 0.0;
    if (a >= 1.0) return 1.0;
    const double z = PhiCInv(0.5 * a);
    return clamp01(2.0 * boost::math::cdf(boost::math::complement(dist, z)));
  }
  double quantile(double v) const {
    if (v <= 0.0) return 0.0;
    if (v >= 1.0) return 1.0;
    const double z = boost::math::quantile(boost::math::complement(dist, 0.5 * v));
    return clamp01(2.0 * PhiC(z));
  }
};

struct BetaModel {
  double shape;
  double pdf(double u) const {
    if (u <= 0.0) {
      if (shape < 1.0) return std::numeric_limits<double>::infinity();
      return shape == 1.0 ? 1.0 : 0.0;
    }
    return shape * std::pow(std::min(u, 1.0), shape - 1.0);
  }
  double cdf(double a) const { return a <= 0.0 ? 0.0 : (a >= 1.0 ? 1.0 : std::pow(a, shape)); }
  double quantile(double v) const {
    return v <= 0.0 ? 0.0 : (v >= 1.0 ? 1.0 : std::pow(v, 1.0 / shape));
  }
};

struct MixNormModel {
  TruncNormModel c1;
  TruncNormModel c2;

  double pdf(double u) const { return 0.5 * (c1.pdf(u) + c2.pdf(u)); }
  double cdf(double a) const { return 0.5 * (c1.cdf(a) + c2.cdf(a)); }
  double quantile(double v) const {
    if (v <= 0.0) return 0.0;
    if (v >= 1.0) return 1.0;
    double lo = std::min(c1.quantile(v), c2.quantile(v));
    double hi = std::max(c1.quantile(v), c2.quantile(v));
    if (hi - lo <= 0.0) return lo;
    auto f = [&](double u) { return cdf(u) - v; };
    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi), tol, iters);
    return 0.5 * (r.first + r.second);
  }
};

struct GrenanderModel {
  GrenanderFit fit;
  std::vector<double> cum;  // G at each breakpoint

  explicit GrenanderModel(GrenanderFit f) : fit(std::move(f)) {
    cum.assign(fit.breakpoints.size(), 0.0);
    for (std::size_t i = 0; i + 1 < fit.breakpoints.size(); ++i) {
      cum[i + 1] = cum[i] + fit.heights[i] * (fit.breakpoints[i + 1] - fit.breakpoints[i]);
    }
  }

  std::size_t segment(double u) const {
    const auto& b = fit.breakpoints;
    auto it = std::lower_bound(b.begin(), b.end(), u);
    std::size_t idx = it == b.begin() ? 0 : static_cast<std::size_t>(it - b.begin()) - 1;
    return std::min(idx, fit.heights.size() - 1);
  }
  double pdf(double u) const { return fit.heights[segment(clamp01(u))]; }
  double cdf(double a) const {
    if (a <= 0.0) return 0.0;
    if (a >= 1.0) return 1.0;
    const std::size_t i = segment(a);
    return clamp01(cum[i] + fit.heights[i] * (a - fit.breakpoints[i]));
  }
  double quantile(double v) const {
    if (v <= 0.0) return 0.0;
    if (v >= cum.back()) {
      // end of the support: last breakpoint with positive mass to its left
      for (std::size_t i = fit.heights.size(); i-- > 0;) {
        if (fit.heights[i] > 0.0) return fit.breakpoints[i + 1];
      }
      return 1.0;
    }
    auto it = std::upper_bound(cum.begin(), cum.end(), v);
    std::size_t i = static_cast<std::size_t>(it - cum.begin()) - 1;
    i = std::min(i, fit.heights.size() - 1);
    if (fit.heights[i] <= 0.0) return fit.breakpoints[i];
    return clamp01(fit.breakpoints[i] + (v - cum[i]) / fit.heights[i]);
  }
};

struct UniformModel {
  double pdf(double) const { return 1.0; }
  double cdf(double a) const { return clamp01(a); }
  double quantile(double v) const { return clamp01(v); }
};

}  // namespace

struct AltDensity::Model {
  DensityKind kind;
  std::variant<TruncNormModel, TDistModel, BetaModel, MixNormModel, GrenanderModel, UniformModel> impl;
};

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::truncnorm: return "truncnorm";
    case DensityKind::tdist: return "tdist";
    case DensityKind::beta: return "beta";
    case DensityKind::mixnorm: return "mixnorm";
    case DensityKind::grenander: return "grenander";
    case DensityKind::uniform: return "uniform";
  }
  return "unknown";
}

DensityKind density_kind_from_string(const std::string& name) {
  if (name == "truncnorm") return DensityKind::truncnorm;
  if (name == "tdist" || name == "t") return DensityKind::tdist;
  if (name == "beta") return DensityKind::beta;
  if (name == "mixnorm") return DensityKind::mixnorm;
  if (name == "grenander") return DensityKind::grenander;
  if (name == "uniform") return DensityKind::uniform;
  throw std::invalid_argument("unknown density family '" + name + "'");
}

AltDensity::AltDensity(std::shared_ptr<const Model> model, std::vector<double> params,
                       double sup_bound, bool monotone)
    : model_(std::move(model)), params_(std::move(params)), sup_bound_(sup_bound),
      monotone_(monotone) {}

AltDensity AltDensity::truncnorm(double theta, double trunc_bound) {
  if (!(theta < 0.0)) {
    throw std::invalid_argument("truncnorm requires theta < 0 (got " + std::to_string(theta) + ")");
  }
  if (!(trunc_bound > 0.0)) throw std::invalid_argument("truncnorm requires trunc_bound > 0");
  TruncNormModel m(theta, trunc_bound);
  const double sup = std::max(1.0, m.sup());
  auto model = std::make_shared<Model>(Model{DensityKind::truncnorm, m});
  return AltDensity(model, {theta, trunc_bound}, sup, true);
}

AltDensity AltDensity::tdist(double df) {
  if (!(df > 0.0)) throw std::invalid_argument("tdist requires df > 0");
  auto model = std::make_shared<Model>(Model{DensityKind::tdist, TDistModel(df)});
  return AltDensity(model, {df}, std::numeric_limits<double>::infinity(), false);
}

AltDensity AltDensity::beta(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("beta requires shape > 0");
  const double sup = shape < 1.0 ? std::numeric_limits<double>::infinity() : shape;
  auto model = std::make_shared<Model>(Model{DensityKind::beta, BetaModel{shape}});
  return AltDensity(model, {shape}, sup, shape <= 1.0);
}

AltDensity AltDensity::mixnorm(double mean1, double mean2, double trunc_bound) {
  if (mean1 > 0.0 || mean2 > 0.0) throw std::invalid_argument("mixnorm means must be <= 0");
  if (!(trunc_bound > 0.0)) throw std::invalid_argument("mixnorm requires trunc_bound > 0");
  MixNormModel m{TruncNormModel(mean1, trunc_bound), TruncNormModel(mean2, trunc_bound)};
  const double sup = std::max(1.0, m.pdf(0.0));
  auto model = std::make_shared<Model>(Model{DensityKind::mixnorm, m});
  return AltDensity(model, {mean1, mean2, trunc_bound}, sup, true);
}

AltDensity AltDensity::grenander(GrenanderFit fit) {
  if (fit.heights.empty() || fit.breakpoints.size() != fit.heights.size() + 1) {
    throw std::invalid_argument("malformed Grenander fit");
  }
  const double sup = std::max(1.0, fit.heights.front());
  auto model = std::make_shared<Model>(Model{DensityKind::grenander, GrenanderModel(std::move(fit))});
  return AltDensity(model, {}, sup, true);
}

AltDensity AltDensity::uniform() {
  auto model = std::make_shared<Model>(Model{DensityKind::uniform, UniformModel{}});
  return AltDensity(model, {}, 1.0, true);
}

DensityKind AltDensity::kind() const { return model_->kind; }

const GrenanderFit* AltDensity::grenander_fit() const {
  if (auto* g = std::get_if<GrenanderModel>(&model_->impl)) return &g->fit;
  return nullptr;
}

double AltDensity::pdf(double u) const {
  return std::visit([u](const auto& m) { return m.pdf(u); }, model_->impl);
}

double AltDensity::cdf(double alpha) const {
  return std::visit([alpha](const auto& m) { return m.cdf(alpha); }, model_->impl);
}

double AltDensity::quantile(double v) const {
  return std::visit([v](const auto& m) { return m.quantile(v); }, model_->impl);
}

double AltDensity::cell_mean(double lo, double hi) const {
  if (!(hi > lo)) return pdf(lo);
  return (cdf(hi) - cdf(lo)) / (hi - lo);
}

nlohmann::json AltDensity::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind());
  switch (kind()) {
    case DensityKind::truncnorm:
      j["params"] = {{"theta", params_[0]}, {"trunc_bound", params_[1]}};
      break;
    case DensityKind::tdist:
      j["params"] = {{"df", params_[0]}};
      break;
    case DensityKind::beta:
      j["params"] = {{"shape", params_[0]}};
      break;
    case DensityKind::mixnorm:
      j["params"] = {{"mean1", params_[0]}, {"mean2", params_[1]}, {"trunc_bound", params_[2]}};
      break;
    case DensityKind::grenander: {
      const GrenanderFit* f = grenander_fit();
      j["params"] = {{"breakpoints", f->breakpoints}, {"heights", f->heights}, {"n", f->sample_size}};
      break;
    }
    case DensityKind::uniform:
      j["params"] = nlohmann::json::object();
      break;
  }
  return j;
}

std::string AltDensity::id() const { return to_json().dump(); }

AltDensity AltDensity::from_json(const nlohmann::json& spec) {
  const DensityKind kind = density_kind_from_string(spec.at("kind").get<std::string>());
  const nlohmann::json p = spec.contains("params") ? spec.at("params") : nlohmann::json::object();
  switch (kind) {
    case DensityKind::truncnorm:
      return truncnorm(p.at("theta").get<double>(), p.value("trunc_bound", 6.0));
    case DensityKind::tdist:
      return tdist(p.at("df").get<double>());
    case DensityKind::beta:
      return beta(p.at("shape").get<double>());
    case DensityKind::mixnorm:
      return mixnorm(p.at("mean1").get<double>(), p.at("mean2").get<double>(),
                     p.value("trunc_bound", 6.0));
    case DensityKind::grenander: {
      GrenanderFit f;
      f.breakpoints = p.at("breakpoints").get<std::vector<double>>();
      f.heights = p.at("heights").get<std::vector<double>>();
      f.sample_size = p.value("n", std::size_t{0});
      return grenander(std::move(f));
    }
    case DensityKind::uniform:
      return uniform();
  }
  throw std::invalid_argument("unhandled density kind");
}

double cdf_G(const AltDensity& g, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::domain_error("cdf_G: alpha outside [0,1]");
  return g.cdf(alpha);
}

double sup_norm_distance(const AltDensity& g, const AltDensity& ghat, double grid_lo,
                         double grid_hi, int n_points) {
  if (!(grid_lo >= 0.0 && grid_lo < grid_hi && grid_hi <= 1.0) || n_points < 2) {
    throw std::invalid_argument("sup_norm_distance: bad grid");
  }
  double best = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double u = grid_lo + (grid_hi - grid_lo) * i / (n_points - 1);
    best = std::max(best, std::abs(g.pdf(u) - ghat.pdf(u)));
  }
  return best;
}

double grenander_rate(std::size_t n) {
  const double nn = static_cast<double>(n);
  return std::cbrt(std::log(nn) / nn);
}

}  // namespace bfwer
