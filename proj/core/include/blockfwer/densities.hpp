#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bfwer {

// Alternative p-value density g on [0,1] together with its CDF G and
// quantile G^{-1}. Null p-values are Unif(0,1) throughout.
enum class DensityKind { truncnorm, tdist, beta, mixnorm, grenander, uniform };

std::string to_string(DensityKind kind);
DensityKind density_kind_from_string(const std::string& name);

// Maximum-likelihood non-increasing density on [0,1]. breakpoints holds
// 0 = b_0 < b_1 < ... < b_m = 1 and heights[i] is the density on
// (b_i, b_{i+1}] (the first segment also covers u = 0).
struct GrenanderFit {
  std::vector<double> breakpoints;
  std::vector<double> heights;
  std::size_t sample_size = 0;

  double integral() const;
};

GrenanderFit fit_grenander(std::span<const double> samples);

class AltDensity {
 public:
  // One-sided truncated-normal design: null N(0,1), alternative N(theta,1),
  // both truncated to [-bound, bound]; u = F_0^T(X). Requires theta < 0.
  static AltDensity truncnorm(double theta, double trunc_bound = 6.0);
  // Null N(0,1), alternative Student-t(df); two-sided p = 2 Phi(-|X|).
  static AltDensity tdist(double df);
  // Beta(shape, 1): g(u) = shape * u^(shape - 1).
  static AltDensity beta(double shape);
  // Equal-weight mixture of two truncated-normal alternatives with
  // location mean1, mean2 (each <= 0) against the truncated N(0,1) null.
  static AltDensity mixnorm(double mean1, double mean2, double trunc_bound = 6.0);
  static AltDensity grenander(GrenanderFit fit);
  static AltDensity uniform();

  static AltDensity from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;
  // Canonical identifier (compact JSON of the spec); stable across runs.
  std::string id() const;

  double pdf(double u) const;
  double cdf(double alpha) const;
  double quantile(double v) const;
  // Average of g over [lo, hi]; pdf(lo) when the interval is degenerate.
  double cell_mean(double lo, double hi) const;

  DensityKind kind() const;
  // Upper bound M on g over [0,1]; +inf when g is unbounded at the origin.
  double sup_bound() const { return sup_bound_; }
  bool monotone_nonincreasing() const { return monotone_; }
  const std::vector<double>& params() const { return params_; }
  const GrenanderFit* grenander_fit() const;

  struct Model;

 private:
  AltDensity(std::shared_ptr<const Model> model, std::vector<double> params,
             double sup_bound, bool monotone);

  std::shared_ptr<const Model> model_;
  std::vector<double> params_;
  double sup_bound_ = 1.0;
  bool monotone_ = true;
};

double cdf_G(const AltDensity& g, double alpha);

// max over an evenly spaced grid on [grid_lo, grid_hi] of |g(u) - ghat(u)|.
double sup_norm_distance(const AltDensity& g, const AltDensity& ghat,
                         double grid_lo, double grid_hi, int n_points);

// (log n / n)^{1/3}, the uniform rate of the Grenander estimator.
double grenander_rate(std::size_t n);

}  // namespace bfwer
