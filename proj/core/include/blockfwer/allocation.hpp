#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockfwer/densities.hpp"
#include "blockfwer/k3solver.hpp"
#include "blockfwer/quadrature.hpp"

namespace bfwer {

enum class Budget { bonferroni, sidak };
std::string to_string(Budget b);
Budget budget_from_string(const std::string& s);

// Non-decreasing concave per-block power curve with right-derivative access.
class PowerCurve {
 public:
  virtual ~PowerCurve() = default;
  virtual double value(double a) const = 0;
  virtual double right_derivative(double a) const = 0;
  // sup{a : right_derivative(a) >= mu}, clamped to [0, 1)
  virtual double right_inverse(double mu) const = 0;
  // sup{a : (1 - a) * right_derivative(a) >= mu}, clamped to [0, 1)
  virtual double sidak_right_inverse(double mu) const = 0;
  // Right derivative at 0+, or the steepest resolvable slope when unbounded.
  virtual double max_slope() const = 0;
  virtual bool slope_capped() const { return false; }
  virtual std::string block_id() const = 0;
};

// Piecewise-linear curve through (0,0) and sampled (alpha, pi3(alpha)) points,
// concavified by pooling adjacent slopes.
class ValueCurve : public PowerCurve {
 public:
  ValueCurve(std::vector<double> alphas, std::vector<double> values, std::string block_id = "");

  double value(double a) const override;
  double right_derivative(double a) const override;
  double right_inverse(double mu) const override;
  double sidak_right_inverse(double mu) const override;
  double max_slope() const override { return slopes_.empty() ? 0.0 : slopes_.front(); }
  std::string block_id() const override { return block_id_; }

  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& raw_values() const { return raw_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }
  // Largest pointwise change made by concavification.
  double concavity_adjustment() const;

  nlohmann::json to_json() const;
  static ValueCurve from_json(const nlohmann::json& j);

 private:
  std::vector<double> alphas_;
  std::vector<double> raw_;
  std::vector<double> values_;
  std::vector<double> slopes_;  // slopes_[i] on (x_i, x_{i+1}], x_0 = 0
  std::string block_id_;
};

// c * a^p with 0 < p < 1; closed-form derivatives.
class PowerLawCurve : public PowerCurve {
 public:
  PowerLawCurve(double scale, double exponent, std::string block_id = "", double a_min = 1e-12);

  double value(double a) const override;
  double right_derivative(double a) const override;
  double right_inverse(double mu) const override;
  double sidak_right_inverse(double mu) const override;
  double max_slope() const override { return right_derivative(a_min_); }
  bool slope_capped() const override { return true; }
  std::string block_id() const override { return block_id_; }

 private:
  double c_;
  double p_;
  std::string block_id_;
  double a_min_;
};

struct AllocationResult {
  std::vector<double> levels;
  double mu_star = 0.0;
  Budget budget = Budget::bonferroni;
  bool binding = false;
  bool cap_binding = false;
  int iterations = 0;
  double mu_bar = 0.0;

  nlohmann::json to_json() const;
};

std::vector<double> default_alpha_grid(double alpha_total, int n_blocks, int n_points = 12);

ValueCurve build_value_curve(const AltDensity& g, const std::vector<double>& alpha_grid,
                             const QGrid& grid, const SolverParams& params = {},
                             const std::string& block_id = "");

// One curve per density; solver calls run on up to `threads` workers.
std::vector<ValueCurve> build_value_curves(const std::vector<AltDensity>& densities,
                                           const std::vector<double>& alpha_grid, const QGrid& grid,
                                           const SolverParams& params = {}, int threads = 1);

using CurveRefs = std::vector<const PowerCurve*>;

AllocationResult kkt_bisection_bonferroni(const CurveRefs& curves, double alpha, double eps = 1e-9);
AllocationResult kkt_bisection_sidak(const CurveRefs& curves, double alpha, double eps = 1e-9);

template <class C>
CurveRefs curve_refs(const std::vector<C>& cs) {
  CurveRefs r;
  for (const auto& c : cs) r.push_back(&c);
  return r;
}

// (alpha / B, 1 - (1 - alpha)^(1/B))
std::pair<double, double> uniform_splits(double alpha, int n_blocks);

// (1/B) sum_b pi_b(levels_b)
double allocation_objective(const CurveRefs& curves, const std::vector<double>& levels);

}  // namespace bfwer
