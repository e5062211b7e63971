#pragma once

#include <array>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockfwer/densities.hpp"
#include "blockfwer/quadrature.hpp"

namespace bfwer {

struct MuVector {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;

  double operator[](int i) const { return i == 0 ? mu0 : (i == 1 ? mu1 : mu2); }
  double& operator[](int i) { return i == 0 ? mu0 : (i == 1 ? mu1 : mu2); }
  bool operator==(const MuVector&) const = default;
};

enum class SolveFlag { success, level_unreachable, bracket_failed, max_iter };
std::string to_string(SolveFlag flag);

inline const char* kMsgLevelUnreachable = "Consider decreasing FWER level \xCE\xB1.";
inline const char* kMsgBracketFailed = "Consider increasing U_max or decreasing FWER level \xCE\xB1.";

struct SolveDiagnostics {
  SolveFlag flag = SolveFlag::success;
  std::string message;
  int outer_iterations = 0;
  int coordinate = -1;  // coordinate that raised a failure flag
  std::array<double, 3> residuals{0.0, 0.0, 0.0};
  // Constraints left inactive at the returned point (mu_gamma = 0, F_gamma < alpha).
  std::array<bool, 3> slack{false, false, false};
  // max over gamma of |F_gamma - alpha| on active constraints and
  // max(0, F_gamma - alpha) on slack ones
  double kkt_residual = 0.0;
  // sum over gamma of mu_gamma * max(0, alpha - F_gamma); bounds the power
  // shortfall of a feasible D^mu against the optimum
  double duality_gap = 0.0;
  bool stalled = false;  // accepted at T_max by the stall rule
  // mu was scaled up after convergence to restore feasibility
  bool repaired = false;
  double repair_scale = 1.0;
  long evaluations = 0;
};

struct SolverParams {
  double delta = 1e-7;
  double epsilon = 1e-6;
  int t_max = 50;
  double u_s = 0.5;
  double u_f = 2.0;
  double u_max = 1e6;
  int max_iter_b = 200;
  // When a coordinate reports level_unreachable, set it to 0 and keep
  // iterating (the constraint is inactive given the other multipliers)
  // instead of stopping with that flag.
  bool project_slack = true;
  // At T_max, accept the iterate anyway when every F_gamma <= alpha +
  // stall_feasibility and the duality gap is <= stall_gap. Step-function
  // densities (Grenander fits) make the constraint maps discontinuous, so
  // the cyclic updates can circle a jump without the step norm vanishing.
  double stall_feasibility = 2e-4;
  double stall_gap = 1e-4;
  // A converged iterate with some F_gamma > alpha + feasibility_tol is scaled
  // up along mu until every F_gamma <= alpha. Scaling lowers every R_i, so
  // each F_gamma is non-increasing in the scale.
  double feasibility_tol = 2e-4;

  nlohmann::json to_json() const;
  static SolverParams from_json(const nlohmann::json& j);
};

struct RuleMetrics {
  double fwer0 = 0.0;
  double fwer1 = 0.0;
  double fwer2 = 0.0;
  double avg_power = 0.0;

  double fwer(int gamma) const { return gamma == 0 ? fwer0 : (gamma == 1 ? fwer1 : fwer2); }
};

using Decision = std::array<int, 3>;

// Ri = a_i - sum_l mu_l b_{l,i} at the ordered triple u.
std::array<double, 3> r_coefficients(const MuVector& mu, const Triple& u, const AltDensity& g);
// Same, from the three density values g(u1), g(u2), g(u3).
std::array<double, 3> r_from_g(const MuVector& mu, double g1, double g2, double g3);
Decision decide_from_r(const std::array<double, 3>& r);
Decision decide_dmu(const MuVector& mu, const Triple& u, const AltDensity& g);

// Density values are capped here before entering products so that the
// decision stays finite for densities unbounded at the origin.
inline constexpr double kDensityCap = 1e100;

// Precomputed per-node tables for one (density, grid) pair.
class K3Problem {
 public:
  // Keeps a reference to grid, which must outlive the problem.
  K3Problem(AltDensity g, const QGrid& grid);
  K3Problem(AltDensity g, QGrid&& grid) = delete;

  RuleMetrics evaluate(const MuVector& mu) const;
  // F_gamma(mu) = FWER_gamma(D^mu) for gamma = 0, 1, 2.
  std::array<double, 3> constraint_maps(const MuVector& mu) const;
  // Functionals of an arbitrary decision map; throws on a nesting violation.
  RuleMetrics evaluate_decisions(const std::function<Decision(const Triple&)>& rule) const;

  const AltDensity& density() const { return g_; }
  const QGrid& grid() const { return *grid_; }

 private:
  struct NodeData {
    // pointwise products for the decision
    double a, p1, q1, p2, q2, q3;
    // cell-integrated weights for the functionals
    double w0, w1a, w1b, w2a, w2b, w2c, wp;
  };
  RuleMetrics accumulate(const std::function<Decision(std::size_t)>& dec) const;

  AltDensity g_;
  const QGrid* grid_;
  std::vector<NodeData> data_;
};

struct CoordinateResult {
  double value = 0.0;
  SolveFlag flag = SolveFlag::success;
  std::string message;
  int evaluations = 0;
};

// Expanding-bracket bisection for F(x) = alpha with F non-increasing.
CoordinateResult compute_coordinate_mu(const std::function<double(double)>& F, double alpha,
                                       const SolverParams& params);
CoordinateResult compute_coordinate_mu(const K3Problem& problem, int which, const MuVector& others,
                                       double alpha, const SolverParams& params);

struct SolveResult {
  double alpha = 0.0;
  MuVector mu;
  SolveDiagnostics diag;
  RuleMetrics metrics;
  std::vector<MuVector> trajectory;
};

SolveResult compute_optimal_mu(double alpha, const K3Problem& problem, const SolverParams& params = {});
SolveResult compute_optimal_mu(double alpha, const AltDensity& g, const QGrid& grid,
                               const SolverParams& params = {});

nlohmann::json solve_artifact(const SolveResult& res, const AltDensity& g, const QGrid& grid,
                              const SolverParams& params);

// Solved rule applied to arbitrary (unsorted) block triples.
class K3Rule {
 public:
  K3Rule(MuVector mu, AltDensity g, double alpha) : mu_(mu), g_(std::move(g)), alpha_(alpha) {}

  // Decision on an ordered triple.
  Decision decide_sorted(const Triple& u) const { return decide_dmu(mu_, u, g_); }
  // Number of rejections R in {0,..,3} for the sorted triple.
  int rejections(const Triple& sorted_u) const;

  const MuVector& mu() const { return mu_; }
  const AltDensity& density() const { return g_; }
  double alpha() const { return alpha_; }

 private:
  MuVector mu_;
  AltDensity g_;
  double alpha_;
};

// Thread-safe memo of solves keyed by (density id, alpha, grid id, params),
// optionally mirrored to a directory of JSON artifacts.
class SolveCache {
 public:
  SolveCache() = default;
  explicit SolveCache(std::string directory) : dir_(std::move(directory)) {}

  SolveResult get_or_solve(double alpha, const AltDensity& g, const QGrid& grid,
                           const SolverParams& params = {});
  void set_directory(std::string directory);
  std::size_t size() const;
  void clear();

  static std::string key(double alpha, const AltDensity& g, const QGrid& grid,
                         const SolverParams& params);

 private:
  mutable std::mutex mtx_;
  std::map<std::string, SolveResult> memo_;
  std::string dir_;
};

SolveCache& global_solve_cache();

// pi_3(alpha): average power of the solved rule; throws if the solve fails.
double pi3_value(double alpha, const AltDensity& g, const QGrid& grid, const SolverParams& params = {});

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveDiagnostics diag)
      : std::runtime_error(what), diag_(std::move(diag)) {}
  const SolveDiagnostics& diagnostics() const { return diag_; }

 private:
  SolveDiagnostics diag_;
};

}  // namespace bfwer
