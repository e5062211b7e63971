#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockfwer/allocation.hpp"
#include "blockfwer/densities.hpp"
#include "blockfwer/k3solver.hpp"
#include "blockfwer/quadrature.hpp"

namespace bfwer {

enum class ConfigKind { complete_null, h_ell, full_alternative, sparse_blocks, scattered };
enum class DependenceKind { independent, equicorrelated, one_factor };
enum class Sidedness { one_sided, two_sided };

struct Configuration {
  ConfigKind kind = ConfigKind::full_alternative;
  int ell = 0;            // h_ell: the first ell hypotheses are alternatives
  double fraction = 0.5;  // sparse_blocks / scattered

  std::string label() const;
};

struct Dependence {
  DependenceKind kind = DependenceKind::independent;
  double rho = 0.0;           // equicorrelated
  double mean_loading = 0.0;  // one_factor

  std::string label() const;
  // Block-constant loadings, linearly spaced around the mean.
  std::vector<double> loadings(int n_blocks) const;
};

struct SimConfig {
  nlohmann::json family = {{"kind", "truncnorm"}, {"params", {{"theta", -2.0}}}};
  int K = 30;
  int B = 10;
  double alpha = 0.05;
  Budget budget = Budget::bonferroni;
  Configuration configuration;
  Dependence dependence;
  Sidedness sidedness = Sidedness::one_sided;
  int n_rep = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> methods{"boost", "bonferroni", "holm", "hochberg", "hommel"};
  QGridOptions grid;
  SolverParams solver;
  int minp_resamples = 10000;

  void validate() const;
  std::string label() const;
  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

// Density spec from a family name and a location theta (< 0). mixnorm places
// its two components at 1.5 theta and 0.5 theta.
nlohmann::json family_spec(const std::string& kind, double theta);

struct Replicate {
  std::vector<double> p;
  std::vector<char> is_alt;
};

// Independent stream per (seed, index).
std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t index);

class Dgp {
 public:
  explicit Dgp(const SimConfig& cfg);

  Replicate sample(std::uint64_t replicate_index) const;
  Replicate sample_with(std::mt19937_64& rng, bool force_null) const;

  const AltDensity& density() const { return g_; }
  int n_alternatives() const;

 private:
  SimConfig cfg_;
  AltDensity g_;
  std::vector<double> loadings_;
  std::vector<char> fixed_alt_;
};

Replicate dgp_sample(const SimConfig& cfg, std::uint64_t replicate_index);

}  // namespace bfwer
