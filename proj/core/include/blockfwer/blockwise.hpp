#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockfwer/allocation.hpp"
#include "blockfwer/densities.hpp"
#include "blockfwer/k3solver.hpp"
#include "blockfwer/quadrature.hpp"

namespace bfwer {

// Hypotheses are indexed 0..K-1; each block lists its three member indices.
struct BlockPartition {
  std::vector<std::string> hypothesis_ids;
  std::vector<std::string> block_ids;
  std::vector<std::array<std::size_t, 3>> blocks;

  std::size_t n_hypotheses() const { return hypothesis_ids.size(); }
  std::size_t n_blocks() const { return blocks.size(); }
  // Throws unless the blocks are disjoint triples covering every index.
  void validate() const;

  // Blocks {0,1,2}, {3,4,5}, ...; ids are the decimal indices.
  static BlockPartition contiguous(std::size_t K);
  // Group hypotheses by block label in order of first appearance.
  static BlockPartition from_labels(const std::vector<std::string>& hypothesis_ids,
                                    const std::vector<std::string>& block_labels);
};

struct RejectionSet {
  std::vector<std::size_t> rejected;  // ascending hypothesis indices
  std::vector<int> per_block;         // R^(b) in {0,1,2,3}

  nlohmann::json to_json(const BlockPartition& part) const;
};

// Indices of the block's members ordered by p-value, ties by index.
std::array<std::size_t, 3> sorted_members(const std::array<std::size_t, 3>& members,
                                          const std::vector<double>& p);

// Per-block rules, solved once per distinct level and shared across blocks.
class BoostProcedure {
 public:
  BoostProcedure(const BlockPartition& part, const std::vector<double>& levels, const AltDensity& g,
                 const QGrid& grid, const SolverParams& params = {},
                 SolveCache* cache = &global_solve_cache());
  // One alternative density per block.
  BoostProcedure(const BlockPartition& part, const std::vector<double>& levels,
                 const std::vector<AltDensity>& densities, const QGrid& grid, const SolverParams& params = {},
                 SolveCache* cache = &global_solve_cache());
  // part must outlive the procedure
  BoostProcedure(BlockPartition&&, const std::vector<double>&, const AltDensity&, const QGrid&,
                 const SolverParams& = {}, SolveCache* = nullptr) = delete;
  BoostProcedure(BlockPartition&&, const std::vector<double>&, const std::vector<AltDensity>&, const QGrid&,
                 const SolverParams& = {}, SolveCache* = nullptr) = delete;

  RejectionSet apply(const std::vector<double>& pvalues) const;
  // Rejection count for one block given its p-values in any order.
  int block_rejections(std::size_t block, const std::vector<double>& pvalues) const;

  const std::vector<double>& levels() const { return levels_; }
  const SolveResult& solve_for_block(std::size_t b) const { return solves_[rule_of_block_[b]]; }
  std::size_t distinct_solves() const { return rules_.size(); }

 private:
  const BlockPartition* part_;
  std::vector<double> levels_;
  std::vector<K3Rule> rules_;
  std::vector<SolveResult> solves_;
  std::vector<std::size_t> rule_of_block_;
};

RejectionSet boost_run(const std::vector<double>& pvalues, const BlockPartition& part,
                       const std::vector<double>& levels, const AltDensity& g, const QGrid& grid,
                       const SolverParams& params = {});

// alpha - L3 * B_T * (log n / n)^(1/3); throws if the result is not positive.
double deflate_alpha(double alpha, double L3, std::size_t B_T, std::size_t n);

struct FoldSplit {
  std::vector<std::size_t> estimation;  // block indices
  std::vector<std::size_t> testing;

  void validate(std::size_t n_blocks) const;
  // First half of the blocks (rounded down) estimates, the rest test.
  static FoldSplit halves(std::size_t n_blocks);
  FoldSplit swapped() const { return {testing, estimation}; }
};

struct PluginOptions {
  double alpha = 0.05;
  Budget budget = Budget::bonferroni;
  std::optional<double> deflate_L3;
};

struct PluginResult {
  RejectionSet rejections;  // only testing-fold hypotheses can appear
  GrenanderFit fit;
  double alpha_used = 0.0;
  std::vector<double> levels;  // per testing block, in fold order
};

PluginResult plugin_boost_run(const std::vector<double>& pvalues, const BlockPartition& part,
                              const FoldSplit& fold, const PluginOptions& opts, const QGrid& grid,
                              const SolverParams& params = {});

// Runs the split and its mirror at half level each and unions the rejections.
RejectionSet plugin_boost_swap(const std::vector<double>& pvalues, const BlockPartition& part,
                               const FoldSplit& fold, const PluginOptions& opts, const QGrid& grid,
                               const SolverParams& params = {});

}  // namespace bfwer
