#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "blockfwer/blockwise.hpp"

namespace bfwer {

enum class Method {
  bonferroni,
  sidak_ss,
  holm,
  hochberg,
  hommel,
  sidak_sd,
  block_holm,
  block_hochberg,
  closed_fisher,
  meinshausen,
  hartog_evalue,
  minp_resampling,
  bh_fdr,
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);
const std::vector<Method>& all_methods();
bool needs_partition(Method m);
// Controls FWER under every configuration of true and false nulls.
bool strong_fwer_valid(Method m);

using Indices = std::vector<std::size_t>;

Indices bonferroni(const std::vector<double>& p, double alpha);
Indices sidak_single_step(const std::vector<double>& p, double alpha);
Indices holm(const std::vector<double>& p, double alpha);
Indices hochberg(const std::vector<double>& p, double alpha);
Indices hommel(const std::vector<double>& p, double alpha);
Indices sidak_step_down(const std::vector<double>& p, double alpha);
Indices bh_fdr(const std::vector<double>& p, double q);

// Simes combination min_k m p_(k) / k.
double simes(const std::vector<double>& p);

Indices block_gatekeeping(Method m, const std::vector<double>& p, const BlockPartition& part, double alpha);

// Closed testing with Fisher local tests. p = 0 is clamped to 1e-300; when a
// warnings sink is given a message is appended for each clamped value.
Indices closed_fisher(const std::vector<double>& p, double alpha, std::vector<std::string>* warnings = nullptr);

Indices tree_closure(Method m, const std::vector<double>& p, const BlockPartition& part, double alpha);

// Draws one complete-null p-vector.
using NullSampler = std::function<std::vector<double>(std::mt19937_64&)>;

// Lower empirical alpha-quantile of the resampled minimum p-value.
double minp_critical_value(const NullSampler& sampler, double alpha, int n_resamples, std::uint64_t seed);
Indices minp_apply(const std::vector<double>& p, double critical);
Indices minp_resampling(const std::vector<double>& p, double alpha, const NullSampler& sampler,
                        int n_resamples, std::uint64_t seed);

// Dispatch for every method except minp_resampling (which needs a sampler).
Indices run_baseline(Method m, const std::vector<double>& p, double alpha, const BlockPartition* part = nullptr,
                     std::vector<std::string>* warnings = nullptr);

}  // namespace bfwer
