#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "blockfwer/baselines.hpp"
#include "oracles.hpp"

using namespace bfwer;

namespace {

bool subset(const Indices& a, const Indices& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

std::vector<double> uniforms(std::mt19937_64& rng, std::size_t K) {
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> p(K);
  for (auto& v : p) v = U(rng);
  return p;
}

}  // namespace

TEST(Stepwise, HolmExample) { EXPECT_EQ(holm({0.001, 0.5, 0.9}, 0.05), (Indices{0})); }

TEST(Stepwise, HommelExample) {
  EXPECT_EQ(hommel({0.01, 0.02, 0.03}, 0.05), (Indices{0, 1, 2}));
  EXPECT_EQ(oracle::closed_simes({0.01, 0.02, 0.03}, 0.05), (Indices{0, 1, 2}));
}

TEST(Stepwise, ClassicalCutoffs) {
  const std::vector<double> p{0.004, 0.016, 0.03, 0.9};
  EXPECT_EQ(bonferroni(p, 0.05), (Indices{0}));
  EXPECT_EQ(sidak_single_step({0.0127, 0.0128, 0.5, 0.5}, 0.05), (Indices{0}));
  EXPECT_EQ(holm(p, 0.05), (Indices{0, 1}));
  EXPECT_EQ(hochberg({0.04, 0.045, 0.049}, 0.05), (Indices{0, 1, 2}));
  EXPECT_TRUE(holm({0.04, 0.045, 0.049}, 0.05).empty());
  EXPECT_EQ(sidak_step_down({0.01695, 0.0253, 0.9}, 0.05), (Indices{0, 1}));
}

TEST(Stepwise, EmptyInput) {
  for (Method m : {Method::bonferroni, Method::sidak_ss, Method::holm, Method::hochberg, Method::hommel,
                   Method::sidak_sd, Method::closed_fisher, Method::bh_fdr}) {
    EXPECT_TRUE(run_baseline(m, {}, 0.05).empty()) << to_string(m);
  }
}

TEST(Stepwise, RejectsOutOfRangeP) {
  EXPECT_THROW(holm({0.1, 1.2}, 0.05), std::invalid_argument);
  EXPECT_THROW(bonferroni({-0.1}, 0.05), std::invalid_argument);
  EXPECT_THROW(bonferroni({0.1}, 0.0), std::invalid_argument);
}

TEST(Simes, Example) {
  EXPECT_NEAR(simes({0.01, 0.04, 0.09}), 0.03, 1e-15);
  EXPECT_NEAR(simes({0.09, 0.01, 0.04}), 0.03, 1e-15);
}

TEST(BlockGatekeeping, OneStrongBlock) {
  const auto part = BlockPartition::contiguous(30);
  std::vector<double> p(30, 0.8);
  p[0] = 0.001;
  p[1] = 0.3;
  p[2] = 0.5;
  // Simes of block 0 = 3 * 0.001 = 0.003 <= 0.05 / 10
  EXPECT_EQ(block_gatekeeping(Method::block_holm, p, part, 0.05), (Indices{0, 1, 2}));
  p[0] = 0.002;  // Simes 0.006 > 0.005
  EXPECT_TRUE(block_gatekeeping(Method::block_holm, p, part, 0.05).empty());
  EXPECT_TRUE(block_gatekeeping(Method::block_hochberg, p, part, 0.05).empty());
  EXPECT_THROW(block_gatekeeping(Method::holm, p, part, 0.05), std::invalid_argument);
}

TEST(BlockGatekeeping, NotStronglyValid) {
  EXPECT_FALSE(strong_fwer_valid(Method::block_holm));
  EXPECT_FALSE(strong_fwer_valid(Method::block_hochberg));
  EXPECT_FALSE(strong_fwer_valid(Method::bh_fdr));
  EXPECT_TRUE(strong_fwer_valid(Method::hommel));
}

TEST(ClosedFisher, TwoEqualPValues) {
  const boost::math::chi_squared chi4(4);
  const double stat = -4 * std::log(0.05);
  EXPECT_NEAR(stat, 11.98, 0.005);
  EXPECT_NEAR(boost::math::quantile(boost::math::complement(chi4, 0.05)), 9.488, 5e-4);
  EXPECT_EQ(closed_fisher({0.05, 0.05}, 0.05), (Indices{0, 1}));
}

TEST(ClosedFisher, AllOnesAndZeroClamp) {
  EXPECT_TRUE(closed_fisher({1, 1, 1, 1}, 0.05).empty());
  std::vector<std::string> warnings;
  const auto r = closed_fisher({0.0, 0.5, 0.5}, 0.05, &warnings);
  EXPECT_EQ(r, (Indices{0}));
  ASSERT_EQ(warnings.size(), 1u);
}

TEST(TreeClosure, HartogSingleLeaf) {
  const auto part = BlockPartition::contiguous(3);
  EXPECT_TRUE(tree_closure(Method::hartog_evalue, {0.01, 1, 1}, part, 0.05).empty());
  EXPECT_NEAR(0.5 / std::sqrt(0.01), 5.0, 1e-12);
}

TEST(TreeClosure, HartogStrongBlock) {
  const auto part = BlockPartition::contiguous(3);
  EXPECT_EQ(tree_closure(Method::hartog_evalue, {1e-4, 1e-4, 1e-4}, part, 0.05), (Indices{0, 1, 2}));
}

TEST(TreeClosure, HartogLeafCutoffIsQuarterAlphaSquared) {
  const auto part = BlockPartition::contiguous(3);
  const double cut = 0.025 * 0.025;
  // tiny partners clear the root and block nodes
  EXPECT_EQ(tree_closure(Method::hartog_evalue, {1e-12, 1e-12, cut * (1 - 1e-9)}, part, 0.05),
            (Indices{0, 1, 2}));
  EXPECT_EQ(tree_closure(Method::hartog_evalue, {1e-12, 1e-12, cut * (1 + 1e-9)}, part, 0.05), (Indices{0, 1}));
}

TEST(TreeClosure, MeinshausenEqualsBonferroni) {
  const auto part = BlockPartition::contiguous(30);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 2000; ++t) {
    const auto p = oracle::random_pvalues(rng, 30);
    ASSERT_EQ(tree_closure(Method::meinshausen, p, part, 0.05), bonferroni(p, 0.05));
  }
}

TEST(TreeClosure, NeedsPartition) {
  EXPECT_THROW(run_baseline(Method::meinshausen, {0.1, 0.2, 0.3}, 0.05), std::invalid_argument);
  EXPECT_THROW(run_baseline(Method::minp_resampling, {0.1, 0.2, 0.3}, 0.05), std::invalid_argument);
}

TEST(MinP, IndependentNullsGiveSidak) {
  const std::size_t K = 30;
  const NullSampler s = [&](std::mt19937_64& rng) { return uniforms(rng, K); };
  const double c = minp_critical_value(s, 0.05, 10000, 3);
  EXPECT_NEAR(c, 1 - std::pow(0.95, 1.0 / K), 4e-4);
}

TEST(MinP, FullyDependentNullsGiveAlpha) {
  const NullSampler s = [](std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(0, 1)(rng);
    return std::vector<double>(30, u);
  };
  EXPECT_NEAR(minp_critical_value(s, 0.05, 10000, 4), 0.05, 0.01);
}

TEST(MinP, ApplyAndErrors) {
  EXPECT_EQ(minp_apply({0.001, 0.01, 0.002}, 0.002), (Indices{0, 2}));
  const NullSampler s = [](std::mt19937_64& rng) { return uniforms(rng, 3); };
  EXPECT_THROW(minp_critical_value(s, 0.05, 50, 1), std::invalid_argument);
  EXPECT_EQ(minp_critical_value(s, 0.05, 500, 9), minp_critical_value(s, 0.05, 500, 9));
}

TEST(BhFdr, Examples) {
  EXPECT_EQ(bh_fdr({0.01, 0.02, 0.03, 0.9}, 0.05), (Indices{0, 1, 2}));
  EXPECT_TRUE(bh_fdr({1, 1, 1}, 0.05).empty());
  EXPECT_EQ(bh_fdr({0.05}, 0.05), (Indices{0}));
  EXPECT_TRUE(bh_fdr({0.0500001}, 0.05).empty());
}

TEST(Properties, MonotoneInPValues) {
  const auto part = BlockPartition::contiguous(12);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0, 1);
  for (Method m : all_methods()) {
    if (m == Method::minp_resampling) continue;
    for (int t = 0; t < 300; ++t) {
      auto p = oracle::random_pvalues(rng, 12);
      const auto before = run_baseline(m, p, 0.05, &part);
      p[t % 12] *= U(rng);
      const auto after = run_baseline(m, p, 0.05, &part);
      ASSERT_TRUE(subset(before, after)) << to_string(m) << " case " << t;
    }
  }
}

TEST(Properties, DominationChain) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 3000; ++t) {
    const auto p = oracle::random_pvalues(rng, 1 + t % 30);
    const auto b = bonferroni(p, 0.05), h = holm(p, 0.05), hm = hommel(p, 0.05);
    ASSERT_TRUE(subset(b, h));
    ASSERT_TRUE(subset(h, hm));
    ASSERT_TRUE(subset(h, hochberg(p, 0.05)));
  }
}

TEST(Properties, HartogNullFwerBelowBonferroni) {
  const auto part = BlockPartition::contiguous(30);
  std::mt19937_64 rng(51);
  int hartog = 0, bonf = 0;
  for (int t = 0; t < 20000; ++t) {
    const auto p = uniforms(rng, 30);
    hartog += !tree_closure(Method::hartog_evalue, p, part, 0.05).empty();
    bonf += !bonferroni(p, 0.05).empty();
  }
  EXPECT_LE(hartog, bonf);
  EXPECT_NEAR(bonf / 20000.0, 1 - std::pow(1 - 0.05 / 30, 30), 0.006);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : all_methods()) EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("nope"), std::invalid_argument);
}
