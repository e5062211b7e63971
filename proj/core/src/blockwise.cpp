#include "blockfwer/blockwise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace bfwer {

void BlockPartition::validate() const {
  const std::size_t K = hypothesis_ids.size();
  if (K == 0 || K % 3 != 0) throw std::invalid_argument("partition: K must be a positive multiple of 3");
  if (blocks.size() * 3 != K) throw std::invalid_argument("partition: blocks must cover all K hypotheses");
  if (!block_ids.empty() && block_ids.size() != blocks.size()) {
    throw std::invalid_argument("partition: one block id per block");
  }
  std::vector<char> seen(K, 0);
  for (const auto& b : blocks) {
    for (std::size_t i : b) {
      if (i >= K) throw std::invalid_argument("partition: member index out of range");
      if (seen[i]) throw std::invalid_argument("partition: hypothesis " + hypothesis_ids[i] + " in two blocks");
      seen[i] = 1;
    }
  }
}

BlockPartition BlockPartition::contiguous(std::size_t K) {
  BlockPartition p;
  for (std::size_t i = 0; i < K; ++i) p.hypothesis_ids.push_back(std::to_string(i));
  for (std::size_t b = 0; b * 3 < K; ++b) {
    p.blocks.push_back({3 * b, 3 * b + 1, 3 * b + 2});
    p.block_ids.push_back(std::to_string(b));
  }
  p.validate();
  return p;
}

BlockPartition BlockPartition::from_labels(const std::vector<std::string>& hypothesis_ids,
                                           const std::vector<std::string>& block_labels) {
  if (hypothesis_ids.size() != block_labels.size()) {
    throw std::invalid_argument("partition: one block label per hypothesis");
  }
  BlockPartition p;
  p.hypothesis_ids = hypothesis_ids;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < block_labels.size(); ++i) {
    auto [it, fresh] = index.emplace(block_labels[i], members.size());
    if (fresh) {
      members.emplace_back();
      p.block_ids.push_back(block_labels[i]);
    }
    members[it->second].push_back(i);
  }
  for (std::size_t b = 0; b < members.size(); ++b) {
    if (members[b].size() != 3) {
      throw std::invalid_argument("partition: block '" + p.block_ids[b] + "' has " +
                                  std::to_string(members[b].size()) + " members, expected 3");
    }
    p.blocks.push_back({members[b][0], members[b][1], members[b][2]});
  }
  std::set<std::string> ids(hypothesis_ids.begin(), hypothesis_ids.end());
  if (ids.size() != hypothesis_ids.size()) throw std::invalid_argument("partition: duplicate hypothesis id");
  p.validate();
  return p;
}

nlohmann::json RejectionSet::to_json(const BlockPartition& part) const {
  nlohmann::json j;
  j["rejected"] = nlohmann::json::array();
  for (std::size_t i : rejected) j["rejected"].push_back(part.hypothesis_ids.at(i));
  j["per_block"] = nlohmann::json::object();
  for (std::size_t b = 0; b < per_block.size(); ++b) j["per_block"][part.block_ids.at(b)] = per_block[b];
  return j;
}

std::array<std::size_t, 3> sorted_members(const std::array<std::size_t, 3>& members,
                                          const std::vector<double>& p) {
  std::array<std::size_t, 3> m = members;
  std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
    return p[a] < p[b] || (p[a] == p[b] && a < b);
  });
  return m;
}

BoostProcedure::BoostProcedure(const BlockPartition& part, const std::vector<double>& levels,
                               const AltDensity& g, const QGrid& grid, const SolverParams& params,
                               SolveCache* cache)
    : BoostProcedure(part, levels, std::vector<AltDensity>(part.n_blocks(), g), grid, params, cache) {}

BoostProcedure::BoostProcedure(const BlockPartition& part, const std::vector<double>& levels,
                               const std::vector<AltDensity>& densities, const QGrid& grid,
                               const SolverParams& params, SolveCache* cache)
    : part_(&part), levels_(levels) {
  part.validate();
  if (levels.size() != part.n_blocks()) throw std::invalid_argument("one level per block required");
  if (densities.size() != part.n_blocks()) throw std::invalid_argument("one density per block required");
  std::map<std::pair<std::string, double>, std::size_t> by_key;
  rule_of_block_.resize(levels.size());
  for (std::size_t b = 0; b < levels.size(); ++b) {
    const double a = levels[b];
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("block " + part.block_ids[b] + ": level must lie in (0,1)");
    }
    const AltDensity& g = densities[b];
    const auto key = std::make_pair(g.id(), a);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      SolveResult r = cache ? cache->get_or_solve(a, g, grid, params) : compute_optimal_mu(a, g, grid, params);
      if (r.diag.flag != SolveFlag::success) {
        throw SolveError("block " + part.block_ids[b] + " (level " + std::to_string(a) + "): " + r.diag.message,
                         r.diag);
      }
      it = by_key.emplace(key, rules_.size()).first;
      rules_.emplace_back(r.mu, g, a);
      solves_.push_back(std::move(r));
    }
    rule_of_block_[b] = it->second;
  }
}

int BoostProcedure::block_rejections(std::size_t b, const std::vector<double>& p) const {
  const auto m = sorted_members(part_->blocks[b], p);
  return rules_[rule_of_block_[b]].rejections({p[m[0]], p[m[1]], p[m[2]]});
}

RejectionSet BoostProcedure::apply(const std::vector<double>& p) const {
  if (p.size() != part_->n_hypotheses()) {
    throw std::invalid_argument("p-value count " + std::to_string(p.size()) + " does not match partition size " +
                                std::to_string(part_->n_hypotheses()));
  }
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("p-values must lie in [0,1]");
  }
  RejectionSet rs;
  rs.per_block.resize(part_->n_blocks());
  for (std::size_t b = 0; b < part_->n_blocks(); ++b) {
    const auto m = sorted_members(part_->blocks[b], p);
    const int R = rules_[rule_of_block_[b]].rejections({p[m[0]], p[m[1]], p[m[2]]});
    rs.per_block[b] = R;
    for (int r = 0; r < R; ++r) rs.rejected.push_back(m[r]);
  }
  std::sort(rs.rejected.begin(), rs.rejected.end());
  return rs;
}

RejectionSet boost_run(const std::vector<double>& pvalues, const BlockPartition& part,
                       const std::vector<double>& levels, const AltDensity& g, const QGrid& grid,
                       const SolverParams& params) {
  return BoostProcedure(part, levels, g, grid, params).apply(pvalues);
}

double deflate_alpha(double alpha, double L3, std::size_t B_T, std::size_t n) {
  if (n < 2) throw std::invalid_argument("deflate_alpha: n must be >= 2");
  if (L3 < 0.0) throw std::invalid_argument("deflate_alpha: L3 must be >= 0");
  const double out = alpha - L3 * static_cast<double>(B_T) * grenander_rate(n);
  if (!(out > 0.0)) {
    throw std::invalid_argument("deflated level " + std::to_string(out) +
                                " is not positive; use a larger estimation fold or a smaller L3");
  }
  return out;
}

void FoldSplit::validate(std::size_t n_blocks) const {
  if (testing.empty()) throw std::invalid_argument("fold split: testing fold is empty");
  if (estimation.empty()) throw std::invalid_argument("fold split: estimation fold is empty");
  std::vector<char> seen(n_blocks, 0);
  for (const auto* fold : {&estimation, &testing}) {
    for (std::size_t b : *fold) {
      if (b >= n_blocks) throw std::invalid_argument("fold split: block index out of range");
      if (seen[b]) throw std::invalid_argument("fold split: block " + std::to_string(b) + " listed twice");
      seen[b] = 1;
    }
  }
  for (std::size_t b = 0; b < n_blocks; ++b) {
    if (!seen[b]) throw std::invalid_argument("fold split: block " + std::to_string(b) + " is in neither fold");
  }
}

FoldSplit FoldSplit::halves(std::size_t n_blocks) {
  FoldSplit f;
  for (std::size_t b = 0; b < n_blocks; ++b) (b < n_blocks / 2 ? f.estimation : f.testing).push_back(b);
  return f;
}

PluginResult plugin_boost_run(const std::vector<double>& pvalues, const BlockPartition& part,
                              const FoldSplit& fold, const PluginOptions& opts, const QGrid& grid,
                              const SolverParams& params) {
  part.validate();
  fold.validate(part.n_blocks());
  if (pvalues.size() != part.n_hypotheses()) throw std::invalid_argument("p-value count does not match partition");

  std::vector<double> est;
  for (std::size_t b : fold.estimation) {
    for (std::size_t i : part.blocks[b]) est.push_back(pvalues[i]);
  }
  if (est.size() < 3) throw std::invalid_argument("estimation fold needs at least 3 p-values");

  PluginResult out;
  out.fit = fit_grenander(est);
  const AltDensity ghat = AltDensity::grenander(out.fit);

  const std::size_t BT = fold.testing.size();
  out.alpha_used = opts.deflate_L3 ? deflate_alpha(opts.alpha, *opts.deflate_L3, BT, est.size()) : opts.alpha;
  const auto [bonf, sidak] = uniform_splits(out.alpha_used, static_cast<int>(BT));
  const double level = opts.budget == Budget::bonferroni ? bonf : sidak;
  out.levels.assign(BT, level);

  // sub-partition over testing blocks only
  BlockPartition sub;
  std::vector<std::size_t> back;
  std::vector<double> sub_p;
  for (std::size_t b : fold.testing) {
    std::array<std::size_t, 3> m{};
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = part.blocks[b][k];
      m[k] = back.size();
      back.push_back(i);
      sub.hypothesis_ids.push_back(part.hypothesis_ids[i]);
      sub_p.push_back(pvalues[i]);
    }
    sub.blocks.push_back(m);
    sub.block_ids.push_back(part.block_ids[b]);
  }
  const RejectionSet rs = BoostProcedure(sub, out.levels, ghat, grid, params).apply(sub_p);

  out.rejections.per_block.assign(part.n_blocks(), 0);
  for (std::size_t t = 0; t < fold.testing.size(); ++t) out.rejections.per_block[fold.testing[t]] = rs.per_block[t];
  for (std::size_t i : rs.rejected) out.rejections.rejected.push_back(back[i]);
  std::sort(out.rejections.rejected.begin(), out.rejections.rejected.end());
  return out;
}

RejectionSet plugin_boost_swap(const std::vector<double>& pvalues, const BlockPartition& part,
                               const FoldSplit& fold, const PluginOptions& opts, const QGrid& grid,
                               const SolverParams& params) {
  PluginOptions half = opts;
  half.alpha = opts.alpha / 2.0;
  const PluginResult a = plugin_boost_run(pvalues, part, fold, half, grid, params);
  const PluginResult b = plugin_boost_run(pvalues, part, fold.swapped(), half, grid, params);
  RejectionSet out;
  out.per_block.assign(part.n_blocks(), 0);
  for (std::size_t i = 0; i < part.n_blocks(); ++i) {
    out.per_block[i] = std::max(a.rejections.per_block[i], b.rejections.per_block[i]);
  }
  out.rejected = a.rejections.rejected;
  out.rejected.insert(out.rejected.end(), b.rejections.rejected.begin(), b.rejections.rejected.end());
  std::sort(out.rejected.begin(), out.rejected.end());
  out.rejected.erase(std::unique(out.rejected.begin(), out.rejected.end()), out.rejected.end());
  return out;
}

}  // namespace bfwer
