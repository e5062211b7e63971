#include "blockfwer/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "blockfwer/baselines.hpp"
#include "blockfwer/blockwise.hpp"

namespace bfwer {

namespace {

// One method bound to a configuration; apply() must be thread-safe.
class Runner {
 public:
  virtual ~Runner() = default;
  virtual std::vector<std::size_t> apply(const std::vector<double>& p) const = 0;
};

class BaselineRunner : public Runner {
 public:
  BaselineRunner(Method m, double alpha, const BlockPartition& part) : m_(m), alpha_(alpha), part_(&part) {}
  std::vector<std::size_t> apply(const std::vector<double>& p) const override {
    return run_baseline(m_, p, alpha_, part_);
  }

 private:
  Method m_;
  double alpha_;
  const BlockPartition* part_;
};

class MinPRunner : public Runner {
 public:
  explicit MinPRunner(double c) : c_(c) {}
  std::vector<std::size_t> apply(const std::vector<double>& p) const override { return minp_apply(p, c_); }

 private:
  double c_;
};

class BoostRunner : public Runner {
 public:
  BoostRunner(const BlockPartition& part, const std::vector<double>& levels, const AltDensity& g, const QGrid& grid,
              const SolverParams& params)
      : proc_(part, levels, g, grid, params) {}
  std::vector<std::size_t> apply(const std::vector<double>& p) const override { return proc_.apply(p).rejected; }

 private:
  BoostProcedure proc_;
};

class PluginRunner : public Runner {
 public:
  PluginRunner(const BlockPartition& part, const SimConfig& cfg, const QGrid& grid)
      : part_(&part), fold_(FoldSplit::halves(part.n_blocks())), grid_(&grid), params_(cfg.solver) {
    opts_.alpha = cfg.alpha;
    opts_.budget = cfg.budget;
  }
  std::vector<std::size_t> apply(const std::vector<double>& p) const override {
    return plugin_boost_run(p, *part_, fold_, opts_, *grid_, params_).rejections.rejected;
  }

 private:
  const BlockPartition* part_;
  FoldSplit fold_;
  PluginOptions opts_;
  const QGrid* grid_;
  SolverParams params_;
};

struct Tally {
  std::vector<std::int64_t> true_rej, any, all, false_any;
  std::vector<std::vector<std::int64_t>> block_false;
  std::vector<double> seconds;

  Tally(std::size_t n_methods, std::size_t n_blocks)
      : true_rej(n_methods), any(n_methods), all(n_methods), false_any(n_methods),
        block_false(n_methods, std::vector<std::int64_t>(n_blocks)), seconds(n_methods) {}

  void add(const Tally& o) {
    for (std::size_t m = 0; m < true_rej.size(); ++m) {
      true_rej[m] += o.true_rej[m];
      any[m] += o.any[m];
      all[m] += o.all[m];
      false_any[m] += o.false_any[m];
      for (std::size_t b = 0; b < block_false[m].size(); ++b) block_false[m][b] += o.block_false[m][b];
      seconds[m] += o.seconds[m];
    }
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

double mc_se(double p, int n_rep) {
  if (n_rep <= 0) throw std::invalid_argument("mc_se: n_rep must be positive");
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / n_rep);
}

const MethodRecord& SimResult::at(const std::string& method) const {
  for (const auto& r : records) {
    if (r.method == method) return r;
  }
  throw std::out_of_range("no result for method '" + method + "'");
}

SimResult run_experiment(const SimConfig& cfg, int threads) {
  cfg.validate();
  const Dgp dgp(cfg);
  const BlockPartition part = BlockPartition::contiguous(static_cast<std::size_t>(cfg.K));
  const QGrid grid = build_qgrid(cfg.grid);
  const auto [bonf, sidak] = uniform_splits(cfg.alpha, cfg.B);
  const std::vector<double> levels(static_cast<std::size_t>(cfg.B), cfg.budget == Budget::bonferroni ? bonf : sidak);

  std::vector<std::unique_ptr<Runner>> runners;
  for (const auto& name : cfg.methods) {
    if (name == "boost") {
      runners.push_back(std::make_unique<BoostRunner>(part, levels, dgp.density(), grid, cfg.solver));
    } else if (name == "boost_plugin") {
      runners.push_back(std::make_unique<PluginRunner>(part, cfg, grid));
    } else {
      const Method m = method_from_string(name);
      if (m == Method::minp_resampling) {
        NullSampler sampler = [&dgp](std::mt19937_64& rng) { return dgp.sample_with(rng, true).p; };
        const double c = minp_critical_value(sampler, cfg.alpha, cfg.minp_resamples, cfg.seed ^ 0xA5A5A5A5ULL);
        runners.push_back(std::make_unique<MinPRunner>(c));
      } else {
        runners.push_back(std::make_unique<BaselineRunner>(m, cfg.alpha, part));
      }
    }
  }

  const std::size_t n_methods = runners.size();
  const std::size_t n_blocks = part.n_blocks();
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.n_rep);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mtx;
  std::vector<Tally> tallies(static_cast<std::size_t>(threads), Tally(n_methods, n_blocks));

  auto worker = [&](int t) {
    Tally& tally = tallies[static_cast<std::size_t>(t)];
    for (int i = next++; i < cfg.n_rep && !failed; i = next++) {
      try {
        const Replicate rep = dgp.sample(static_cast<std::uint64_t>(i));
        int n_alt = 0;
        for (char a : rep.is_alt) n_alt += a;
        for (std::size_t m = 0; m < n_methods; ++m) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto rej = runners[m]->apply(rep.p);
          tally.seconds[m] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          int n_true = 0;
          bool any_false = false;
          std::vector<char> block_hit(n_blocks, 0);
          for (std::size_t h : rej) {
            if (rep.is_alt[h]) {
              ++n_true;
            } else {
              any_false = true;
              block_hit[h / 3] = 1;
            }
          }
          tally.true_rej[m] += n_true;
          tally.any[m] += n_true > 0;
          tally.all[m] += n_alt > 0 && n_true == n_alt;
          tally.false_any[m] += any_false;
          for (std::size_t b = 0; b < n_blocks; ++b) tally.block_false[m][b] += block_hit[b];
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mtx);
        if (!failed.exchange(true)) {
          error = std::make_exception_ptr(std::runtime_error(
              "replicate " + std::to_string(i) + " (seed " + std::to_string(cfg.seed) + "): " + e.what()));
        }
      }
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  Tally total(n_methods, n_blocks);
  for (const auto& t : tallies) total.add(t);

  SimResult out;
  out.config = cfg;
  const int n_alt = dgp.n_alternatives();
  const double n = cfg.n_rep;
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodRecord r;
    r.method = cfg.methods[m];
    r.ell = n_alt;
    r.has_alternatives = n_alt > 0;
    r.avg_power = n_alt > 0 ? static_cast<double>(total.true_rej[m]) / (n * n_alt) : 0.0;
    r.any_power = total.any[m] / n;
    r.all_reject_prob = total.all[m] / n;
    r.fwer = total.false_any[m] / n;
    std::int64_t hits = 0;
    for (auto h : total.block_false[m]) hits += h;
    r.per_block_fwer = static_cast<double>(hits) / (n * static_cast<double>(n_blocks));
    r.mc_se_power = mc_se(r.avg_power, cfg.n_rep);
    r.mc_se_fwer = mc_se(r.fwer, cfg.n_rep);
    r.wall_clock_seconds = total.seconds[m];
    out.records.push_back(r);
  }
  return out;
}

std::vector<SimResult> sweep(const std::vector<SimConfig>& configs, int threads) {
  std::vector<SimResult> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(run_experiment(c, threads));
  return out;
}

std::string csv_header() { return "family,theta,K,B,alpha,method,metric,value,mc_se,n_rep,seed,config"; }

void write_csv(std::ostream& os, const std::vector<SimResult>& results, bool timing) {
  os << csv_header() << '\n';
  for (const auto& res : results) {
    const auto& c = res.config;
    const AltDensity g = AltDensity::from_json(c.family);
    const std::string theta = g.params().empty() ? "" : fmt(g.params()[0]);
    const std::string label = c.label();
    for (const auto& r : res.records) {
      auto row = [&](const std::string& metric, double value, double se) {
        os << to_string(g.kind()) << ',' << theta << ',' << c.K << ',' << c.B << ',' << fmt(c.alpha) << ','
           << r.method << ',' << metric << ',' << fmt(value) << ',' << fmt(se) << ',' << c.n_rep << ','
           << c.seed << ',' << label << '\n';
      };
      if (r.has_alternatives) {
        row("avg_power", r.avg_power, r.mc_se_power);
        row("any_power", r.any_power, mc_se(r.any_power, c.n_rep));
        row("all_reject_prob", r.all_reject_prob, mc_se(r.all_reject_prob, c.n_rep));
      }
      if (r.ell < c.K) {
        row("fwer_ell" + std::to_string(r.ell), r.fwer, r.mc_se_fwer);
        row("per_block_fwer", r.per_block_fwer, mc_se(r.per_block_fwer, c.n_rep));
      }
      if (timing) row("wall_clock_seconds", r.wall_clock_seconds, 0.0);
    }
  }
}

}  // namespace bfwer
