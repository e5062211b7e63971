#include "blockfwer_cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blockfwer/allocation.hpp"
#include "blockfwer/baselines.hpp"
#include "blockfwer/blockwise.hpp"
#include "blockfwer/densities.hpp"
#include "blockfwer/dgp.hpp"
#include "blockfwer/io.hpp"
#include "blockfwer/k3solver.hpp"
#include "blockfwer/quadrature.hpp"
#include "blockfwer/simharness.hpp"

namespace bfwer::cli {

namespace {

using nlohmann::json;

// Raised for flag combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const CLI::Validator kOpenUnit = CLI::Validator(
    [](std::string& s) -> std::string {
      try {
        const double v = std::stod(s);
        if (v > 0.0 && v < 1.0) return "";
      } catch (const std::exception&) {
      }
      return "value " + s + " must lie in (0,1)";
    },
    "(0,1)");

struct FamilyOpts {
  std::string family = "truncnorm";
  std::optional<double> theta, df, shape, mean1, mean2;
  double bound = 6.0;
  std::string spec;  // inline JSON or a file holding {kind, params}

  void add(CLI::App* app) {
    app->add_option("--family", family, "Alternative family")
        ->check(CLI::IsMember({"truncnorm", "tdist", "beta", "mixnorm", "uniform"}));
    app->add_option("--theta", theta, "Location of the truncnorm alternative (< 0)");
    app->add_option("--df", df, "Degrees of freedom for tdist");
    app->add_option("--shape", shape, "Beta(shape, 1) parameter in (0,1)");
    app->add_option("--mean1", mean1, "First mixnorm component location");
    app->add_option("--mean2", mean2, "Second mixnorm component location");
    app->add_option("--trunc-bound", bound, "Truncation bound for truncnorm/mixnorm");
    app->add_option("--family-json", spec, "Density spec as inline JSON or a JSON file");
  }

  AltDensity build() const {
    if (!spec.empty()) {
      const json j = spec.front() == '{' ? json::parse(spec) : read_json_file(spec);
      return AltDensity::from_json(j);
    }
    if (family == "truncnorm") {
      if (!theta) throw UsageError("--family truncnorm requires --theta");
      return AltDensity::truncnorm(*theta, bound);
    }
    if (family == "tdist") {
      if (!df) throw UsageError("--family tdist requires --df");
      return AltDensity::tdist(*df);
    }
    if (family == "beta") {
      if (!shape) throw UsageError("--family beta requires --shape");
      return AltDensity::beta(*shape);
    }
    if (family == "mixnorm") {
      if (mean1 && mean2) return AltDensity::mixnorm(*mean1, *mean2, bound);
      if (theta) return AltDensity::mixnorm(1.5 * *theta, 0.5 * *theta, bound);
      throw UsageError("--family mixnorm requires --mean1/--mean2 or --theta");
    }
    return AltDensity::uniform();
  }
};

struct GridOpts {
  int n_per_axis = 70;
  double grading = 10.0;

  void add(CLI::App* app) {
    app->add_option("--n-per-axis", n_per_axis, "Quadrature breakpoints per axis")->check(CLI::Range(2, 2000));
    app->add_option("--grading", grading, "Grading strength toward the origin (0 = uniform)")
        ->check(CLI::Range(0.0, 50.0));
  }
  QGrid build() const {
    QGridOptions o;
    o.n_per_axis = n_per_axis;
    o.grading = grading;
    return build_qgrid(o);
  }
};

struct SolverOpts {
  SolverParams p;
  bool strict = false;

  void add(CLI::App* app) {
    app->add_option("--delta", p.delta, "Constraint tolerance")->check(CLI::PositiveNumber);
    app->add_option("--epsilon", p.epsilon, "Outer convergence tolerance on mu")->check(CLI::PositiveNumber);
    app->add_option("--t-max", p.t_max, "Maximum outer iterations")->check(CLI::PositiveNumber);
    app->add_option("--u-max", p.u_max, "Largest admissible multiplier")->check(CLI::PositiveNumber);
    app->add_flag("--strict", strict, "Stop with level_unreachable instead of zeroing slack multipliers");
  }
  SolverParams build() const {
    SolverParams q = p;
    q.project_slack = !strict;
    return q;
  }
};

void emit(const json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

void configure_cache() {
  if (const char* dir = std::getenv("BLOCKFWER_CACHE_DIR"); dir && *dir) global_solve_cache().set_directory(dir);
}

Budget parse_budget(const std::string& s) { return budget_from_string(s); }

json levels_json(const BlockPartition& part, const std::vector<double>& levels) {
  json j = json::object();
  for (std::size_t b = 0; b < levels.size(); ++b) j[part.block_ids[b]] = levels[b];
  return j;
}

json solves_json(const BoostProcedure& proc, const BlockPartition& part) {
  json arr = json::array();
  std::map<const SolveResult*, json> seen;
  for (std::size_t b = 0; b < part.n_blocks(); ++b) {
    const SolveResult& r = proc.solve_for_block(b);
    auto it = seen.find(&r);
    if (it == seen.end()) {
      json s;
      s["level"] = r.alpha;
      s["mu"] = {r.mu[0], r.mu[1], r.mu[2]};
      s["flag"] = to_string(r.diag.flag);
      s["outer_iterations"] = r.diag.outer_iterations;
      s["blocks"] = json::array();
      it = seen.emplace(&r, s).first;
    }
    it->second["blocks"].push_back(part.block_ids[b]);
  }
  for (auto& [ptr, s] : seen) arr.push_back(s);
  std::sort(arr.begin(), arr.end(), [](const json& a, const json& b) {
    return a["blocks"][0].get<std::string>() < b["blocks"][0].get<std::string>();
  });
  return arr;
}

// Block id -> density spec; blocks absent from the file fall back to `fallback`.
std::vector<AltDensity> block_densities(const BlockPartition& part, const std::string& file,
                                        const std::optional<AltDensity>& fallback) {
  std::map<std::string, AltDensity> given;
  if (!file.empty()) {
    const json j = read_json_file(file);
    if (!j.is_object()) throw UsageError(file + ": expected an object mapping block ids to density specs");
    for (const auto& [k, v] : j.items()) given.emplace(k, AltDensity::from_json(v));
  }
  std::vector<AltDensity> out;
  for (const auto& id : part.block_ids) {
    auto it = given.find(id);
    if (it != given.end()) {
      out.push_back(it->second);
    } else if (fallback) {
      out.push_back(*fallback);
    } else {
      throw UsageError("no density given for block '" + id + "'");
    }
  }
  return out;
}

AllocationResult allocate_levels(const std::vector<AltDensity>& dens, const std::vector<std::string>& ids,
                                 double alpha, Budget budget, int points, const QGrid& grid,
                                 const SolverParams& params, std::ostream& err) {
  // one curve per distinct density
  std::map<std::string, std::size_t> index;
  std::vector<AltDensity> uniq;
  std::vector<std::size_t> which;
  for (const auto& g : dens) {
    auto [it, fresh] = index.emplace(g.id(), uniq.size());
    if (fresh) uniq.push_back(g);
    which.push_back(it->second);
  }
  const auto grid_a = default_alpha_grid(alpha, static_cast<int>(dens.size()), points);
  const auto curves = build_value_curves(uniq, grid_a, grid, params, 1);
  std::vector<ValueCurve> per_block;
  for (std::size_t b = 0; b < dens.size(); ++b) {
    const ValueCurve& c = curves[which[b]];
    per_block.emplace_back(c.alphas(), c.raw_values(), ids[b]);
  }
  AllocationResult r = budget == Budget::bonferroni ? kkt_bisection_bonferroni(curve_refs(per_block), alpha)
                                                    : kkt_bisection_sidak(curve_refs(per_block), alpha);
  if (!r.binding) err << "warning: budget does not bind; every curve is flat beyond its allocated level\n";
  return r;
}

json rejection_json_by_labels(const std::vector<std::size_t>& rejected, const PValueTable& t) {
  json j;
  j["rejected"] = json::array();
  j["per_block"] = json::object();
  for (const auto& b : t.block_ids) j["per_block"][b] = 0;
  for (std::size_t i : rejected) {
    j["rejected"].push_back(t.hypothesis_ids[i]);
    j["per_block"][t.block_ids[i]] = j["per_block"][t.block_ids[i]].get<int>() + 1;
  }
  return j;
}

FoldSplit make_fold(const BlockPartition& part, const std::vector<std::string>& est_ids,
                    const std::optional<std::uint64_t>& seed) {
  FoldSplit f;
  if (!est_ids.empty()) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t b = 0; b < part.n_blocks(); ++b) pos[part.block_ids[b]] = b;
    std::vector<char> in_est(part.n_blocks(), 0);
    for (const auto& id : est_ids) {
      auto it = pos.find(id);
      if (it == pos.end()) throw UsageError("--estimation-blocks: unknown block '" + id + "'");
      in_est[it->second] = 1;
    }
    for (std::size_t b = 0; b < part.n_blocks(); ++b) (in_est[b] ? f.estimation : f.testing).push_back(b);
  } else if (seed) {
    std::vector<std::size_t> order(part.n_blocks());
    for (std::size_t b = 0; b < order.size(); ++b) order[b] = b;
    auto rng = replicate_rng(*seed, 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    const std::size_t half = order.size() / 2;
    f.estimation.assign(order.begin(), order.begin() + static_cast<long>(half));
    f.testing.assign(order.begin() + static_cast<long>(half), order.end());
    std::sort(f.estimation.begin(), f.estimation.end());
    std::sort(f.testing.begin(), f.testing.end());
  } else {
    f = FoldSplit::halves(part.n_blocks());
  }
  f.validate(part.n_blocks());
  return f;
}

json plugin_json(const PValueTable& t, const BlockPartition& part, const FoldSplit& fold, const PluginOptions& po,
                 bool swap, const QGrid& grid, const SolverParams& params) {
  json j;
  auto ids = [&](const std::vector<std::size_t>& bs) {
    json a = json::array();
    for (std::size_t b : bs) a.push_back(part.block_ids[b]);
    return a;
  };
  j["alpha"] = po.alpha;
  j["budget"] = to_string(po.budget);
  j["estimation_blocks"] = ids(fold.estimation);
  j["testing_blocks"] = ids(fold.testing);
  if (swap) {
    const RejectionSet rs = plugin_boost_swap(t.p, part, fold, po, grid, params);
    j.update(rs.to_json(part));
    j["swap"] = true;
  } else {
    const PluginResult r = plugin_boost_run(t.p, part, fold, po, grid, params);
    j.update(r.rejections.to_json(part));
    j["alpha_used"] = r.alpha_used;
    json lv = json::object();
    for (std::size_t i = 0; i < fold.testing.size(); ++i) lv[part.block_ids[fold.testing[i]]] = r.levels[i];
    j["levels"] = lv;
    j["ghat"] = AltDensity::grenander(r.fit).to_json();
  }
  return j;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block-separable strong-FWER testing for blocks of three hypotheses", "blockfwer"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // solve
  double s_alpha = 0.0;
  std::string s_out;
  bool s_traj = false;
  FamilyOpts s_fam;
  GridOpts s_grid;
  SolverOpts s_solver;
  auto* solve = app.add_subcommand("solve", "Solve the K=3 optimal rule at one block level");
  solve->add_option("--alpha", s_alpha, "Block level in (0,1)")->required()->check(kOpenUnit);
  s_fam.add(solve);
  s_grid.add(solve);
  s_solver.add(solve);
  solve->add_flag("--trajectory", s_traj, "Include the per-iteration multiplier trajectory");
  solve->add_option("--out", s_out, "Write the artifact here instead of stdout");

  // run
  std::string r_pvals, r_budget = "bonferroni", r_blocks_file, r_out, r_est;
  double r_alpha = 0.0;
  bool r_ghat = false, r_swap = false;
  std::optional<double> r_L3;
  std::optional<std::uint64_t> r_seed;
  int r_points = 12;
  FamilyOpts r_fam;
  GridOpts r_grid;
  SolverOpts r_solver;
  auto* runc = app.add_subcommand("run", "Apply the blockwise procedure to a p-value file");
  runc->add_option("--pvalues", r_pvals, "CSV with hypothesis_id,block_id,p_value")->required();
  runc->add_option("--alpha", r_alpha, "Global level in (0,1)")->required()->check(kOpenUnit);
  runc->add_option("--budget", r_budget, "Level split")
      ->check(CLI::IsMember({"bonferroni", "sidak", "kkt", "kkt_sidak"}));
  runc->add_option("--block-families", r_blocks_file, "JSON object: block id -> density spec (kkt budgets)");
  runc->add_option("--curve-points", r_points, "Value-curve grid size for kkt budgets")->check(CLI::Range(2, 200));
  runc->add_flag("--ghat-from-fold", r_ghat, "Estimate g by Grenander on an estimation fold");
  runc->add_option("--estimation-blocks", r_est, "Comma-separated block ids for the estimation fold");
  runc->add_option("--deflate-L3", r_L3, "Deflate the level by L3 * B_T * rate(n)")->check(CLI::NonNegativeNumber);
  runc->add_flag("--swap", r_swap, "Cross-fit both folds at half level each");
  runc->add_option("--seed", r_seed, "Seed for a random fold split");
  r_fam.add(runc);
  r_grid.add(runc);
  r_solver.add(runc);
  runc->add_option("--out", r_out, "Write the result here instead of stdout");

  // plugin
  std::string p_pvals, p_budget = "bonferroni", p_out, p_est;
  double p_alpha = 0.0;
  bool p_swap = false;
  std::optional<double> p_L3;
  std::optional<std::uint64_t> p_seed;
  GridOpts p_grid;
  SolverOpts p_solver;
  auto* plugin = app.add_subcommand("plugin", "Sample-split procedure with a Grenander estimate of g");
  plugin->add_option("--pvalues", p_pvals, "CSV with hypothesis_id,block_id,p_value")->required();
  plugin->add_option("--alpha", p_alpha, "Global level in (0,1)")->required()->check(kOpenUnit);
  plugin->add_option("--budget", p_budget, "Level split")->check(CLI::IsMember({"bonferroni", "sidak"}));
  plugin->add_option("--estimation-blocks", p_est, "Comma-separated block ids for the estimation fold");
  plugin->add_option("--seed", p_seed, "Seed for a random fold split (default: first half of the blocks)");
  plugin->add_option("--deflate-L3", p_L3, "Deflate the level by L3 * B_T * rate(n)")->check(CLI::NonNegativeNumber);
  plugin->add_flag("--swap", p_swap, "Cross-fit both folds at half level each");
  p_grid.add(plugin);
  p_solver.add(plugin);
  plugin->add_option("--out", p_out, "Write the result here instead of stdout");

  // allocate
  double a_alpha = 0.0;
  std::string a_budget = "bonferroni", a_blocks, a_curves, a_out;
  int a_points = 12;
  GridOpts a_grid;
  SolverOpts a_solver;
  auto* alloc = app.add_subcommand("allocate", "Equalized-marginal level allocation across blocks");
  alloc->add_option("--alpha", a_alpha, "Global level in (0,1)")->required()->check(kOpenUnit);
  alloc->add_option("--budget", a_budget, "Budget")->check(CLI::IsMember({"bonferroni", "sidak"}));
  auto* a_bopt = alloc->add_option("--blocks", a_blocks, "JSON object: block id -> density spec");
  auto* a_copt = alloc->add_option("--curves", a_curves, "JSON array of value curves");
  a_bopt->excludes(a_copt);
  alloc->add_option("--curve-points", a_points, "Value-curve grid size")->check(CLI::Range(2, 200));
  a_grid.add(alloc);
  a_solver.add(alloc);
  alloc->add_option("--out", a_out, "Write the result here instead of stdout");

  // baseline
  std::string b_method, b_pvals, b_part, b_out;
  double b_alpha = 0.0;
  std::optional<std::uint64_t> b_seed;
  int b_resamples = 10000;
  auto* base = app.add_subcommand("baseline", "Run a comparison procedure on a p-value file");
  std::vector<std::string> names;
  for (Method m : all_methods()) names.push_back(to_string(m));
  base->add_option("--method", b_method, "Procedure")->required()->check(CLI::IsMember(names));
  base->add_option("--alpha", b_alpha, "Level in (0,1)")->required()->check(kOpenUnit);
  base->add_option("--pvalues", b_pvals, "CSV with hypothesis_id,block_id,p_value")->required();
  base->add_option("--partition", b_part, "CSV with hypothesis_id,block_id overriding the file's blocks");
  base->add_option("--seed", b_seed, "Seed (required by minp_resampling)");
  base->add_option("--resamples", b_resamples, "Null resamples for minp_resampling")->check(CLI::Range(100, 100000000));
  base->add_option("--out", b_out, "Write the result here instead of stdout");

  // simulate
  std::string m_config, m_out;
  std::uint64_t m_seed = 0;
  int m_threads = 1;
  std::optional<int> m_nrep;
  bool m_timing = false;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo experiment(s) from a JSON config");
  sim->add_option("--config", m_config, "JSON config object or array of configs")->required();
  sim->add_option("--seed", m_seed, "Seed for every config in the file")->required();
  sim->add_option("--threads", m_threads, "Worker threads")->check(CLI::Range(1, 1024));
  sim->add_option("--n-rep", m_nrep, "Override replicate count")->check(CLI::Range(100, 100000000));
  sim->add_flag("--timing", m_timing, "Append wall-clock rows (output is then not reproducible)");
  sim->add_option("--out", m_out, "Write the CSV here instead of stdout");

  // curves
  double c_alpha = 0.0;
  int c_blocks = 10, c_points = 12;
  std::string c_out, c_id;
  FamilyOpts c_fam;
  GridOpts c_grid;
  SolverOpts c_solver;
  auto* curves = app.add_subcommand("curves", "Tabulate the per-block value curve pi_3");
  curves->add_option("--alpha", c_alpha, "Global level in (0,1)")->required()->check(kOpenUnit);
  curves->add_option("--blocks", c_blocks, "Number of blocks B sharing the level")->check(CLI::Range(1, 100000));
  curves->add_option("--points", c_points, "Grid size")->check(CLI::Range(2, 200));
  curves->add_option("--block-id", c_id, "Identifier stored with the curve");
  c_fam.add(curves);
  c_grid.add(curves);
  c_solver.add(curves);
  curves->add_option("--out", c_out, "Write the curve here instead of stdout");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // subcommand help lands here as CallForHelp from the subcommand
    if (e.get_exit_code() == 0) {
      const CLI::App* sub = nullptr;
      for (const auto* s : app.get_subcommands()) sub = s;
      out << (sub ? sub->help() : app.help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  configure_cache();
  try {
    if (*solve) {
      const AltDensity g = s_fam.build();
      const QGrid grid = s_grid.build();
      const SolverParams params = s_solver.build();
      const SolveResult r = global_solve_cache().get_or_solve(s_alpha, g, grid, params);
      json art = solve_artifact(r, g, grid, params);
      if (!s_traj) art.erase("trajectory");
      emit(art, s_out, out);
      if (r.diag.flag != SolveFlag::success) {
        err << "error: " << r.diag.message << "\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*runc) {
      const PValueTable t = read_pvalue_csv_file(r_pvals);
      const BlockPartition part = t.partition();
      const QGrid grid = r_grid.build();
      const SolverParams params = r_solver.build();
      if (r_ghat) {
        if (r_budget != "bonferroni" && r_budget != "sidak") throw UsageError("--ghat-from-fold needs a uniform budget");
        PluginOptions po;
        po.alpha = r_alpha;
        po.budget = parse_budget(r_budget);
        po.deflate_L3 = r_L3;
        const FoldSplit fold = make_fold(part, split_commas(r_est), r_seed);
        emit(plugin_json(t, part, fold, po, r_swap, grid, params), r_out, out);
        return kExitOk;
      }
      const bool hetero = !r_blocks_file.empty();
      std::optional<AltDensity> g;
      if (!hetero || !r_fam.spec.empty() || r_fam.theta || r_fam.df || r_fam.shape || r_fam.mean1 ||
          r_fam.family != "truncnorm") {
        g = r_fam.build();
      }
      if (hetero && r_budget.rfind("kkt", 0) != 0) throw UsageError("--block-families requires --budget kkt or kkt_sidak");
      const std::vector<AltDensity> dens = block_densities(part, r_blocks_file, g);
      const int B = static_cast<int>(part.n_blocks());
      std::vector<double> levels;
      json alloc_info;
      if (r_budget == "bonferroni" || r_budget == "sidak") {
        const auto [bonf, sidak] = uniform_splits(r_alpha, B);
        levels.assign(part.n_blocks(), r_budget == "bonferroni" ? bonf : sidak);
      } else {
        const Budget b = r_budget == "kkt" ? Budget::bonferroni : Budget::sidak;
        const AllocationResult ar = allocate_levels(dens, part.block_ids, r_alpha, b, r_points, grid, params, err);
        levels = ar.levels;
        alloc_info = ar.to_json();
        alloc_info.erase("levels");
      }
      const BoostProcedure proc(part, levels, dens, grid, params);
      const RejectionSet rs = proc.apply(t.p);
      json j = rs.to_json(part);
      j["alpha"] = r_alpha;
      j["budget"] = r_budget;
      j["levels"] = levels_json(part, levels);
      if (!alloc_info.is_null()) j["allocation"] = alloc_info;
      j["solves"] = solves_json(proc, part);
      emit(j, r_out, out);
      return kExitOk;
    }

    if (*plugin) {
      const PValueTable t = read_pvalue_csv_file(p_pvals);
      const BlockPartition part = t.partition();
      PluginOptions po;
      po.alpha = p_alpha;
      po.budget = parse_budget(p_budget);
      po.deflate_L3 = p_L3;
      const FoldSplit fold = make_fold(part, split_commas(p_est), p_seed);
      emit(plugin_json(t, part, fold, po, p_swap, p_grid.build(), p_solver.build()), p_out, out);
      return kExitOk;
    }

    if (*alloc) {
      const Budget budget = parse_budget(a_budget);
      std::vector<std::string> ids;
      AllocationResult ar;
      if (!a_curves.empty()) {
        const json j = read_json_file(a_curves);
        if (!j.is_array() || j.empty()) throw UsageError(a_curves + ": expected a non-empty array of curves");
        std::vector<ValueCurve> cs;
        for (const auto& c : j) cs.push_back(ValueCurve::from_json(c));
        for (std::size_t b = 0; b < cs.size(); ++b) {
          ids.push_back(cs[b].block_id().empty() ? std::to_string(b) : cs[b].block_id());
        }
        ar = budget == Budget::bonferroni ? kkt_bisection_bonferroni(curve_refs(cs), a_alpha)
                                          : kkt_bisection_sidak(curve_refs(cs), a_alpha);
        if (!ar.binding) err << "warning: budget does not bind; every curve is flat beyond its allocated level\n";
      } else if (!a_blocks.empty()) {
        const json j = read_json_file(a_blocks);
        if (!j.is_object() || j.empty()) throw UsageError(a_blocks + ": expected an object of density specs");
        std::vector<AltDensity> dens;
        for (const auto& [k, v] : j.items()) {
          ids.push_back(k);
          dens.push_back(AltDensity::from_json(v));
        }
        ar = allocate_levels(dens, ids, a_alpha, budget, a_points, a_grid.build(), a_solver.build(), err);
      } else {
        throw UsageError("allocate needs --blocks or --curves");
      }
      json out_j = ar.to_json();
      json lv = json::object();
      for (std::size_t b = 0; b < ids.size(); ++b) lv[ids[b]] = ar.levels[b];
      out_j["levels"] = lv;
      out_j["alpha"] = a_alpha;
      emit(out_j, a_out, out);
      return kExitOk;
    }

    if (*base) {
      const Method m = method_from_string(b_method);
      if (m == Method::minp_resampling && !b_seed) throw UsageError("--method minp_resampling requires --seed");
      PValueTable t = read_pvalue_csv_file(b_pvals);
      if (!b_part.empty()) {
        const PValueTable lab = read_partition_csv_file(b_part);
        std::map<std::string, std::string> block_of;
        for (std::size_t i = 0; i < lab.hypothesis_ids.size(); ++i) block_of[lab.hypothesis_ids[i]] = lab.block_ids[i];
        for (std::size_t i = 0; i < t.hypothesis_ids.size(); ++i) {
          auto it = block_of.find(t.hypothesis_ids[i]);
          if (it == block_of.end()) throw UsageError(b_part + ": no block for hypothesis '" + t.hypothesis_ids[i] + "'");
          t.block_ids[i] = it->second;
        }
      }
      std::vector<std::string> warnings;
      Indices rej;
      if (m == Method::minp_resampling) {
        const std::size_t K = t.p.size();
        NullSampler sampler = [K](std::mt19937_64& rng) {
          std::uniform_real_distribution<double> U(0.0, 1.0);
          std::vector<double> p(K);
          for (auto& x : p) x = U(rng);
          return p;
        };
        rej = minp_resampling(t.p, b_alpha, sampler, b_resamples, *b_seed);
      } else if (needs_partition(m)) {
        const BlockPartition part = t.partition();
        rej = run_baseline(m, t.p, b_alpha, &part, &warnings);
      } else {
        rej = run_baseline(m, t.p, b_alpha, nullptr, &warnings);
      }
      for (const auto& w : warnings) err << "warning: " << w << "\n";
      std::sort(rej.begin(), rej.end());
      json j = rejection_json_by_labels(rej, t);
      j["method"] = b_method;
      j["alpha"] = b_alpha;
      j["strong_fwer_valid"] = strong_fwer_valid(m);
      emit(j, b_out, out);
      return kExitOk;
    }

    if (*sim) {
      json j = read_json_file(m_config);
      if (j.is_object() && j.contains("configs")) j = j.at("configs");
      if (j.is_object()) j = json::array({j});
      if (!j.is_array()) throw UsageError(m_config + ": expected a config object or an array of configs");
      std::vector<SimConfig> cfgs;
      for (const auto& c : j) {
        SimConfig s = SimConfig::from_json(c);
        s.seed = m_seed;
        if (m_nrep) s.n_rep = *m_nrep;
        s.validate();
        for (const auto& name : s.methods) {
          if (name != "boost" && name != "boost_plugin") method_from_string(name);
        }
        cfgs.push_back(std::move(s));
      }
      const auto results = sweep(cfgs, m_threads);
      std::ostringstream os;
      write_csv(os, results, m_timing);
      if (m_out.empty()) {
        out << os.str();
      } else {
        write_text_file(m_out, os.str());
      }
      return kExitOk;
    }

    if (*curves) {
      const AltDensity g = c_fam.build();
      const auto grid_a = default_alpha_grid(c_alpha, c_blocks, c_points);
      const ValueCurve vc = build_value_curve(g, grid_a, c_grid.build(), c_solver.build(), c_id);
      json j = vc.to_json();
      j["density"] = g.to_json();
      j["concavity_adjustment"] = vc.concavity_adjustment();
      emit(j, c_out, out);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace bfwer::cli
