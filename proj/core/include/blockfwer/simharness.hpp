#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "blockfwer/dgp.hpp"

namespace bfwer {

struct MethodRecord {
  std::string method;
  double avg_power = 0.0;        // mean rejection rate over true alternatives
  double any_power = 0.0;        // Pr(at least one true rejection)
  double all_reject_prob = 0.0;  // Pr(every alternative rejected)
  double fwer = 0.0;             // Pr(at least one false rejection)
  double per_block_fwer = 0.0;   // false-rejection rate averaged over blocks
  double mc_se_power = 0.0;
  double mc_se_fwer = 0.0;
  double wall_clock_seconds = 0.0;  // summed over worker threads
  int ell = 0;                      // number of alternatives the FWER refers to
  bool has_alternatives = false;
};

struct SimResult {
  SimConfig config;
  std::vector<MethodRecord> records;

  const MethodRecord& at(const std::string& method) const;
};

double mc_se(double p, int n_rep);

// threads <= 0 uses the hardware concurrency.
SimResult run_experiment(const SimConfig& config, int threads = 1);
std::vector<SimResult> sweep(const std::vector<SimConfig>& configs, int threads = 1);

// family,theta,K,B,alpha,method,metric,value,mc_se,n_rep,seed,config
// wall_clock rows are appended only when timing is set.
void write_csv(std::ostream& os, const std::vector<SimResult>& results, bool timing = false);
std::string csv_header();

}  // namespace bfwer
