#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpguard/fingerprint.hpp"
#include "fpguard/relation.hpp"
#include "fpguard/synth.hpp"

namespace fpguard {

enum class ExperimentTable { attack_rounds, rnd_baseline, row_defense, integrated };

ExperimentTable experiment_table_from_name(const std::string& name);
const char* experiment_table_name(ExperimentTable table);

struct ExperimentSeeds {
  uint64_t data = 1;
  uint64_t communities = 2;
  uint64_t attack = 3;
  uint64_t defense = 4;
};

struct ExperimentConfig {
  SynthSpec synth;  // data source when the caller supplies no relation
  FingerprintKey key;
  std::vector<uint64_t> sp_serials;  // recipient pool; key.serial is the leaker
  uint32_t communities = 10;
  double tau_col_atk = 1e-4;
  double tau_row_atk = 0.1;
  double tau_col_dfs = 1e-4;
  double tau_col = 1e-4;  // utility metric thresholds
  double tau_row = 10.0;
  std::vector<double> lambdas = {500.0};
  uint32_t rounds = 8;
  std::vector<double> fractions = {0.02, 0.05, 0.10, 0.15};
  double gamma_ratio_dfs = 0.0;  // 0 means 1 / key.gamma_inv
  ExperimentSeeds seeds;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& json_text);
};

struct ExperimentRow {
  std::string label;
  double per_chg = 0.0;  // against the stage's own input relation
  bool extracted = false;
  uint32_t num_cmp = 0;  // code length when extraction fails
  bool uniquely_accusable = false;
  double t = 0.0;
  double acc = 0.0;
  double pcol = 0.0;
  double prow = 0.0;
  double pcov = 0.0;
};

struct ExperimentResult {
  std::string table;
  std::vector<ExperimentRow> rows;

  std::string to_json() const;
  std::string to_text() const;
};

// Runs one trend table against the given original relation. All randomness
// comes from cfg.seeds, so identical inputs give identical results.
ExperimentResult run_experiment(ExperimentTable table, const Relation& original,
                                const ExperimentConfig& cfg);

}  // namespace fpguard
