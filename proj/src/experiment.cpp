#include "fpguard/experiment.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "fpguard/attacks.hpp"
#include "fpguard/correlations.hpp"
#include "fpguard/defenses.hpp"
#include "fpguard/metrics.hpp"

namespace fpguard {

using nlohmann::json;

ExperimentTable experiment_table_from_name(const std::string& name) {
  if (name == "attack_rounds") return ExperimentTable::attack_rounds;
  if (name == "rnd_baseline") return ExperimentTable::rnd_baseline;
  if (name == "row_defense") return ExperimentTable::row_defense;
  if (name == "integrated") return ExperimentTable::integrated;
  fail(Errc::invalid_argument, "unknown experiment table " + name);
}

const char* experiment_table_name(ExperimentTable table) {
  switch (table) {
    case ExperimentTable::attack_rounds: return "attack_rounds";
    case ExperimentTable::rnd_baseline: return "rnd_baseline";
    case ExperimentTable::row_defense: return "row_defense";
    case ExperimentTable::integrated: return "integrated";
  }
  fail(Errc::invalid_argument, "unknown experiment table");
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["synth"] = json::parse(synth.to_json());
  j["key"] = json::parse(key.to_json());
  j["sp_serials"] = sp_serials;
  j["communities"] = communities;
  j["tau_col_atk"] = tau_col_atk;
  j["tau_row_atk"] = tau_row_atk;
  j["tau_col_dfs"] = tau_col_dfs;
  j["tau_col"] = tau_col;
  j["tau_row"] = tau_row;
  j["lambdas"] = lambdas;
  j["rounds"] = rounds;
  j["fractions"] = fractions;
  j["gamma_ratio_dfs"] = gamma_ratio_dfs;
  j["seeds"] = {{"data", seeds.data},
                {"communities", seeds.communities},
                {"attack", seeds.attack},
                {"defense", seeds.defense}};
  return j.dump();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("experiment config: ") + e.what());
  }
  ExperimentConfig cfg;
  if (j.contains("synth")) cfg.synth = SynthSpec::from_json(j["synth"].dump());
  if (j.contains("key")) cfg.key = FingerprintKey::from_json(j["key"].dump());
  cfg.sp_serials = j.value("sp_serials", cfg.sp_serials);
  cfg.communities = j.value("communities", cfg.communities);
  cfg.tau_col_atk = j.value("tau_col_atk", cfg.tau_col_atk);
  cfg.tau_row_atk = j.value("tau_row_atk", cfg.tau_row_atk);
  cfg.tau_col_dfs = j.value("tau_col_dfs", cfg.tau_col_dfs);
  cfg.tau_col = j.value("tau_col", cfg.tau_col);
  cfg.tau_row = j.value("tau_row", cfg.tau_row);
  if (j.contains("lambda"))
    cfg.lambdas = {j["lambda"].get<double>()};
  else
    cfg.lambdas = j.value("lambdas", cfg.lambdas);
  cfg.rounds = j.value("rounds", cfg.rounds);
  cfg.fractions = j.value("fractions", cfg.fractions);
  cfg.gamma_ratio_dfs = j.value("gamma_ratio_dfs", cfg.gamma_ratio_dfs);
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    cfg.seeds.data = s.value("data", cfg.seeds.data);
    cfg.seeds.communities = s.value("communities", cfg.seeds.communities);
    cfg.seeds.attack = s.value("attack", cfg.seeds.attack);
    cfg.seeds.defense = s.value("defense", cfg.seeds.defense);
  }
  return cfg;
}

std::string ExperimentResult::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json e{{"label", r.label},         {"per_chg", r.per_chg},
           {"extracted", r.extracted}, {"num_cmp", r.num_cmp},
           {"uniquely_accusable", r.uniquely_accusable},
           {"acc", r.acc},             {"p_col", r.pcol},
           {"p_row", r.prow},          {"p_cov", r.pcov}};
    if (!r.uniquely_accusable) e["t"] = r.t;
    rows_json.push_back(std::move(e));
  }
  return json{{"table", table}, {"rows", rows_json}}.dump();
}

std::string ExperimentResult::to_text() const {
  std::string out = table + "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %6s %7s %7s %7s %7s\n",
                "step", "per_chg", "num_cmp", "rank", "acc", "p_col", "p_row",
                "p_cov");
  out += line;
  for (const auto& r : rows) {
    char rank[16];
    if (r.uniquely_accusable)
      std::snprintf(rank, sizeof(rank), "u");
    else
      std::snprintf(rank, sizeof(rank), "t=%.2f", r.t);
    std::snprintf(line, sizeof(line),
                  "%-16s %8.4f %8u %6s %7.4f %7.4f %7.4f %7.4f\n",
                  r.label.c_str(), r.per_chg, r.num_cmp, rank, r.acc, r.pcol,
                  r.prow, r.pcov);
    out += line;
  }
  return out;
}

namespace {

struct Bench {
  const Relation& original;
  const ExperimentConfig& cfg;
  CommunityAssignment comm;
  FingerprintCode embedded;
  std::vector<FingerprintCode> innocents;

  Bench(const Relation& orig, const ExperimentConfig& config)
      : original(orig), cfg(config) {
    comm = kmeans_communities(original, cfg.communities,
                              cfg.seeds.communities);
    embedded = generate_code(cfg.key.secret, cfg.key.serial, cfg.key.code_bits);
    for (uint64_t s : cfg.sp_serials)
      if (s != cfg.key.serial)
        innocents.push_back(generate_code(cfg.key.secret, s, cfg.key.code_bits));
  }

  ExperimentRow evaluate(const std::string& label, const Relation& current,
                         const Relation& stage_input) const {
    ExperimentRow row;
    row.label = label;
    row.per_chg = 1.0 - accuracy(current, stage_input);
    ExtractionResult ex = extract(current, cfg.key);
    if (ex.code) {
      row.extracted = true;
      row.num_cmp = num_cmp(embedded, *ex.code);
      RobustnessReport rank = accusable_rank(*ex.code, embedded, innocents);
      row.uniquely_accusable = rank.uniquely_accusable;
      row.t = rank.t;
    } else {
      row.num_cmp = cfg.key.code_bits;
      row.t = 1.0;
    }
    row.acc = accuracy(current, original);
    row.pcol = p_col(current, original, cfg.tau_col);
    row.prow = p_row(current, original, comm, cfg.tau_row);
    row.pcov = p_cov(current, original);
    return row;
  }

  double gamma_ratio() const {
    return cfg.gamma_ratio_dfs > 0 ? cfg.gamma_ratio_dfs
                                   : 1.0 / double(cfg.key.gamma_inv);
  }
};

std::string fraction_label(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fraction %g", f);
  return buf;
}

}  // namespace

ExperimentResult run_experiment(ExperimentTable table, const Relation& original,
                                const ExperimentConfig& cfg) {
  cfg.key.validate();
  Bench bench(original, cfg);
  ExperimentResult result;
  result.table = experiment_table_name(table);

  switch (table) {
    case ExperimentTable::attack_rounds: {
      InsertResult ins = embed(original, cfg.key);
      JointDistributionSet j_prior = joint_distributions(original);
      result.rows.push_back(bench.evaluate("round 0", ins.relation, ins.relation));
      column_attack(ins.relation, j_prior, cfg.tau_col_atk, cfg.rounds,
                    cfg.seeds.attack,
                    [&](uint32_t round, const Relation& current) {
                      result.rows.push_back(bench.evaluate(
                          "round " + std::to_string(round), current,
                          ins.relation));
                    });
      break;
    }
    case ExperimentTable::rnd_baseline: {
      InsertResult ins = embed(original, cfg.key);
      for (size_t i = 0; i < cfg.fractions.size(); ++i) {
        AttackOutcome out = random_flip_attack(ins.relation, cfg.fractions[i],
                                               cfg.seeds.attack + i);
        result.rows.push_back(bench.evaluate(fraction_label(cfg.fractions[i]),
                                             out.relation, ins.relation));
      }
      break;
    }
    case ExperimentTable::row_defense: {
      InsertResult ins = embed(original, cfg.key);
      StatRelationSet s_prior = stat_relations(original, bench.comm);
      AttackOutcome raw = row_attack(ins.relation, s_prior, cfg.tau_row_atk);
      result.rows.push_back(bench.evaluate("attack", raw.relation, ins.relation));
      DefenseOutcome dfs =
          row_defense(ins.relation, s_prior, bench.gamma_ratio(), ins.marks);
      result.rows.push_back(bench.evaluate("defense", dfs.relation, ins.relation));
      AttackOutcome after = row_attack(dfs.relation, s_prior, cfg.tau_row_atk);
      result.rows.push_back(
          bench.evaluate("defense+attack", after.relation, dfs.relation));
      break;
    }
    case ExperimentTable::integrated: {
      InsertResult ins = embed(original, cfg.key);
      StatRelationSet s_prior = stat_relations(original, bench.comm);
      JointDistributionSet j_prior = joint_distributions(original);
      AttackOutcome raw =
          integrated_attack(ins.relation, s_prior, j_prior, cfg.tau_row_atk,
                            cfg.tau_col_atk, cfg.rounds, cfg.seeds.attack);
      result.rows.push_back(
          bench.evaluate("vanilla+attack", raw.relation, ins.relation));
      RobustResult robust = robust_fingerprint(
          original, cfg.key, s_prior, j_prior, bench.gamma_ratio(),
          cfg.tau_col_dfs, cfg.lambdas, cfg.seeds.defense);
      ExperimentRow defended =
          bench.evaluate("robust", robust.relation, robust.relation);
      defended.per_chg = robust.report.per_chg;
      result.rows.push_back(std::move(defended));
      AttackOutcome after =
          integrated_attack(robust.relation, s_prior, j_prior, cfg.tau_row_atk,
                            cfg.tau_col_atk, cfg.rounds, cfg.seeds.attack);
      result.rows.push_back(
          bench.evaluate("robust+attack", after.relation, robust.relation));
      break;
    }
  }
  return result;
}

}  // namespace fpguard
