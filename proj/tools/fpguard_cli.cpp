#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpguard.h"

using nlohmann::json;

namespace {

struct CommandError {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void bail(int exit_code, const std::string& code,
                       const std::string& message) {
  throw CommandError{exit_code, code, message};
}

void check(fpg_status st) {
  if (st == FPG_OK) return;
  bail(st == FPG_ERR_IO ? 1 : 2, fpg_last_error_code(), fpg_last_error());
}

struct StringDel {
  void operator()(char* s) const { fpg_string_free(s); }
};
using CStr = std::unique_ptr<char, StringDel>;

#define FPG_PTR(type, name)                               \
  struct name##Del {                                      \
    void operator()(type* p) const { type##_free(p); }    \
  };                                                      \
  using name = std::unique_ptr<type, name##Del>

FPG_PTR(fpg_relation, RelPtr);
FPG_PTR(fpg_rawtable, RawPtr);
FPG_PTR(fpg_encoding, EncPtr);
FPG_PTR(fpg_marks, MarksPtr);
FPG_PTR(fpg_joints, JointsPtr);
FPG_PTR(fpg_comm, CommPtr);
FPG_PTR(fpg_stats, StatsPtr);

#undef FPG_PTR

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bail(1, "io_error", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bail(1, "io_error", "cannot open " + path + " for writing");
  out << content;
  if (!out) bail(1, "io_error", "short write to " + path);
}

// Config file values fill in flags the user did not pass on the command line.
struct Settings {
  CLI::App* cmd = nullptr;
  json cfg = json::object();

  bool given(const std::string& flag) const {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt && opt->count() > 0;
  }

  template <typename T>
  void fill(const std::string& flag, const std::string& key, T& value) const {
    if (!given(flag) && cfg.contains(key)) value = cfg[key].get<T>();
  }
};

uint64_t env_seed() {
  const char* s = std::getenv("FPGUARD_SEED");
  if (!s || !*s) return 0;
  return std::strtoull(s, nullptr, 10);
}

void fill_seed(const Settings& s, const std::string& flag,
               const std::string& key, uint64_t& value) {
  if (s.given(flag)) return;
  if (s.cfg.contains(key)) {
    value = s.cfg[key].get<uint64_t>();
    return;
  }
  value = env_seed();
}

std::vector<uint32_t> parse_cards(const std::string& text) {
  std::vector<uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(uint32_t(std::strtoul(item.c_str(), nullptr, 10)));
  if (out.empty()) bail(2, "invalid_argument", "empty cardinality list");
  return out;
}

RelPtr load_relation(const std::string& csv, const std::string& schema) {
  fpg_relation* rel = nullptr;
  check(fpg_relation_read_csv(csv.c_str(), schema.c_str(), &rel));
  return RelPtr(rel);
}

json key_from_options(const Settings& s, const std::string& key_path,
                      const std::string& secret, uint64_t serial,
                      uint32_t gamma_inv, uint32_t bits, uint32_t level) {
  if (!key_path.empty()) return json::parse(read_file(key_path));
  if (s.cfg.contains("key") && !s.given("--secret"))
    return s.cfg["key"];
  if (secret.empty())
    bail(2, "invalid_argument", "need --key or --secret");
  return json{{"secret", secret}, {"serial", serial}, {"gamma_inv", gamma_inv},
              {"code_bits", bits}, {"bit_level", level}};
}

// Priors for attacks and defenses: either explicit JSON files or computed
// from a reference CSV sharing the target's schema.
struct PriorOptions {
  std::string joints_path;
  std::string stats_path;
  std::string comm_path;
  std::string prior_csv;
  std::string schema_path;  // reused for prior_csv
  uint32_t communities = 10;
  uint64_t comm_seed = 0;
};

JointsPtr load_joints(const PriorOptions& p) {
  fpg_joints* j = nullptr;
  if (!p.joints_path.empty()) {
    check(fpg_joints_from_json(read_file(p.joints_path).c_str(), &j));
  } else if (!p.prior_csv.empty()) {
    RelPtr prior = load_relation(p.prior_csv, p.schema_path);
    check(fpg_joints_compute(prior.get(), &j));
  } else {
    bail(2, "invalid_argument", "need --joints or --prior-csv");
  }
  return JointsPtr(j);
}

StatsPtr load_stats(const PriorOptions& p, CommPtr* comm_out) {
  fpg_stats* s = nullptr;
  if (!p.stats_path.empty()) {
    check(fpg_stats_from_json(read_file(p.stats_path).c_str(), &s));
    return StatsPtr(s);
  }
  if (p.prior_csv.empty()) bail(2, "invalid_argument", "need --stats or --prior-csv");
  RelPtr prior = load_relation(p.prior_csv, p.schema_path);
  fpg_comm* c = nullptr;
  if (!p.comm_path.empty())
    check(fpg_comm_from_json(read_file(p.comm_path).c_str(), &c));
  else
    check(fpg_kmeans(prior.get(), p.communities, p.comm_seed, &c));
  CommPtr comm(c);
  check(fpg_stats_compute(prior.get(), comm.get(), &s));
  if (comm_out) *comm_out = std::move(comm);
  return StatsPtr(s);
}

void emit_report(const std::string& report, const std::string& out_path,
                 bool to_stdout) {
  if (!out_path.empty()) write_file(out_path, report + "\n");
  if (to_stdout) std::cout << report << "\n";
}

void add_prior_options(CLI::App* cmd, PriorOptions& p, bool joints,
                       bool stats) {
  if (joints)
    cmd->add_option("--joints", p.joints_path, "prior joint distributions JSON");
  if (stats) {
    cmd->add_option("--stats", p.stats_path, "prior similarity set JSON");
    cmd->add_option("--comm", p.comm_path, "community assignment JSON");
    cmd->add_option("--communities", p.communities, "k-means community count");
    cmd->add_option("--comm-seed", p.comm_seed, "k-means seed");
  }
  cmd->add_option("--prior-csv", p.prior_csv,
                  "reference CSV to compute priors from");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"database fingerprinting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config; flags override")
      ->expected(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a correlated relation");
  uint32_t sy_rows = 0;
  std::string sy_cards = "8,8,8,8,8,8,8,8,8,8";
  uint32_t sy_clusters = 4;
  double sy_adherence = 0.6;
  uint64_t sy_seed = 0;
  std::string sy_out = "synth.csv", sy_schema_out = "synth.schema.json";
  synth->add_option("--rows", sy_rows, "row count")->required(false);
  synth->add_option("--cards", sy_cards, "attribute cardinalities, comma separated");
  synth->add_option("--clusters", sy_clusters, "latent cluster count");
  synth->add_option("--adherence", sy_adherence, "cluster adherence in [0,1]");
  synth->add_option("--seed", sy_seed, "generator seed");
  synth->add_option("--out", sy_out, "output CSV path");
  synth->add_option("--schema-out", sy_schema_out, "output schema JSON path");

  // encode
  auto* encode = app.add_subcommand("encode", "encode a raw CSV to integer codes");
  std::string en_csv, en_schema_cfg, en_out = "encoded.csv";
  std::string en_schema_out = "encoded.schema.json", en_enc_out;
  encode->add_option("--csv", en_csv, "raw CSV path");
  encode->add_option("--schema-config", en_schema_cfg,
                     "ingestion schema JSON (pk, attribute kinds, buckets)");
  encode->add_option("--out", en_out, "encoded CSV path");
  encode->add_option("--schema-out", en_schema_out, "encoded schema JSON path");
  encode->add_option("--encoding-out", en_enc_out, "fitted encoding JSON path");

  // fingerprint
  auto* fp = app.add_subcommand("fingerprint", "embed a recipient's code");
  std::string fp_csv, fp_schema, fp_key, fp_secret;
  uint64_t fp_serial = 0;
  uint32_t fp_gamma = 35, fp_bits = 128, fp_level = 1;
  std::string fp_out = "marked.csv", fp_marks_out = "marks.json";
  fp->add_option("--csv", fp_csv, "encoded CSV path");
  fp->add_option("--schema", fp_schema, "schema JSON path");
  fp->add_option("--key", fp_key, "key JSON path");
  fp->add_option("--secret", fp_secret, "shared secret (UTF-8)");
  fp->add_option("--serial", fp_serial, "recipient serial");
  fp->add_option("--gamma-inv", fp_gamma, "rows per mark");
  fp->add_option("--bits", fp_bits, "code length");
  fp->add_option("--level", fp_level, "bit level (1 = LSB)");
  fp->add_option("--out", fp_out, "marked CSV path");
  fp->add_option("--marks-out", fp_marks_out, "marked positions JSON path");

  // extract
  auto* ex = app.add_subcommand("extract", "extract and rank recipients");
  std::string ex_csv, ex_schema, ex_key, ex_secret, ex_out;
  uint64_t ex_serial = 0;
  uint32_t ex_gamma = 35, ex_bits = 128, ex_level = 1;
  std::vector<uint64_t> ex_serials;
  ex->add_option("--csv", ex_csv, "leaked CSV path");
  ex->add_option("--schema", ex_schema, "schema JSON path");
  ex->add_option("--key", ex_key, "key JSON path");
  ex->add_option("--secret", ex_secret, "shared secret (UTF-8)");
  ex->add_option("--serial", ex_serial, "recipient serial");
  ex->add_option("--gamma-inv", ex_gamma, "rows per mark");
  ex->add_option("--bits", ex_bits, "code length");
  ex->add_option("--level", ex_level, "bit level (1 = LSB)");
  ex->add_option("--serials", ex_serials, "candidate serials to rank")
      ->delimiter(',');
  ex->add_option("--out", ex_out, "report JSON path");

  // attack
  auto* attack = app.add_subcommand("attack", "modify a pirated copy");
  attack->require_subcommand(1);
  std::string at_csv, at_schema, at_out = "pirated.csv", at_report;
  PriorOptions at_prior;
  double at_fraction = 0.1, at_tau_col = 1e-4, at_tau_row = 0.1;
  uint32_t at_rounds = 8;
  uint64_t at_seed = 0;
  auto add_attack_io = [&](CLI::App* cmd) {
    cmd->add_option("--csv", at_csv, "input CSV path");
    cmd->add_option("--schema", at_schema, "schema JSON path");
    cmd->add_option("--out", at_out, "output CSV path");
    cmd->add_option("--report-out", at_report, "attack report JSON path");
  };
  auto* at_rnd = attack->add_subcommand("rnd", "random LSB flips");
  add_attack_io(at_rnd);
  at_rnd->add_option("--fraction", at_fraction, "fraction of cells to flip");
  at_rnd->add_option("--seed", at_seed, "attack seed");
  auto* at_col = attack->add_subcommand("col", "column-correlation attack");
  add_attack_io(at_col);
  add_prior_options(at_col, at_prior, true, false);
  at_col->add_option("--tau", at_tau_col, "joint drift threshold");
  at_col->add_option("--rounds", at_rounds, "maximum rounds");
  at_col->add_option("--seed", at_seed, "tie-break seed");
  auto* at_row = attack->add_subcommand("row", "row-correlation attack");
  add_attack_io(at_row);
  add_prior_options(at_row, at_prior, false, true);
  at_row->add_option("--tau", at_tau_row, "discrepancy threshold");
  auto* at_int = attack->add_subcommand("integrated", "row then column attack");
  add_attack_io(at_int);
  add_prior_options(at_int, at_prior, true, true);
  at_int->add_option("--tau-col", at_tau_col, "joint drift threshold");
  at_int->add_option("--tau-row", at_tau_row, "discrepancy threshold");
  at_int->add_option("--rounds", at_rounds, "maximum column rounds");
  at_int->add_option("--seed", at_seed, "tie-break seed");

  // defend
  auto* defend = app.add_subcommand("defend", "post-process against attacks");
  defend->require_subcommand(1);
  std::string df_csv, df_schema, df_out = "defended.csv", df_report;
  std::string df_marks, df_key, df_marks_out = "marks.json";
  PriorOptions df_prior;
  double df_tau = 1e-4, df_gamma_ratio = 0.0;
  std::vector<double> df_lambdas = {500.0};
  uint64_t df_seed = 0;
  auto add_defend_io = [&](CLI::App* cmd) {
    cmd->add_option("--csv", df_csv, "input CSV path");
    cmd->add_option("--schema", df_schema, "schema JSON path");
    cmd->add_option("--out", df_out, "output CSV path");
    cmd->add_option("--report-out", df_report, "defense report JSON path");
  };
  auto* df_col = defend->add_subcommand("col", "marginal restoration");
  add_defend_io(df_col);
  add_prior_options(df_col, df_prior, true, false);
  df_col->add_option("--marks", df_marks, "marked positions JSON path");
  df_col->add_option("--tau", df_tau, "joint drift threshold");
  df_col->add_option("--lambda", df_lambdas,
                     "regularization, global or per attribute")
      ->delimiter(',');
  df_col->add_option("--seed", df_seed, "edit sampling seed");
  auto* df_row = defend->add_subcommand("row", "similarity smoothing");
  add_defend_io(df_row);
  add_prior_options(df_row, df_prior, false, true);
  df_row->add_option("--marks", df_marks, "marked positions JSON path");
  df_row->add_option("--gamma-ratio", df_gamma_ratio,
                     "fraction of records to rewrite per community");
  auto* df_robust = defend->add_subcommand("robust", "embed plus both defenses");
  add_defend_io(df_robust);
  add_prior_options(df_robust, df_prior, true, true);
  df_robust->add_option("--key", df_key, "key JSON path");
  df_robust->add_option("--tau", df_tau, "joint drift threshold");
  df_robust->add_option("--lambda", df_lambdas,
                        "regularization, global or per attribute")
      ->delimiter(',');
  df_robust->add_option("--gamma-ratio", df_gamma_ratio,
                        "row-defense budget (default 1/gamma_inv)");
  df_robust->add_option("--seed", df_seed, "edit sampling seed");
  df_robust->add_option("--marks-out", df_marks_out, "marked positions JSON path");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "utility of a modified copy");
  std::string mt_csv, mt_original, mt_schema, mt_comm, mt_queries, mt_out;
  double mt_tau_col = 1e-4, mt_tau_row = 10.0;
  uint32_t mt_communities = 0;
  uint64_t mt_comm_seed = 0;
  metrics->add_option("--csv", mt_csv, "modified CSV path");
  metrics->add_option("--original", mt_original, "reference CSV path");
  metrics->add_option("--schema", mt_schema, "schema JSON path");
  metrics->add_option("--comm", mt_comm, "community assignment JSON path");
  metrics->add_option("--communities", mt_communities,
                      "compute k-means communities on the reference");
  metrics->add_option("--comm-seed", mt_comm_seed, "k-means seed");
  metrics->add_option("--tau-col", mt_tau_col, "joint preservation threshold");
  metrics->add_option("--tau-row", mt_tau_row, "similarity preservation threshold");
  metrics->add_option("--queries", mt_queries, "statistical query list JSON path");
  metrics->add_option("--out", mt_out, "report JSON path");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a trend table");
  std::string xp_table = "attack_rounds", xp_csv, xp_schema, xp_out, xp_text_out;
  exp->add_option("--table", xp_table,
                  "attack_rounds | rnd_baseline | row_defense | integrated");
  exp->add_option("--csv", xp_csv, "data CSV path (default: synth from config)");
  exp->add_option("--schema", xp_schema, "schema JSON path");
  exp->add_option("--out", xp_out, "result JSON path");
  exp->add_option("--text-out", xp_text_out, "result text table path");

  // info
  auto* info = app.add_subcommand("info", "library version and bounds");
  uint32_t in_sps = 100, in_bits = 128;
  info->add_option("--sps", in_sps, "recipient count");
  info->add_option("--bits", in_bits, "code length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}}
              << "\n";
    return 2;
  }

  try {
    Settings s;
    s.cmd = &app;
    if (!config_path.empty()) s.cfg = json::parse(read_file(config_path));

    if (synth->parsed()) {
      s.cmd = synth;
      s.fill("--rows", "rows", sy_rows);
      s.fill("--cards", "cards", sy_cards);
      s.fill("--clusters", "clusters", sy_clusters);
      s.fill("--adherence", "adherence", sy_adherence);
      fill_seed(s, "--seed", "seed", sy_seed);
      json attrs = json::array();
      auto cards = parse_cards(sy_cards);
      for (size_t p = 0; p < cards.size(); ++p)
        attrs.push_back({{"name", "a" + std::to_string(p)},
                         {"cardinality", cards[p]}});
      json spec{{"n_rows", sy_rows}, {"attributes", attrs},
                {"clusters", sy_clusters}, {"adherence", sy_adherence}};
      fpg_relation* rel = nullptr;
      check(fpg_synth(spec.dump().c_str(), sy_seed, &rel));
      RelPtr holder(rel);
      check(fpg_relation_write_csv(rel, sy_out.c_str()));
      char* schema = nullptr;
      check(fpg_relation_schema_json(rel, &schema));
      CStr schema_holder(schema);
      write_file(sy_schema_out, std::string(schema) + "\n");
      std::cout << json{{"rows", fpg_relation_num_rows(rel)},
                        {"csv", sy_out},
                        {"schema", sy_schema_out}}
                << "\n";
    } else if (encode->parsed()) {
      s.cmd = encode;
      s.fill("--csv", "csv", en_csv);
      s.fill("--schema-config", "schema_config", en_schema_cfg);
      if (en_csv.empty() || en_schema_cfg.empty())
        bail(2, "invalid_argument", "need --csv and --schema-config");
      fpg_rawtable* raw = nullptr;
      check(fpg_rawtable_parse_csv(en_csv.c_str(),
                                   read_file(en_schema_cfg).c_str(), &raw));
      RawPtr raw_holder(raw);
      fpg_encoding* enc = nullptr;
      check(fpg_encoding_fit(raw, &enc));
      EncPtr enc_holder(enc);
      fpg_relation* rel = nullptr;
      check(fpg_encoding_apply(raw, enc, &rel));
      RelPtr rel_holder(rel);
      check(fpg_relation_write_csv(rel, en_out.c_str()));
      char* schema = nullptr;
      check(fpg_relation_schema_json(rel, &schema));
      CStr schema_holder(schema);
      write_file(en_schema_out, std::string(schema) + "\n");
      if (!en_enc_out.empty()) {
        char* enc_json = nullptr;
        check(fpg_encoding_to_json(enc, &enc_json));
        CStr enc_json_holder(enc_json);
        write_file(en_enc_out, std::string(enc_json) + "\n");
      }
      std::cout << json{{"rows", fpg_relation_num_rows(rel)},
                        {"csv", en_out},
                        {"schema", en_schema_out}}
                << "\n";
    } else if (fp->parsed()) {
      s.cmd = fp;
      s.fill("--csv", "csv", fp_csv);
      s.fill("--schema", "schema", fp_schema);
      s.fill("--key", "key_path", fp_key);
      if (fp_csv.empty() || fp_schema.empty())
        bail(2, "invalid_argument", "need --csv and --schema");
      json key = key_from_options(s, fp_key, fp_secret, fp_serial, fp_gamma,
                                  fp_bits, fp_level);
      RelPtr rel = load_relation(fp_csv, fp_schema);
      fpg_relation* marked = nullptr;
      fpg_marks* marks = nullptr;
      check(fpg_embed(rel.get(), key.dump().c_str(), &marked, &marks));
      RelPtr marked_holder(marked);
      MarksPtr marks_holder(marks);
      check(fpg_relation_write_csv(marked, fp_out.c_str()));
      char* marks_json = nullptr;
      check(fpg_marks_to_json(marks, &marks_json));
      CStr marks_json_holder(marks_json);
      write_file(fp_marks_out, std::string(marks_json) + "\n");
      std::cout << json{{"csv", fp_out}, {"marks", fp_marks_out}} << "\n";
    } else if (ex->parsed()) {
      s.cmd = ex;
      s.fill("--csv", "csv", ex_csv);
      s.fill("--schema", "schema", ex_schema);
      s.fill("--key", "key_path", ex_key);
      if (!s.given("--serials") && s.cfg.contains("sp_serials"))
        ex_serials = s.cfg["sp_serials"].get<std::vector<uint64_t>>();
      if (ex_csv.empty() || ex_schema.empty())
        bail(2, "invalid_argument", "need --csv and --schema");
      json key = key_from_options(s, ex_key, ex_secret, ex_serial, ex_gamma,
                                  ex_bits, ex_level);
      RelPtr rel = load_relation(ex_csv, ex_schema);
      char* report = nullptr;
      check(fpg_detect(rel.get(), key.dump().c_str(),
                       ex_serials.empty() ? nullptr : ex_serials.data(),
                       ex_serials.size(), &report));
      CStr report_holder(report);
      emit_report(report, ex_out, true);
    } else if (attack->parsed()) {
      CLI::App* sub = attack->get_subcommands().front();
      s.cmd = sub;
      s.fill("--csv", "csv", at_csv);
      s.fill("--schema", "schema", at_schema);
      if (at_csv.empty() || at_schema.empty())
        bail(2, "invalid_argument", "need --csv and --schema");
      at_prior.schema_path = at_schema;
      fill_seed(s, "--seed", "attack_seed", at_seed);
      RelPtr rel = load_relation(at_csv, at_schema);
      fpg_relation* pirated = nullptr;
      char* report = nullptr;
      if (sub == at_rnd) {
        s.fill("--fraction", "fraction", at_fraction);
        check(fpg_attack_rnd(rel.get(), at_fraction, at_seed, &pirated, &report));
      } else if (sub == at_col) {
        s.fill("--tau", "tau_col_atk", at_tau_col);
        s.fill("--rounds", "rounds", at_rounds);
        JointsPtr joints = load_joints(at_prior);
        check(fpg_attack_col(rel.get(), joints.get(), at_tau_col, at_rounds,
                             at_seed, &pirated, &report));
      } else if (sub == at_row) {
        s.fill("--tau", "tau_row_atk", at_tau_row);
        StatsPtr stats = load_stats(at_prior, nullptr);
        check(fpg_attack_row(rel.get(), stats.get(), at_tau_row, &pirated,
                             &report));
      } else {
        s.fill("--tau-col", "tau_col_atk", at_tau_col);
        s.fill("--tau-row", "tau_row_atk", at_tau_row);
        s.fill("--rounds", "rounds", at_rounds);
        JointsPtr joints = load_joints(at_prior);
        StatsPtr stats = load_stats(at_prior, nullptr);
        check(fpg_attack_integrated(rel.get(), stats.get(), joints.get(),
                                    at_tau_row, at_tau_col, at_rounds, at_seed,
                                    &pirated, &report));
      }
      RelPtr pirated_holder(pirated);
      CStr report_holder(report);
      check(fpg_relation_write_csv(pirated, at_out.c_str()));
      emit_report(report, at_report, false);
      std::cout << json{{"csv", at_out}} << "\n";
    } else if (defend->parsed()) {
      CLI::App* sub = defend->get_subcommands().front();
      s.cmd = sub;
      s.fill("--csv", "csv", df_csv);
      s.fill("--schema", "schema", df_schema);
      if (df_csv.empty() || df_schema.empty())
        bail(2, "invalid_argument", "need --csv and --schema");
      df_prior.schema_path = df_schema;
      fill_seed(s, "--seed", "defense_seed", df_seed);
      RelPtr rel = load_relation(df_csv, df_schema);
      fpg_relation* defended = nullptr;
      char* report = nullptr;
      if (sub == df_robust) {
        s.fill("--key", "key_path", df_key);
        if (df_key.empty() && !s.cfg.contains("key"))
          bail(2, "invalid_argument", "need --key");
        json key = df_key.empty() ? s.cfg["key"]
                                  : json::parse(read_file(df_key));
        s.fill("--tau", "tau_col_dfs", df_tau);
        s.fill("--lambda", "lambdas", df_lambdas);
        s.fill("--gamma-ratio", "gamma_ratio_dfs", df_gamma_ratio);
        if (df_gamma_ratio <= 0)
          df_gamma_ratio = 1.0 / key.at("gamma_inv").get<double>();
        if (df_prior.prior_csv.empty()) df_prior.prior_csv = df_csv;
        JointsPtr joints = load_joints(df_prior);
        StatsPtr stats = load_stats(df_prior, nullptr);
        fpg_marks* marks = nullptr;
        check(fpg_robust_fingerprint(rel.get(), key.dump().c_str(), stats.get(),
                                     joints.get(), df_gamma_ratio, df_tau,
                                     df_lambdas.data(), df_lambdas.size(),
                                     df_seed, &defended, &marks, &report));
        MarksPtr marks_holder(marks);
        char* marks_json = nullptr;
        check(fpg_marks_to_json(marks, &marks_json));
        CStr marks_json_holder(marks_json);
        write_file(df_marks_out, std::string(marks_json) + "\n");
      } else {
        s.fill("--marks", "marks_path", df_marks);
        if (df_marks.empty()) bail(2, "invalid_argument", "need --marks");
        fpg_marks* marks = nullptr;
        check(fpg_marks_from_json(read_file(df_marks).c_str(), &marks));
        MarksPtr marks_holder(marks);
        if (sub == df_col) {
          s.fill("--tau", "tau_col_dfs", df_tau);
          s.fill("--lambda", "lambdas", df_lambdas);
          JointsPtr joints = load_joints(df_prior);
          check(fpg_defend_col(rel.get(), joints.get(), marks, df_tau,
                               df_lambdas.data(), df_lambdas.size(), df_seed,
                               &defended, &report));
        } else {
          s.fill("--gamma-ratio", "gamma_ratio_dfs", df_gamma_ratio);
          if (df_gamma_ratio <= 0)
            bail(2, "invalid_argument", "need --gamma-ratio > 0");
          StatsPtr stats = load_stats(df_prior, nullptr);
          check(fpg_defend_row(rel.get(), stats.get(), df_gamma_ratio, marks,
                               &defended, &report));
        }
      }
      RelPtr defended_holder(defended);
      CStr report_holder(report);
      check(fpg_relation_write_csv(defended, df_out.c_str()));
      emit_report(report, df_report, false);
      std::cout << json{{"csv", df_out}} << "\n";
    } else if (metrics->parsed()) {
      s.cmd = metrics;
      s.fill("--csv", "csv", mt_csv);
      s.fill("--original", "original", mt_original);
      s.fill("--schema", "schema", mt_schema);
      s.fill("--tau-col", "tau_col", mt_tau_col);
      s.fill("--tau-row", "tau_row", mt_tau_row);
      s.fill("--communities", "communities", mt_communities);
      fill_seed(s, "--comm-seed", "comm_seed", mt_comm_seed);
      if (mt_csv.empty() || mt_original.empty() || mt_schema.empty())
        bail(2, "invalid_argument", "need --csv, --original and --schema");
      RelPtr current = load_relation(mt_csv, mt_schema);
      RelPtr original = load_relation(mt_original, mt_schema);
      CommPtr comm;
      if (!mt_comm.empty()) {
        fpg_comm* c = nullptr;
        check(fpg_comm_from_json(read_file(mt_comm).c_str(), &c));
        comm.reset(c);
      } else if (mt_communities > 0) {
        fpg_comm* c = nullptr;
        check(fpg_kmeans(original.get(), mt_communities, mt_comm_seed, &c));
        comm.reset(c);
      }
      json cfg{{"tau_col", mt_tau_col}, {"tau_row", mt_tau_row}};
      if (!mt_queries.empty())
        cfg["queries"] = json::parse(read_file(mt_queries));
      char* report = nullptr;
      check(fpg_metrics(current.get(), original.get(), comm.get(),
                        cfg.dump().c_str(), &report));
      CStr report_holder(report);
      emit_report(report, mt_out, true);
    } else if (exp->parsed()) {
      s.cmd = exp;
      s.fill("--table", "table", xp_table);
      s.fill("--csv", "csv", xp_csv);
      s.fill("--schema", "schema", xp_schema);
      RelPtr rel;
      if (!xp_csv.empty()) {
        if (xp_schema.empty()) bail(2, "invalid_argument", "need --schema");
        rel = load_relation(xp_csv, xp_schema);
      } else {
        if (!s.cfg.contains("synth"))
          bail(2, "invalid_argument", "need --csv or a synth config entry");
        uint64_t data_seed =
            s.cfg.contains("seeds") ? s.cfg["seeds"].value("data", uint64_t(1))
                                    : uint64_t(1);
        fpg_relation* r = nullptr;
        check(fpg_synth(s.cfg["synth"].dump().c_str(), data_seed, &r));
        rel.reset(r);
      }
      char* out_json = nullptr;
      char* out_text = nullptr;
      check(fpg_experiment_run(xp_table.c_str(), rel.get(),
                               s.cfg.dump().c_str(), &out_json, &out_text));
      CStr json_holder(out_json);
      CStr text_holder(out_text);
      if (!xp_out.empty()) write_file(xp_out, std::string(out_json) + "\n");
      if (!xp_text_out.empty()) write_file(xp_text_out, out_text);
      std::cout << out_text;
    } else if (info->parsed()) {
      double misattribution = 0, misdiagnosis = 0;
      check(fpg_misattribution_bound(in_sps, in_bits, &misattribution));
      check(fpg_misdiagnosis_bound(in_sps, in_bits, &misdiagnosis));
      std::cout << json{{"version", fpg_version()},
                        {"recipients", in_sps},
                        {"code_bits", in_bits},
                        {"misattribution_bound", misattribution},
                        {"misdiagnosis_bound", misdiagnosis}}
                << "\n";
    }
  } catch (const CommandError& e) {
    std::cerr << json{{"error", e.code}, {"message", e.message}} << "\n";
    return e.exit_code;
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}}
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}} << "\n";
    return 2;
  }
  return 0;
}
