#include "fpguard.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpguard/attacks.hpp"
#include "fpguard/correlations.hpp"
#include "fpguard/defenses.hpp"
#include "fpguard/experiment.hpp"
#include "fpguard/fingerprint.hpp"
#include "fpguard/metrics.hpp"
#include "fpguard/relation.hpp"
#include "fpguard/synth.hpp"
#include "fpguard/theory.hpp"

using nlohmann::json;

struct fpg_relation {
  fpguard::Relation v;
};
struct fpg_rawtable {
  fpguard::RawTable v;
};
struct fpg_encoding {
  fpguard::EncodingMap v;
};
struct fpg_marks {
  std::vector<fpguard::MarkedPosition> v;
  uint64_t skipped = 0;
};
struct fpg_joints {
  fpguard::JointDistributionSet v;
};
struct fpg_comm {
  fpguard::CommunityAssignment v;
};
struct fpg_stats {
  fpguard::StatRelationSet v;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_code;

fpg_status map_error(fpguard::Errc code) {
  switch (code) {
    case fpguard::Errc::io_error:
      return FPG_ERR_IO;
    case fpguard::Errc::invalid_argument:
    case fpguard::Errc::shape_error:
    case fpguard::Errc::empty_candidates:
      return FPG_ERR_INVALID;
    default:
      return FPG_ERR_DOMAIN;
  }
}

template <typename Fn>
fpg_status guarded(Fn&& fn) {
  try {
    fn();
    return FPG_OK;
  } catch (const fpguard::Error& e) {
    g_error = e.what();
    g_error_code = fpguard::errc_name(e.code());
    return map_error(e.code());
  } catch (const json::exception& e) {
    g_error = e.what();
    g_error_code = "invalid_argument";
    return FPG_ERR_INVALID;
  } catch (const std::exception& e) {
    g_error = e.what();
    g_error_code = "internal";
    return FPG_ERR_INTERNAL;
  }
}

fpg_status invalid(const char* what) {
  g_error = what;
  g_error_code = "invalid_argument";
  return FPG_ERR_INVALID;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void emit(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

std::vector<double> lambda_vec(const double* lambdas, size_t n) {
  if (!lambdas || n == 0)
    fpguard::fail(fpguard::Errc::invalid_argument, "no lambda values supplied");
  return std::vector<double>(lambdas, lambdas + n);
}

}  // namespace

extern "C" {

const char* fpg_version(void) { return "0.1.0"; }

const char* fpg_last_error(void) { return g_error.c_str(); }
const char* fpg_last_error_code(void) { return g_error_code.c_str(); }

void fpg_string_free(char* s) { std::free(s); }
void fpg_relation_free(fpg_relation* r) { delete r; }
void fpg_rawtable_free(fpg_rawtable* t) { delete t; }
void fpg_encoding_free(fpg_encoding* e) { delete e; }
void fpg_marks_free(fpg_marks* m) { delete m; }
void fpg_joints_free(fpg_joints* j) { delete j; }
void fpg_comm_free(fpg_comm* c) { delete c; }
void fpg_stats_free(fpg_stats* s) { delete s; }

fpg_status fpg_synth(const char* spec_json, uint64_t seed, fpg_relation** out) {
  if (!spec_json || !out) return invalid("null argument");
  return guarded([&] {
    auto spec = fpguard::SynthSpec::from_json(spec_json);
    *out = new fpg_relation{fpguard::synth_relation(spec, seed)};
  });
}

fpg_status fpg_rawtable_parse_csv(const char* csv_path,
                                  const char* schema_config_json,
                                  fpg_rawtable** out) {
  if (!csv_path || !schema_config_json || !out) return invalid("null argument");
  return guarded([&] {
    auto schema = fpguard::SchemaConfig::from_json(schema_config_json);
    *out = new fpg_rawtable{fpguard::parse_csv_file(csv_path, schema)};
  });
}

fpg_status fpg_encoding_fit(const fpg_rawtable* table, fpg_encoding** out) {
  if (!table || !out) return invalid("null argument");
  return guarded([&] { *out = new fpg_encoding{fpguard::fit_encoding(table->v)}; });
}

fpg_status fpg_encoding_apply(const fpg_rawtable* table,
                              const fpg_encoding* enc, fpg_relation** out) {
  if (!table || !enc || !out) return invalid("null argument");
  return guarded(
      [&] { *out = new fpg_relation{fpguard::apply_encoding(table->v, enc->v)}; });
}

fpg_status fpg_encoding_to_json(const fpg_encoding* enc, char** out_json) {
  if (!enc || !out_json) return invalid("null argument");
  return guarded([&] { emit(out_json, enc->v.to_json()); });
}

fpg_status fpg_encoding_from_json(const char* json_text, fpg_encoding** out) {
  if (!json_text || !out) return invalid("null argument");
  return guarded(
      [&] { *out = new fpg_encoding{fpguard::EncodingMap::from_json(json_text)}; });
}

fpg_status fpg_relation_read_csv(const char* csv_path,
                                 const char* schema_json_path,
                                 fpg_relation** out) {
  if (!csv_path || !schema_json_path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new fpg_relation{
        fpguard::read_encoded_csv_file(csv_path, schema_json_path)};
  });
}

fpg_status fpg_relation_write_csv(const fpg_relation* rel,
                                  const char* csv_path) {
  if (!rel || !csv_path) return invalid("null argument");
  return guarded([&] { fpguard::write_csv_file(rel->v, csv_path); });
}

fpg_status fpg_relation_schema_json(const fpg_relation* rel, char** out_json) {
  if (!rel || !out_json) return invalid("null argument");
  return guarded([&] { emit(out_json, rel->v.schema_to_json()); });
}

size_t fpg_relation_num_rows(const fpg_relation* rel) {
  return rel ? rel->v.num_rows() : 0;
}

size_t fpg_relation_num_attrs(const fpg_relation* rel) {
  return rel ? rel->v.num_attrs() : 0;
}

fpg_status fpg_embed(const fpg_relation* rel, const char* key_json,
                     fpg_relation** out_rel, fpg_marks** out_marks) {
  if (!rel || !key_json || !out_rel) return invalid("null argument");
  return guarded([&] {
    auto key = fpguard::FingerprintKey::from_json(key_json);
    fpguard::InsertResult ins = fpguard::embed(rel->v, key);
    *out_rel = new fpg_relation{std::move(ins.relation)};
    if (out_marks)
      *out_marks = new fpg_marks{std::move(ins.marks), ins.skipped};
  });
}

fpg_status fpg_extract(const fpg_relation* rel, const char* key_json,
                       char** out_json) {
  if (!rel || !key_json || !out_json) return invalid("null argument");
  return guarded([&] {
    auto key = fpguard::FingerprintKey::from_json(key_json);
    emit(out_json, fpguard::extract(rel->v, key).to_json());
  });
}

fpg_status fpg_detect(const fpg_relation* rel, const char* key_json,
                      const uint64_t* serials, size_t n_serials,
                      char** out_json) {
  if (!rel || !key_json || !out_json) return invalid("null argument");
  if (n_serials > 0 && !serials) return invalid("null serial list");
  return guarded([&] {
    auto key = fpguard::FingerprintKey::from_json(key_json);
    fpguard::ExtractionResult ex = fpguard::extract(rel->v, key);
    json report;
    report["extracted"] = !ex.none_suspected();
    report["code"] = ex.code ? json(ex.code->to_hex()) : json(nullptr);
    json ranking = json::array();
    if (ex.code && n_serials > 0) {
      std::vector<std::pair<uint64_t, fpguard::FingerprintCode>> candidates;
      for (size_t i = 0; i < n_serials; ++i)
        candidates.emplace_back(
            serials[i],
            fpguard::generate_code(key.secret, serials[i], key.code_bits));
      for (const auto& s : fpguard::rank_suspects(*ex.code, candidates))
        ranking.push_back({{"serial", s.serial}, {"matches", s.matches}});
    }
    report["ranking"] = std::move(ranking);
    emit(out_json, report.dump());
  });
}

fpg_status fpg_marks_to_json(const fpg_marks* marks, char** out_json) {
  if (!marks || !out_json) return invalid("null argument");
  return guarded(
      [&] { emit(out_json, fpguard::marks_to_json(marks->v, marks->skipped)); });
}

fpg_status fpg_marks_from_json(const char* json_text, fpg_marks** out) {
  if (!json_text || !out) return invalid("null argument");
  return guarded([&] {
    uint64_t skipped = 0;
    auto v = fpguard::marks_from_json(json_text, &skipped);
    *out = new fpg_marks{std::move(v), skipped};
  });
}

fpg_status fpg_joints_compute(const fpg_relation* rel, fpg_joints** out) {
  if (!rel || !out) return invalid("null argument");
  return guarded(
      [&] { *out = new fpg_joints{fpguard::joint_distributions(rel->v)}; });
}

fpg_status fpg_joints_to_json(const fpg_joints* joints, char** out_json) {
  if (!joints || !out_json) return invalid("null argument");
  return guarded([&] { emit(out_json, joints->v.to_json()); });
}

fpg_status fpg_joints_from_json(const char* json_text, fpg_joints** out) {
  if (!json_text || !out) return invalid("null argument");
  return guarded([&] {
    *out = new fpg_joints{fpguard::JointDistributionSet::from_json(json_text)};
  });
}

fpg_status fpg_kmeans(const fpg_relation* rel, uint32_t communities,
                      uint64_t seed, fpg_comm** out) {
  if (!rel || !out) return invalid("null argument");
  return guarded([&] {
    *out = new fpg_comm{fpguard::kmeans_communities(rel->v, communities, seed)};
  });
}

fpg_status fpg_bic_select(const fpg_relation* rel, uint32_t c_min,
                          uint32_t c_max, uint64_t seed, char** out_json) {
  if (!rel || !out_json) return invalid("null argument");
  return guarded([&] {
    fpguard::BicResult r = fpguard::bic_select_c(rel->v, c_min, c_max, seed);
    json scores = json::array();
    for (const auto& s : r.scores)
      scores.push_back({{"c", s.c}, {"bic", s.bic}});
    emit(out_json, json{{"chosen", r.chosen}, {"scores", scores}}.dump());
  });
}

fpg_status fpg_comm_to_json(const fpg_comm* comm, char** out_json) {
  if (!comm || !out_json) return invalid("null argument");
  return guarded([&] { emit(out_json, comm->v.to_json()); });
}

fpg_status fpg_comm_from_json(const char* json_text, fpg_comm** out) {
  if (!json_text || !out) return invalid("null argument");
  return guarded([&] {
    *out = new fpg_comm{fpguard::CommunityAssignment::from_json(json_text)};
  });
}

fpg_status fpg_stats_compute(const fpg_relation* rel, const fpg_comm* comm,
                             fpg_stats** out) {
  if (!rel || !comm || !out) return invalid("null argument");
  return guarded(
      [&] { *out = new fpg_stats{fpguard::stat_relations(rel->v, comm->v)}; });
}

fpg_status fpg_stats_to_json(const fpg_stats* stats, char** out_json) {
  if (!stats || !out_json) return invalid("null argument");
  return guarded([&] { emit(out_json, stats->v.to_json()); });
}

fpg_status fpg_stats_from_json(const char* json_text, fpg_stats** out) {
  if (!json_text || !out) return invalid("null argument");
  return guarded([&] {
    *out = new fpg_stats{fpguard::StatRelationSet::from_json(json_text)};
  });
}

fpg_status fpg_attack_rnd(const fpg_relation* rel, double fraction,
                          uint64_t seed, fpg_relation** out_rel,
                          char** out_report_json) {
  if (!rel || !out_rel) return invalid("null argument");
  return guarded([&] {
    fpguard::AttackOutcome o = fpguard::random_flip_attack(rel->v, fraction, seed);
    *out_rel = new fpg_relation{std::move(o.relation)};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_attack_col(const fpg_relation* rel, const fpg_joints* prior,
                          double tau, uint32_t rounds, uint64_t seed,
                          fpg_relation** out_rel, char** out_report_json) {
  if (!rel || !prior || !out_rel) return invalid("null argument");
  return guarded([&] {
    fpguard::AttackOutcome o =
        fpguard::column_attack(rel->v, prior->v, tau, rounds, seed);
    *out_rel = new fpg_relation{std::move(o.relation)};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_attack_row(const fpg_relation* rel, const fpg_stats* prior,
                          double tau, fpg_relation** out_rel,
                          char** out_report_json) {
  if (!rel || !prior || !out_rel) return invalid("null argument");
  return guarded([&] {
    fpguard::AttackOutcome o = fpguard::row_attack(rel->v, prior->v, tau);
    *out_rel = new fpg_relation{std::move(o.relation)};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_attack_integrated(const fpg_relation* rel,
                                 const fpg_stats* s_prior,
                                 const fpg_joints* j_prior, double tau_row,
                                 double tau_col, uint32_t rounds,
                                 uint64_t seed, fpg_relation** out_rel,
                                 char** out_report_json) {
  if (!rel || !s_prior || !j_prior || !out_rel) return invalid("null argument");
  return guarded([&] {
    fpguard::AttackOutcome o = fpguard::integrated_attack(
        rel->v, s_prior->v, j_prior->v, tau_row, tau_col, rounds, seed);
    *out_rel = new fpg_relation{std::move(o.relation)};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_defend_col(const fpg_relation* rel, const fpg_joints* j_prior,
                          const fpg_marks* marks, double tau,
                          const double* lambdas, size_t n_lambdas,
                          uint64_t seed, fpg_relation** out_rel,
                          char** out_report_json) {
  if (!rel || !j_prior || !marks || !out_rel) return invalid("null argument");
  return guarded([&] {
    fpguard::DefenseOutcome o = fpguard::column_defense(
        rel->v, j_prior->v, marks->v, tau, lambda_vec(lambdas, n_lambdas), seed);
    *out_rel = new fpg_relation{std::move(o.relation)};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_defend_row(const fpg_relation* rel, const fpg_stats* s_prior,
                          double gamma_ratio, const fpg_marks* marks,
                          fpg_relation** out_rel, char** out_report_json) {
  if (!rel || !s_prior || !marks || !out_rel) return invalid("null argument");
  return guarded([&] {
    fpguard::DefenseOutcome o =
        fpguard::row_defense(rel->v, s_prior->v, gamma_ratio, marks->v);
    *out_rel = new fpg_relation{std::move(o.relation)};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_robust_fingerprint(const fpg_relation* rel,
                                  const char* key_json,
                                  const fpg_stats* s_prior,
                                  const fpg_joints* j_prior,
                                  double gamma_ratio, double tau,
                                  const double* lambdas, size_t n_lambdas,
                                  uint64_t seed, fpg_relation** out_rel,
                                  fpg_marks** out_marks,
                                  char** out_report_json) {
  if (!rel || !key_json || !s_prior || !j_prior || !out_rel)
    return invalid("null argument");
  return guarded([&] {
    auto key = fpguard::FingerprintKey::from_json(key_json);
    fpguard::RobustResult o = fpguard::robust_fingerprint(
        rel->v, key, s_prior->v, j_prior->v, gamma_ratio, tau,
        lambda_vec(lambdas, n_lambdas), seed);
    *out_rel = new fpg_relation{std::move(o.relation)};
    if (out_marks)
      *out_marks = new fpg_marks{std::move(o.marks), o.skipped_marks};
    emit(out_report_json, o.report.to_json());
  });
}

fpg_status fpg_metrics(const fpg_relation* pirated,
                       const fpg_relation* original, const fpg_comm* comm,
                       const char* config_json, char** out_json) {
  if (!pirated || !original || !out_json) return invalid("null argument");
  return guarded([&] {
    json cfg = config_json ? json::parse(config_json) : json::object();
    double tau_col = cfg.value("tau_col", 1e-4);
    double tau_row = cfg.value("tau_row", 10.0);
    json report;
    report["acc"] = fpguard::accuracy(pirated->v, original->v);
    report["p_col"] = fpguard::p_col(pirated->v, original->v, tau_col);
    report["p_cov"] = fpguard::p_cov(pirated->v, original->v);
    if (comm)
      report["p_row"] =
          fpguard::p_row(pirated->v, original->v, comm->v, tau_row);
    if (cfg.contains("queries")) {
      std::vector<fpguard::StatQuery> queries;
      for (const auto& q : cfg["queries"]) {
        fpguard::StatQuery query;
        std::string kind = q.at("kind").get<std::string>();
        if (kind == "frequency_at_least")
          query.kind = fpguard::StatQuery::Kind::frequency_at_least;
        else if (kind == "stddev")
          query.kind = fpguard::StatQuery::Kind::stddev;
        else
          fpguard::fail(fpguard::Errc::invalid_argument,
                        "unknown query kind " + kind);
        query.attribute = q.at("attribute").get<std::string>();
        query.threshold = q.value("threshold", 0u);
        queries.push_back(std::move(query));
      }
      json deltas = json::array();
      for (const auto& d :
           fpguard::stat_utilities(pirated->v, original->v, queries))
        deltas.push_back({{"name", d.name},
                          {"original", d.original},
                          {"pirated", d.pirated},
                          {"delta", d.delta}});
      report["queries"] = std::move(deltas);
    }
    emit(out_json, report.dump());
  });
}

fpg_status fpg_misattribution_bound(uint32_t n_sp, uint32_t code_bits,
                                    double* out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = fpguard::misattribution_bound(n_sp, code_bits); });
}

fpg_status fpg_misdiagnosis_bound(uint32_t n_sp, uint32_t code_bits,
                                  double* out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = fpguard::misdiagnosis_bound(n_sp, code_bits); });
}

fpg_status fpg_experiment_run(const char* table, const fpg_relation* rel,
                              const char* config_json, char** out_json,
                              char** out_text) {
  if (!table || !rel || !config_json) return invalid("null argument");
  return guarded([&] {
    fpguard::ExperimentTable t = fpguard::experiment_table_from_name(table);
    auto cfg = fpguard::ExperimentConfig::from_json(config_json);
    fpguard::ExperimentResult r = fpguard::run_experiment(t, rel->v, cfg);
    emit(out_json, r.to_json());
    emit(out_text, r.to_text());
  });
}

}  // extern "C"
