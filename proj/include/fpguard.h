#ifndef FPGUARD_H
#define FPGUARD_H

/* C interface to the fingerprinting toolkit. Handles are opaque; every
 * function that can fail returns fpg_status and leaves a message retrievable
 * via fpg_last_error() on the calling thread. Strings returned through
 * char** are heap-allocated JSON (or CSV-ready text) and must be released
 * with fpg_string_free(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fpg_status {
  FPG_OK = 0,
  FPG_ERR_IO = 1,
  FPG_ERR_DOMAIN = 2,
  FPG_ERR_INVALID = 3,
  FPG_ERR_INTERNAL = 4
} fpg_status;

typedef struct fpg_relation fpg_relation;
typedef struct fpg_rawtable fpg_rawtable;
typedef struct fpg_encoding fpg_encoding;
typedef struct fpg_marks fpg_marks;
typedef struct fpg_joints fpg_joints;
typedef struct fpg_comm fpg_comm;
typedef struct fpg_stats fpg_stats;

const char* fpg_version(void);

/* Last failure on this thread: human-readable message and the library's
 * internal error slug (e.g. "duplicate_key"). Both live until the next
 * failing call on the same thread. */
const char* fpg_last_error(void);
const char* fpg_last_error_code(void);

void fpg_string_free(char* s);
void fpg_relation_free(fpg_relation* r);
void fpg_rawtable_free(fpg_rawtable* t);
void fpg_encoding_free(fpg_encoding* e);
void fpg_marks_free(fpg_marks* m);
void fpg_joints_free(fpg_joints* j);
void fpg_comm_free(fpg_comm* c);
void fpg_stats_free(fpg_stats* s);

/* ---- data ---- */

/* spec_json: {"n_rows","attributes":[{"name","cardinality"}],"clusters",
 * "adherence"} */
fpg_status fpg_synth(const char* spec_json, uint64_t seed, fpg_relation** out);

/* schema_config_json: {"primary_key","attributes":[{"name","kind","buckets"?}]} */
fpg_status fpg_rawtable_parse_csv(const char* csv_path,
                                  const char* schema_config_json,
                                  fpg_rawtable** out);
fpg_status fpg_encoding_fit(const fpg_rawtable* table, fpg_encoding** out);
fpg_status fpg_encoding_apply(const fpg_rawtable* table,
                              const fpg_encoding* enc, fpg_relation** out);
fpg_status fpg_encoding_to_json(const fpg_encoding* enc, char** out_json);
fpg_status fpg_encoding_from_json(const char* json, fpg_encoding** out);

fpg_status fpg_relation_read_csv(const char* csv_path,
                                 const char* schema_json_path,
                                 fpg_relation** out);
fpg_status fpg_relation_write_csv(const fpg_relation* rel,
                                  const char* csv_path);
fpg_status fpg_relation_schema_json(const fpg_relation* rel, char** out_json);
size_t fpg_relation_num_rows(const fpg_relation* rel);
size_t fpg_relation_num_attrs(const fpg_relation* rel);

/* ---- fingerprinting ---- */

/* key_json: {"secret","serial","gamma_inv","code_bits","bit_level"} */
fpg_status fpg_embed(const fpg_relation* rel, const char* key_json,
                     fpg_relation** out_rel, fpg_marks** out_marks);
fpg_status fpg_extract(const fpg_relation* rel, const char* key_json,
                       char** out_json);
/* Extraction plus ranking of the given recipient serials by bit matches. */
fpg_status fpg_detect(const fpg_relation* rel, const char* key_json,
                      const uint64_t* serials, size_t n_serials,
                      char** out_json);
fpg_status fpg_marks_to_json(const fpg_marks* marks, char** out_json);
fpg_status fpg_marks_from_json(const char* json, fpg_marks** out);

/* ---- correlation models ---- */

fpg_status fpg_joints_compute(const fpg_relation* rel, fpg_joints** out);
fpg_status fpg_joints_to_json(const fpg_joints* joints, char** out_json);
fpg_status fpg_joints_from_json(const char* json, fpg_joints** out);

fpg_status fpg_kmeans(const fpg_relation* rel, uint32_t communities,
                      uint64_t seed, fpg_comm** out);
fpg_status fpg_bic_select(const fpg_relation* rel, uint32_t c_min,
                          uint32_t c_max, uint64_t seed, char** out_json);
fpg_status fpg_comm_to_json(const fpg_comm* comm, char** out_json);
fpg_status fpg_comm_from_json(const char* json, fpg_comm** out);

fpg_status fpg_stats_compute(const fpg_relation* rel, const fpg_comm* comm,
                             fpg_stats** out);
fpg_status fpg_stats_to_json(const fpg_stats* stats, char** out_json);
fpg_status fpg_stats_from_json(const char* json, fpg_stats** out);

/* ---- attacks ---- */

fpg_status fpg_attack_rnd(const fpg_relation* rel, double fraction,
                          uint64_t seed, fpg_relation** out_rel,
                          char** out_report_json);
fpg_status fpg_attack_col(const fpg_relation* rel, const fpg_joints* prior,
                          double tau, uint32_t rounds, uint64_t seed,
                          fpg_relation** out_rel, char** out_report_json);
fpg_status fpg_attack_row(const fpg_relation* rel, const fpg_stats* prior,
                          double tau, fpg_relation** out_rel,
                          char** out_report_json);
fpg_status fpg_attack_integrated(const fpg_relation* rel,
                                 const fpg_stats* s_prior,
                                 const fpg_joints* j_prior, double tau_row,
                                 double tau_col, uint32_t rounds,
                                 uint64_t seed, fpg_relation** out_rel,
                                 char** out_report_json);

/* ---- defenses ---- */

fpg_status fpg_defend_col(const fpg_relation* rel, const fpg_joints* j_prior,
                          const fpg_marks* marks, double tau,
                          const double* lambdas, size_t n_lambdas,
                          uint64_t seed, fpg_relation** out_rel,
                          char** out_report_json);
fpg_status fpg_defend_row(const fpg_relation* rel, const fpg_stats* s_prior,
                          double gamma_ratio, const fpg_marks* marks,
                          fpg_relation** out_rel, char** out_report_json);
fpg_status fpg_robust_fingerprint(const fpg_relation* rel,
                                  const char* key_json,
                                  const fpg_stats* s_prior,
                                  const fpg_joints* j_prior,
                                  double gamma_ratio, double tau,
                                  const double* lambdas, size_t n_lambdas,
                                  uint64_t seed, fpg_relation** out_rel,
                                  fpg_marks** out_marks,
                                  char** out_report_json);

/* ---- metrics & bounds ---- */

/* config_json: {"tau_col","tau_row","queries":[{"kind":"frequency_at_least"|
 * "stddev","attribute","threshold"?}]}; comm may be NULL to skip p_row. */
fpg_status fpg_metrics(const fpg_relation* pirated,
                       const fpg_relation* original, const fpg_comm* comm,
                       const char* config_json, char** out_json);

fpg_status fpg_misattribution_bound(uint32_t n_sp, uint32_t code_bits,
                                    double* out);
fpg_status fpg_misdiagnosis_bound(uint32_t n_sp, uint32_t code_bits,
                                  double* out);

/* ---- experiments ---- */

fpg_status fpg_experiment_run(const char* table, const fpg_relation* rel,
                              const char* config_json, char** out_json,
                              char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* FPGUARD_H */
