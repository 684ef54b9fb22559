#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpguard/correlations.hpp"
#include "fpguard/fingerprint.hpp"
#include "fpguard/relation.hpp"

namespace fpguard {

// Bits of the embedded code the extracted code got wrong.
uint32_t num_cmp(const FingerprintCode& embedded,
                 const FingerprintCode& extracted);

struct RobustnessReport {
  uint32_t num_cmp = 0;  // embedded vs extracted, for the malicious SP
  uint32_t m0 = 0;       // malicious SP's match count
  bool uniquely_accusable = false;
  double t = 0.0;  // fraction of innocents with >= m0 matches, else 0

  std::string to_json() const;
};

// Ranks the malicious SP's code against innocents on bit matches with the
// extracted code. Ties count against the malicious SP.
RobustnessReport accusable_rank(const FingerprintCode& extracted,
                                const FingerprintCode& malicious,
                                const std::vector<FingerprintCode>& innocents);

// 1 - (differing cells) / (M * num_attrs).
double accuracy(const Relation& pirated, const Relation& original);

// Fraction of ordered joint-distribution cells whose probability moved less
// than tau_col.
double p_col(const Relation& pirated, const Relation& original,
             double tau_col);

// Fraction of ordered same-community record pairs whose similarity moved
// less than tau_row.
double p_row(const Relation& pirated, const Relation& original,
             const CommunityAssignment& comm, double tau_row);

// 1 - ||cov(pirated) - cov(original)||_F / ||cov(original)||_F with the
// uncentered second moment cov(X) = sum_i r_i r_i^T / M.
double p_cov(const Relation& pirated, const Relation& original);

struct StatQuery {
  enum class Kind { frequency_at_least, stddev };
  Kind kind = Kind::frequency_at_least;
  std::string attribute;
  uint32_t threshold = 0;  // frequency_at_least only
};

struct StatDelta {
  std::string name;
  double original = 0.0;
  double pirated = 0.0;
  double delta = 0.0;
};

// |stat(pirated) - stat(original)| for each query.
std::vector<StatDelta> stat_utilities(const Relation& pirated,
                                      const Relation& original,
                                      const std::vector<StatQuery>& queries);

// Column-attack confidence gain about an entry whose attribute takes a value
// of frequency freq, against partners of the given cardinalities. The inner
// base is clamped to [0,1].
double conf_gain_col(double tau, double gamma_ratio, uint32_t n_attrs,
                     double freq, const std::vector<uint32_t>& partner_cards);

// Row-attack confidence gain for a community of n_c records at threshold tau.
double conf_gain_row(double tau, double gamma_ratio, uint32_t n_c);

}  // namespace fpguard
