#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fpguard/correlations.hpp"
#include "fpguard/fingerprint.hpp"
#include "fpguard/relation.hpp"

namespace fpguard {

struct SinkhornDiag {
  uint32_t attribute = 0;
  double lambda = 0.0;
  bool converged = false;
  uint32_t iterations = 0;
  double residual = 0.0;
  std::vector<double> residuals;
  uint64_t shortfall = 0;
  bool applied = false;  // non-converged solves are skipped, not applied
};

struct CommunitySelection {
  uint32_t community = 0;
  std::vector<uint32_t> selected;
  double objective = 0.0;
};

struct DefenseReport {
  std::vector<std::pair<uint32_t, uint32_t>> changed_positions;  // (row, attr)
  double per_chg = 0.0;
  std::vector<SinkhornDiag> attribute_diags;
  std::vector<CommunitySelection> selections;

  std::string to_json() const;
};

struct DefenseOutcome {
  Relation relation;
  DefenseReport report;
};

// Restores drifted pairwise joints by re-shaping attribute marginals. Every
// attribute in a pair whose joint moved more than tau in Frobenius norm gets
// a Sinkhorn plan from its current marginal to the reference marginal, and
// the plan's off-diagonal mass is realized as seeded value rewrites that
// never touch fingerprinted cells of that attribute. `lambdas` holds either
// one global value or one per attribute.
DefenseOutcome column_defense(const Relation& rel,
                              const JointDistributionSet& j_prior,
                              const std::vector<MarkedPosition>& marked,
                              double tau, const std::vector<double>& lambdas,
                              uint64_t seed);

// Distortion that candidate edits inflict on a community's similarity
// structure: |sum |s' - s_after| - sum |s' - s_before|| over pairs of one
// selected row and one unselected same-community row. Selected rows must not
// carry fingerprint marks.
double eval_row_objective(const std::vector<uint32_t>& selected,
                          const Relation& before, const Relation& after,
                          const StatRelationSet& prior,
                          const std::vector<MarkedPosition>& marked);

// Greedy similarity smoothing: per community, the ceil(n_c * gamma_ratio)
// unfingerprinted records with the largest similarity discrepancy against
// the prior are rewritten to the community's per-attribute modal values.
DefenseOutcome row_defense(const Relation& rel, const StatRelationSet& s_prior,
                           double gamma_ratio,
                           const std::vector<MarkedPosition>& marked);

struct RobustResult {
  Relation relation;
  std::vector<MarkedPosition> marks;
  uint64_t skipped_marks = 0;
  DefenseReport report;  // merged row + column defense report
};

// Fingerprint insertion hardened against correlation attacks: embed, then
// row defense, then column defense (the cheaper edit set goes first).
RobustResult robust_fingerprint(const Relation& rel, const FingerprintKey& key,
                                const StatRelationSet& s_prior,
                                const JointDistributionSet& j_prior,
                                double gamma_ratio, double tau,
                                const std::vector<double>& lambdas,
                                uint64_t seed);

}  // namespace fpguard
