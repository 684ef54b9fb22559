#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpguard/relation.hpp"

namespace fpguard {

// Pairwise empirical joint distributions over all unordered attribute pairs.
// Entries are counts divided by the row count, so each matrix sums to 1.
struct JointDistributionSet {
  std::vector<std::string> attr_names;
  std::vector<uint32_t> cards;
  std::vector<std::vector<double>> mats;  // pair p<q, row-major k_p x k_q

  size_t num_attrs() const { return cards.size(); }
  size_t pair_index(uint32_t p, uint32_t q) const;
  // J(p,q)(a,b); symmetric accessor, J(q,p)(b,a) is the same entry.
  double at(uint32_t p, uint32_t q, uint32_t a, uint32_t b) const;

  std::string to_json() const;
  static JointDistributionSet from_json(const std::string& json_text);
};

JointDistributionSet joint_distributions(const Relation& rel);

// Marginal of attribute p recovered from row sums; partners must agree
// within 1e-9 or the set is reported inconsistent.
std::vector<double> marginal(const JointDistributionSet& joints, uint32_t p);

// Pearson correlation of the code values under the pair's joint.
double pearson_from_joint(const JointDistributionSet& joints, uint32_t p,
                          uint32_t q);

struct CommunityAssignment {
  uint32_t count = 0;
  std::vector<uint32_t> membership;  // row -> community id

  std::vector<std::vector<uint32_t>> groups() const;
  std::string to_json() const;
  static CommunityAssignment from_json(const std::string& json_text);
};

// Seeded Lloyd k-means on the integer codes (squared Euclidean), with
// farthest-point initialization and deterministic tie-breaking.
CommunityAssignment kmeans_communities(const Relation& rel, uint32_t c,
                                       uint64_t seed);

struct BicScore {
  uint32_t c = 0;
  double bic = 0.0;
};
struct BicResult {
  uint32_t chosen = 0;
  std::vector<BicScore> scores;
};

// Gaussian-approximation BIC over a community-count range; smallest score
// wins, ties go to the smaller count.
BicResult bic_select_c(const Relation& rel, uint32_t c_min, uint32_t c_max,
                       uint64_t seed);

// Pairwise record similarities s_ij = exp(-Hamming(r_i, r_j)) within each
// community. Computed sets keep a snapshot of the rows and evaluate pairs on
// demand; sets loaded from JSON carry explicit edges (desk scale).
struct StatRelationSet {
  CommunityAssignment comm;
  uint32_t n_attrs = 0;

  // Snapshot backing.
  bool snapshot = false;
  std::vector<std::vector<uint32_t>> rows;
  bool packed_usable = false;
  std::vector<std::array<uint64_t, 2>> packed;  // 16 one-byte code slots

  // Explicit backing (deserialized).
  std::vector<std::unordered_map<uint64_t, double>> edges;  // key i<<32|j, i<j

  uint32_t hamming(size_t i, size_t j) const;
  double s(size_t i, size_t j) const;  // same community required

  // Edge-list JSON; refuses sets above a pair-count cap since the output is
  // quadratic in community size.
  std::string to_json() const;
  static StatRelationSet from_json(const std::string& json_text);
};

StatRelationSet stat_relations(const Relation& rel,
                               const CommunityAssignment& comm);

// e_i = sum over same-community partners j of |prior.s(i,j) - current.s(i,j)|.
// Both sets must share membership, row count, and attribute count.
std::vector<double> row_discrepancies(const StatRelationSet& prior,
                                      const StatRelationSet& current);

struct PairDiffStats {
  uint64_t ordered_pairs = 0;
  uint64_t ordered_violations = 0;  // |prior - current| >= tau
};
PairDiffStats stat_pair_violations(const StatRelationSet& prior,
                                   const StatRelationSet& current, double tau);

}  // namespace fpguard
