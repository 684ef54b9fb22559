#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fpguard/correlations.hpp"
#include "fpguard/relation.hpp"

namespace fpguard {

struct AttackReport {
  std::vector<std::pair<uint32_t, uint32_t>> changed_positions;  // (row, attr)
  double per_chg = 0.0;
  uint32_t rounds_executed = 0;

  std::string to_json() const;
};

struct AttackOutcome {
  Relation relation;
  AttackReport report;
};

// Called after each executed column-attack round with the current state.
using RoundObserver = std::function<void(uint32_t round, const Relation&)>;

// Flips the LSB of floor(fraction * M * num_attrs) distinct cells chosen
// uniformly with the given seed. Constant attributes (cardinality < 2) have
// no legal flip and are left untouched.
AttackOutcome random_flip_attack(const Relation& rel, double fraction,
                                 uint64_t seed);

// Iterative correlation attack on pairwise joints. Each round recomputes the
// current joints, marks every row matching a cell whose probability drifted
// from the prior by at least tau as suspicious in both attributes of the
// pair, flips the LSB of each row's modal suspicious attribute (seeded tie
// break), and accumulates flipped positions so no cell is flipped twice.
// Stops early once a round produces no new flips.
AttackOutcome column_attack(const Relation& rel,
                            const JointDistributionSet& prior, double tau,
                            uint32_t rounds, uint64_t seed,
                            const RoundObserver& observer = {});

// Flags every record whose summed similarity discrepancy against the prior
// reaches tau and flips the LSB of all its attributes. Single pass.
AttackOutcome row_attack(const Relation& rel, const StatRelationSet& prior,
                         double tau);

// Row attack followed by the column attack on its output; the report merges
// both change sets (deduplicated).
AttackOutcome integrated_attack(const Relation& rel,
                                const StatRelationSet& s_prior,
                                const JointDistributionSet& j_prior,
                                double tau_row, double tau_col, uint32_t rounds,
                                uint64_t seed,
                                const RoundObserver& observer = {});

}  // namespace fpguard
