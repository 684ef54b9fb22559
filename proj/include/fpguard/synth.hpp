#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpguard/relation.hpp"

namespace fpguard {

// Latent-cluster generator: each row draws a hidden cluster, then each cell
// takes the cluster's preferred code with probability `adherence` and a
// uniform code otherwise. Clusters induce both pairwise joint structure and
// community structure.
struct SynthSpec {
  uint32_t n_rows = 0;
  std::vector<AttributeSpec> attributes;
  uint32_t clusters = 4;
  double adherence = 0.6;

  std::string to_json() const;
  static SynthSpec from_json(const std::string& json_text);
};

// Deterministic for a given spec and seed. Codes are relabeled per attribute
// by descending frequency (ties keep the original order), so code 0 is the
// most frequent instance, matching what the categorical encoder would assign.
Relation synth_relation(const SynthSpec& spec, uint64_t seed);

// Convenience spec with attributes a0..a(n-1) of the given cardinalities.
SynthSpec make_synth_spec(uint32_t n_rows,
                          const std::vector<uint32_t>& cardinalities,
                          uint32_t clusters, double adherence);

}  // namespace fpguard
