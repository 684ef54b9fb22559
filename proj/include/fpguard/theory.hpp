#pragma once

#include <cstdint>

namespace fpguard {

// Probability that an innocent recipient beats the leaker's match count:
// (n_sp - 1) / 2^L.
double misattribution_bound(uint32_t n_sp, uint32_t code_bits);

// Probability that any recipient is falsely flagged from unmarked data:
// n_sp / 2^L.
double misdiagnosis_bound(uint32_t n_sp, uint32_t code_bits);

}  // namespace fpguard
