#include "fpguard/theory.hpp"

#include <cmath>

#include "fpguard/errors.hpp"

namespace fpguard {

double misattribution_bound(uint32_t n_sp, uint32_t code_bits) {
  if (n_sp < 1 || code_bits < 1)
    fail(Errc::invalid_argument, "need at least one recipient and one bit");
  return std::ldexp(double(n_sp - 1), -int(code_bits));
}

double misdiagnosis_bound(uint32_t n_sp, uint32_t code_bits) {
  if (code_bits < 1) fail(Errc::invalid_argument, "need at least one bit");
  return std::ldexp(double(n_sp), -int(code_bits));
}

}  // namespace fpguard
