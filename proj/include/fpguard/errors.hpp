#pragma once

#include <stdexcept>
#include <string>

namespace fpguard {

// Machine-readable failure categories. The C API maps these onto its status
// codes and the CLI onto exit codes, so every throw site picks the slug the
// caller is expected to dispatch on.
enum class Errc {
  io_error,
  invalid_argument,
  duplicate_key,
  schema_mismatch,
  malformed_row,
  encode_error,
  unknown_instance,
  no_flip_possible,
  inconsistent_joint_set,
  degenerate_attribute,
  too_many_communities,
  empty_candidates,
  shape_error,
  degenerate_baseline,
  degenerate_frequency,
  constraint_violation,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fpguard
