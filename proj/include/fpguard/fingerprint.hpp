#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpguard/relation.hpp"

namespace fpguard {

// Keyed selection parameters shared by the data owner and one recipient.
struct FingerprintKey {
  std::vector<uint8_t> secret;  // shared secret bytes
  uint64_t serial = 0;          // recipient serial number
  uint32_t gamma_inv = 35;      // one marked row per gamma_inv rows on average
  uint32_t code_bits = 128;     // fingerprint length L
  uint32_t bit_level = 1;       // which value bit carries the mark (1 = LSB)

  void validate() const;
  std::string to_json() const;
  static FingerprintKey from_json(const std::string& json_text);
};

struct FingerprintCode {
  std::vector<uint8_t> bits;  // one entry per bit, index 0 first

  size_t size() const { return bits.size(); }
  // Lowercase hex, most-significant bit of byte 0 is bits[0]; trailing pad
  // bits inside the last byte are zero.
  std::string to_hex() const;
  static FingerprintCode from_hex(const std::string& hex, uint32_t length_bits);
  bool operator==(const FingerprintCode&) const = default;
};

struct MarkedPosition {
  uint64_t row = 0;       // row index into the relation
  uint32_t attr = 0;      // attribute index
  uint8_t mask_bit = 0;   // x
  uint32_t bit_index = 0; // l
  uint8_t mark_bit = 0;   // m = x xor code[l]
};

std::string marks_to_json(const std::vector<MarkedPosition>& marks, uint64_t skipped);
std::vector<MarkedPosition> marks_from_json(const std::string& json_text,
                                            uint64_t* skipped = nullptr);

// 64-bit PRF stream: first 8 bytes, big-endian, of
// SHA-256(secret || 0x00 || pk_bytes || stream_index).
uint64_t prf_u(const std::vector<uint8_t>& secret,
               const std::vector<uint8_t>& pk_bytes, uint8_t stream_index);

// Recipient code: first L bits of SHA-256(secret || 0x01 || serial_be8),
// extended with SHA-256(secret || 0x01 || serial_be8 || counter_be4) for
// counter = 1, 2, ... when L > 256.
FingerprintCode generate_code(const std::vector<uint8_t>& secret, uint64_t serial,
                              uint32_t code_bits);

struct InsertResult {
  Relation relation;
  std::vector<MarkedPosition> marks;  // row order
  uint64_t skipped = 0;               // selected cells that could not carry a bit
};

InsertResult embed(const Relation& rel, const FingerprintKey& key);

struct ExtractionResult {
  std::optional<FingerprintCode> code;  // nullopt when any bit tied
  std::vector<std::array<uint64_t, 2>> votes;

  bool none_suspected() const { return !code.has_value(); }
  std::string to_json() const;
};

ExtractionResult extract(const Relation& leaked, const FingerprintKey& key);

struct SuspectScore {
  uint64_t serial = 0;
  uint32_t matches = 0;
};

// Candidates ranked by matching bit count, descending; ties by serial.
std::vector<SuspectScore> rank_suspects(
    const FingerprintCode& extracted,
    const std::vector<std::pair<uint64_t, FingerprintCode>>& candidates);

}  // namespace fpguard
