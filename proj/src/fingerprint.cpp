#include "fpguard/fingerprint.hpp"

#include <algorithm>
#include <cstring>

#include <nlohmann/json.hpp>

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-declarations"
#include <openssl/sha.h>

namespace {

// One-shot SHA-256. The legacy entry point skips the EVP fetch machinery,
// which matters here: embedding hashes every row up to four times.
std::array<uint8_t, 32> sha256(const uint8_t* data, size_t len) {
  std::array<uint8_t, 32> out;
  SHA256(data, len, out.data());
  return out;
}

}  // namespace
#pragma GCC diagnostic pop

namespace fpguard {

using nlohmann::json;

void FingerprintKey::validate() const {
  if (secret.empty()) fail(Errc::invalid_argument, "empty secret");
  if (gamma_inv < 1) fail(Errc::invalid_argument, "gamma_inv must be >= 1");
  if (code_bits < 1) fail(Errc::invalid_argument, "code_bits must be >= 1");
  if (bit_level < 1 || bit_level > 31)
    fail(Errc::invalid_argument, "bit_level out of range");
}

std::string FingerprintKey::to_json() const {
  return json{{"secret", std::string(secret.begin(), secret.end())},
              {"serial", serial},
              {"gamma_inv", gamma_inv},
              {"code_bits", code_bits},
              {"bit_level", bit_level}}
      .dump();
}

FingerprintKey FingerprintKey::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("key json: ") + e.what());
  }
  FingerprintKey key;
  std::string secret = j.at("secret").get<std::string>();
  key.secret.assign(secret.begin(), secret.end());
  key.serial = j.at("serial").get<uint64_t>();
  key.gamma_inv = j.value("gamma_inv", 35u);
  key.code_bits = j.value("code_bits", 128u);
  key.bit_level = j.value("bit_level", 1u);
  key.validate();
  return key;
}

std::string FingerprintCode::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (size_t l = 0; l < bits.size(); ++l)
    if (bits[l]) bytes[l / 8] |= uint8_t(1u << (7 - l % 8));
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

FingerprintCode FingerprintCode::from_hex(const std::string& hex,
                                          uint32_t length_bits) {
  if (hex.size() != 2 * ((length_bits + 7) / 8))
    fail(Errc::invalid_argument, "hex length does not match code length");
  auto nibble = [](char c) -> uint32_t {
    if (c >= '0' && c <= '9') return uint32_t(c - '0');
    if (c >= 'a' && c <= 'f') return uint32_t(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return uint32_t(c - 'A' + 10);
    fail(Errc::invalid_argument, "invalid hex digit");
  };
  FingerprintCode code;
  code.bits.resize(length_bits);
  for (uint32_t l = 0; l < length_bits; ++l) {
    uint32_t nib = nibble(hex[l / 4]);
    code.bits[l] = uint8_t((nib >> (3 - l % 4)) & 1u);
  }
  return code;
}

std::string marks_to_json(const std::vector<MarkedPosition>& marks,
                          uint64_t skipped) {
  json arr = json::array();
  for (const auto& m : marks)
    arr.push_back({{"row", m.row},
                   {"attr", m.attr},
                   {"mask", m.mask_bit},
                   {"bit", m.bit_index},
                   {"mark", m.mark_bit}});
  return json{{"positions", arr}, {"skipped", skipped}}.dump(2);
}

std::vector<MarkedPosition> marks_from_json(const std::string& json_text,
                                            uint64_t* skipped) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("marks json: ") + e.what());
  }
  std::vector<MarkedPosition> marks;
  for (const auto& m : j.at("positions")) {
    marks.push_back({m.at("row").get<uint64_t>(), m.at("attr").get<uint32_t>(),
                     m.at("mask").get<uint8_t>(), m.at("bit").get<uint32_t>(),
                     m.at("mark").get<uint8_t>()});
  }
  if (skipped) *skipped = j.value("skipped", 0ull);
  return marks;
}

uint64_t prf_u(const std::vector<uint8_t>& secret,
               const std::vector<uint8_t>& pk_bytes, uint8_t stream_index) {
  std::vector<uint8_t> msg;
  msg.reserve(secret.size() + pk_bytes.size() + 2);
  msg.insert(msg.end(), secret.begin(), secret.end());
  msg.push_back(0x00);
  msg.insert(msg.end(), pk_bytes.begin(), pk_bytes.end());
  msg.push_back(stream_index);
  auto digest = sha256(msg.data(), msg.size());
  uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | digest[i];
  return out;
}

FingerprintCode generate_code(const std::vector<uint8_t>& secret, uint64_t serial,
                              uint32_t code_bits) {
  FingerprintCode code;
  code.bits.resize(code_bits);
  std::vector<uint8_t> msg;
  msg.reserve(secret.size() + 13);
  msg.insert(msg.end(), secret.begin(), secret.end());
  msg.push_back(0x01);
  for (int i = 0; i < 8; ++i) msg.push_back(uint8_t(serial >> (56 - 8 * i)));
  const size_t base_len = msg.size();

  uint32_t produced = 0;
  uint32_t counter = 0;
  while (produced < code_bits) {
    msg.resize(base_len);
    if (counter > 0)
      for (int i = 0; i < 4; ++i) msg.push_back(uint8_t(counter >> (24 - 8 * i)));
    auto digest = sha256(msg.data(), msg.size());
    for (size_t b = 0; b < 256 && produced < code_bits; ++b, ++produced)
      code.bits[produced] = uint8_t((digest[b / 8] >> (7 - b % 8)) & 1u);
    ++counter;
  }
  return code;
}

InsertResult embed(const Relation& rel, const FingerprintKey& key) {
  key.validate();
  if (rel.num_attrs() == 0) fail(Errc::shape_error, "relation has no attributes");
  FingerprintCode code = generate_code(key.secret, key.serial, key.code_bits);

  InsertResult result;
  result.relation = rel;
  for (size_t i = 0; i < rel.num_rows(); ++i) {
    auto pkb = rel.keys[i].bytes();
    if (prf_u(key.secret, pkb, 1) % key.gamma_inv != 0) continue;
    uint32_t p = uint32_t(prf_u(key.secret, pkb, 2) % rel.num_attrs());
    uint8_t x = uint8_t(prf_u(key.secret, pkb, 3) & 1u);
    uint32_t l = uint32_t(prf_u(key.secret, pkb, 4) % key.code_bits);
    uint8_t m = uint8_t(x ^ code.bits[l]);
    auto nv = set_level_bit(result.relation.rows[i][p], key.bit_level, m,
                            rel.schema[p].cardinality);
    if (!nv) {
      ++result.skipped;
      continue;
    }
    result.relation.rows[i][p] = *nv;
    result.marks.push_back({i, p, x, l, m});
  }
  return result;
}

ExtractionResult extract(const Relation& leaked, const FingerprintKey& key) {
  key.validate();
  if (leaked.num_attrs() == 0) fail(Errc::shape_error, "relation has no attributes");
  ExtractionResult result;
  result.votes.assign(key.code_bits, {0, 0});

  for (size_t i = 0; i < leaked.num_rows(); ++i) {
    auto pkb = leaked.keys[i].bytes();
    if (prf_u(key.secret, pkb, 1) % key.gamma_inv != 0) continue;
    uint32_t p = uint32_t(prf_u(key.secret, pkb, 2) % leaked.num_attrs());
    uint8_t x = uint8_t(prf_u(key.secret, pkb, 3) & 1u);
    uint32_t l = uint32_t(prf_u(key.secret, pkb, 4) % key.code_bits);
    uint8_t m = uint8_t((leaked.rows[i][p] >> (key.bit_level - 1)) & 1u);
    ++result.votes[l][m ^ x];
  }

  FingerprintCode code;
  code.bits.resize(key.code_bits);
  for (uint32_t l = 0; l < key.code_bits; ++l) {
    if (result.votes[l][0] == result.votes[l][1]) return result;  // tie: no code
    code.bits[l] = uint8_t(result.votes[l][1] > result.votes[l][0]);
  }
  result.code = std::move(code);
  return result;
}

std::string ExtractionResult::to_json() const {
  json v = json::array();
  for (const auto& pair : votes) v.push_back({pair[0], pair[1]});
  json out{{"votes", v}};
  if (code)
    out["code"] = code->to_hex();
  else
    out["none_suspected"] = true;
  return out.dump(2);
}

std::vector<SuspectScore> rank_suspects(
    const FingerprintCode& extracted,
    const std::vector<std::pair<uint64_t, FingerprintCode>>& candidates) {
  if (candidates.empty()) fail(Errc::empty_candidates, "no candidate codes");
  std::vector<SuspectScore> scores;
  scores.reserve(candidates.size());
  for (const auto& [serial, code] : candidates) {
    if (code.size() != extracted.size())
      fail(Errc::shape_error, "candidate code length mismatch");
    uint32_t matches = 0;
    for (size_t l = 0; l < code.size(); ++l)
      matches += uint32_t(code.bits[l] == extracted.bits[l]);
    scores.push_back({serial, matches});
  }
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.matches != b.matches) return a.matches > b.matches;
    return a.serial < b.serial;
  });
  return scores;
}

}  // namespace fpguard
