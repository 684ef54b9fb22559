#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "fpguard/fingerprint.hpp"
#include "oracles.hpp"

using namespace fpguard;

namespace {

std::vector<uint8_t> sec(const std::string& s) {
  return std::vector<uint8_t>(s.begin(), s.end());
}

Relation random_relation(size_t rows, const std::vector<uint32_t>& cards,
                         uint64_t seed) {
  Relation rel;
  rel.pk_name = "id";
  std::mt19937_64 rng(seed);
  for (size_t p = 0; p < cards.size(); ++p)
    rel.schema.push_back({"a" + std::to_string(p), AttrKind::categorical,
                          cards[p]});
  for (size_t i = 0; i < rows; ++i) {
    rel.keys.push_back(PrimaryKey{true, i + 1, {}});
    std::vector<uint32_t> row;
    for (uint32_t c : cards) row.push_back(uint32_t(rng() % c));
    rel.rows.push_back(std::move(row));
  }
  return rel;
}

}  // namespace

// Values frozen from an independent SHA-256 implementation (Python hashlib):
// sha256(b"key" + b"\x00" + pk_bytes + bytes([i])), first 8 bytes big-endian.
TEST_CASE("prf stream matches frozen reference digests") {
  auto k = sec("key");
  std::vector<uint8_t> pk_text = {'1'};
  CHECK(prf_u(k, pk_text, 1) == 7124054081038292143ull);
  CHECK(prf_u(k, pk_text, 2) == 13407132728275844872ull);
  CHECK(prf_u(k, pk_text, 3) == 7718777615635661635ull);
  CHECK(prf_u(k, pk_text, 4) == 3044881949077587946ull);

  auto pk_int = PrimaryKey::parse("1").bytes();
  REQUIRE(pk_int.size() == 8);
  CHECK(prf_u(k, pk_int, 1) == 5217023043624708782ull);

  CHECK(prf_u(k, pk_text, 1) == prf_u(k, pk_text, 1));
}

TEST_CASE("prf streams do not collide across indices") {
  auto k = sec("prf-collision-probe");
  int collisions = 0;
  for (uint64_t n = 0; n < 10000; ++n) {
    auto pk = PrimaryKey{true, n, {}}.bytes();
    if (prf_u(k, pk, 1) == prf_u(k, pk, 2)) ++collisions;
  }
  CHECK(collisions < 1);
}

// sha256(b"key" + b"\x01" + serial_be8 [+ counter_be4]) frozen the same way.
TEST_CASE("codeword generation matches frozen digests, counter mode included") {
  auto k = sec("key");
  CHECK(generate_code(k, 7, 128).to_hex() ==
        "bc243488229ad446bd4e1492220a8e33");
  CHECK(generate_code(k, 7, 256).to_hex() ==
        "bc243488229ad446bd4e1492220a8e33209929c204ef23663986afcbd62ae3ac");
  CHECK(generate_code(k, 7, 384).to_hex() ==
        "bc243488229ad446bd4e1492220a8e33209929c204ef23663986afcbd62ae3ac"
        "c21fbc11dd02ae5c0ce366193c7969c3");
  CHECK(generate_code(k, 7, 5).to_hex() == "b8");

  for (uint32_t L : {1u, 128u, 300u})
    CHECK(generate_code(k, 9, L).size() == L);
  CHECK(generate_code(k, 9, 128) == generate_code(k, 9, 128));
}

TEST_CASE("codes from distinct serials stay far apart") {
  auto k = sec("distance-probe");
  const uint32_t L = 128;
  std::vector<FingerprintCode> codes;
  for (uint64_t n = 0; n < 200; ++n) codes.push_back(generate_code(k, n, L));
  uint32_t min_d = L;
  for (size_t i = 0; i < codes.size(); ++i)
    for (size_t j = i + 1; j < codes.size(); ++j) {
      uint32_t d = 0;
      for (uint32_t b = 0; b < L; ++b) d += codes[i].bits[b] != codes[j].bits[b];
      min_d = std::min(min_d, d);
    }
  CHECK(min_d >= L / 4);
}

TEST_CASE("hex round trip preserves bits and pads with zeros") {
  FingerprintCode c;
  c.bits = {1, 0, 1, 1, 0};
  CHECK(c.to_hex() == "b0");
  auto back = FingerprintCode::from_hex("b0", 5);
  CHECK(back == c);
  auto full = FingerprintCode::from_hex("bc243488229ad446bd4e1492220a8e33", 128);
  CHECK(full.to_hex() == "bc243488229ad446bd4e1492220a8e33");
  CHECK(full.bits[0] == 1);  // 0xb = 1011
  CHECK(full.bits[1] == 0);
  CHECK(full.bits[2] == 1);
  CHECK(full.bits[3] == 1);
}

TEST_CASE("gamma_inv of one marks every row exactly once") {
  auto rel = random_relation(200, {4, 4, 4}, 5);
  FingerprintKey key;
  key.secret = sec("s");
  key.serial = 3;
  key.gamma_inv = 1;
  key.code_bits = 16;
  auto res = embed(rel, key);
  CHECK(res.marks.size() + res.skipped == rel.num_rows());
  CHECK(res.skipped == 0);  // power-of-two domains always carry the bit
  std::set<uint64_t> rows;
  for (const auto& m : res.marks) rows.insert(m.row);
  CHECK(rows.size() == res.marks.size());
}

TEST_CASE("embedding matches a hand enumeration of the selection rules") {
  auto rel = random_relation(10, {4, 8}, 17);
  FingerprintKey key;
  key.secret = sec("enumerate");
  key.serial = 12;
  key.gamma_inv = 2;
  key.code_bits = 8;
  auto code = generate_code(key.secret, key.serial, key.code_bits);
  auto res = embed(rel, key);

  size_t mark_at = 0;
  for (size_t i = 0; i < rel.num_rows(); ++i) {
    auto pk = rel.keys[i].bytes();
    if (prf_u(key.secret, pk, 1) % key.gamma_inv != 0) continue;
    uint32_t p = uint32_t(prf_u(key.secret, pk, 2) % rel.num_attrs());
    uint8_t x = uint8_t(prf_u(key.secret, pk, 3) % 2);
    uint32_t l = uint32_t(prf_u(key.secret, pk, 4) % key.code_bits);
    uint8_t m = x ^ code.bits[l];
    REQUIRE(mark_at < res.marks.size());
    const auto& mk = res.marks[mark_at++];
    CHECK(mk.row == i);
    CHECK(mk.attr == p);
    CHECK(mk.mask_bit == x);
    CHECK(mk.bit_index == l);
    CHECK(mk.mark_bit == m);
    CHECK((res.relation.rows[i][p] & 1u) == m);
  }
  CHECK(mark_at == res.marks.size());

  // Untouched cells are identical to the input.
  std::set<std::pair<uint64_t, uint32_t>> touched;
  for (const auto& m : res.marks) touched.insert({m.row, m.attr});
  for (size_t i = 0; i < rel.num_rows(); ++i)
    for (size_t p = 0; p < rel.num_attrs(); ++p)
      if (!touched.count({i, uint32_t(p)}))
        CHECK(res.relation.rows[i][p] == rel.rows[i][p]);
}

TEST_CASE("changed cells only move the addressed bit or its fallback") {
  auto rel = random_relation(500, {2, 3, 5, 8}, 23);
  FingerprintKey key;
  key.secret = sec("levels");
  key.serial = 2;
  key.gamma_inv = 3;
  key.code_bits = 32;
  for (uint32_t level : {1u, 2u}) {
    key.bit_level = level;
    auto res = embed(rel, key);
    uint32_t mask = 1u << (level - 1);
    for (const auto& m : res.marks) {
      uint32_t before = rel.rows[m.row][m.attr];
      uint32_t after = res.relation.rows[m.row][m.attr];
      uint32_t diff = before ^ after;
      CHECK((diff == 0 || diff == mask || after == before - mask));
      CHECK(((after >> (level - 1)) & 1u) == m.mark_bit);
    }
  }
}

TEST_CASE("cells that cannot represent the bit are skipped and counted") {
  auto rel = random_relation(400, {2, 2}, 31);
  FingerprintKey key;
  key.secret = sec("skip");
  key.serial = 1;
  key.gamma_inv = 2;
  key.code_bits = 16;
  key.bit_level = 2;  // a set bit 1 never fits in a two-value domain
  auto res = embed(rel, key);
  CHECK(res.skipped > 50);
  CHECK(!res.marks.empty());
  for (const auto& m : res.marks) CHECK(m.mark_bit == 0);  // only zeros fit
  CHECK(res.relation.rows == rel.rows);  // setting a clear bit to 0 is a no-op
}

TEST_CASE("marked fraction concentrates around one over gamma_inv") {
  auto rel = random_relation(20000, {4, 4}, 41);
  FingerprintKey key;
  key.secret = sec("fraction");
  key.serial = 5;
  key.gamma_inv = 35;
  key.code_bits = 64;
  auto res = embed(rel, key);
  double frac = double(res.marks.size()) / double(rel.num_rows());
  CHECK(frac > 0.5 / key.gamma_inv);
  CHECK(frac < 1.5 / key.gamma_inv);
}

TEST_CASE("insert then extract recovers the exact code across keys") {
  auto rel = random_relation(4000, {4, 6, 8}, 47);
  int successes = 0;
  for (uint64_t trial = 0; trial < 50; ++trial) {
    FingerprintKey key;
    key.secret = sec("roundtrip-" + std::to_string(trial));
    key.serial = trial;
    key.gamma_inv = 5;
    key.code_bits = 32;
    auto res = embed(rel, key);
    auto ext = extract(res.relation, key);
    std::vector<std::array<uint64_t, 2>> oracle_votes;
    auto oracle_code = oracle::extract_votes(res.relation, key, &oracle_votes);
    REQUIRE(ext.votes == oracle_votes);
    if (ext.code &&
        *ext.code == generate_code(key.secret, key.serial, key.code_bits))
      ++successes;
    if (ext.code) {
      REQUIRE(oracle_code.has_value());
      CHECK(*ext.code == *oracle_code);
    } else {
      CHECK_FALSE(oracle_code.has_value());
    }
  }
  CHECK(successes == 50);
}

TEST_CASE("extraction ignores record order") {
  auto rel = random_relation(1500, {4, 4}, 53);
  FingerprintKey key;
  key.secret = sec("order");
  key.serial = 9;
  key.gamma_inv = 4;
  key.code_bits = 16;
  auto res = embed(rel, key);
  auto ext1 = extract(res.relation, key);

  Relation shuffled = res.relation;
  std::mt19937_64 rng(99);
  for (size_t i = shuffled.num_rows(); i > 1; --i) {
    size_t j = rng() % i;
    std::swap(shuffled.keys[i - 1], shuffled.keys[j]);
    std::swap(shuffled.rows[i - 1], shuffled.rows[j]);
  }
  auto ext2 = extract(shuffled, key);
  REQUIRE(ext1.code.has_value());
  REQUIRE(ext2.code.has_value());
  CHECK(*ext1.code == *ext2.code);
  CHECK(ext1.votes == ext2.votes);
}

TEST_CASE("one flipped cell loses to a three-vote majority") {
  auto rel = random_relation(3000, {4, 4}, 59);
  FingerprintKey key;
  key.secret = sec("majority");
  key.serial = 4;
  key.gamma_inv = 4;
  key.code_bits = 8;  // ~750 marks over 8 bits: every bit has many votes
  auto res = embed(rel, key);
  auto clean = extract(res.relation, key);
  REQUIRE(clean.code.has_value());
  for (uint32_t l = 0; l < key.code_bits; ++l)
    REQUIRE(clean.votes[l][0] + clean.votes[l][1] >= 3);

  Relation tampered = res.relation;
  const auto& m = res.marks.front();
  tampered.rows[m.row][m.attr] = flip_lsb(tampered.rows[m.row][m.attr],
                                          tampered.schema[m.attr].cardinality);
  auto ext = extract(tampered, key);
  REQUIRE(ext.code.has_value());
  CHECK(*ext.code == *clean.code);
}

TEST_CASE("a zero-vote bit yields none suspected with full vote table") {
  auto rel = random_relation(6, {4, 4}, 61);
  FingerprintKey key;
  key.secret = sec("starve");
  key.serial = 8;
  key.gamma_inv = 2;
  key.code_bits = 64;  // 64 bits cannot all be hit by at most 6 marks
  auto res = embed(rel, key);
  auto ext = extract(res.relation, key);
  CHECK(ext.none_suspected());
  CHECK_FALSE(ext.code.has_value());
  REQUIRE(ext.votes.size() == key.code_bits);
  uint64_t total = 0;
  for (const auto& v : ext.votes) total += v[0] + v[1];
  CHECK(total == res.marks.size());
}

TEST_CASE("missing rows only remove votes") {
  auto rel = random_relation(2000, {4, 4}, 67);
  FingerprintKey key;
  key.secret = sec("subset");
  key.serial = 11;
  key.gamma_inv = 4;
  key.code_bits = 8;
  auto res = embed(rel, key);

  Relation half = res.relation;
  half.keys.resize(1000);
  half.rows.resize(1000);
  auto full = extract(res.relation, key);
  auto part = extract(half, key);
  REQUIRE(full.code.has_value());
  REQUIRE(part.code.has_value());
  CHECK(*part.code == *full.code);
  for (uint32_t l = 0; l < key.code_bits; ++l) {
    CHECK(part.votes[l][0] <= full.votes[l][0]);
    CHECK(part.votes[l][1] <= full.votes[l][1]);
  }
}

TEST_CASE("suspects rank by matches with serial tie break") {
  FingerprintCode target;
  target.bits = {1, 0, 1, 0};
  std::vector<std::pair<uint64_t, FingerprintCode>> cands;
  cands.push_back({30, FingerprintCode{{1, 0, 1, 0}}});  // 4 matches
  cands.push_back({10, FingerprintCode{{0, 1, 0, 1}}});  // 0 matches
  cands.push_back({20, FingerprintCode{{1, 0, 0, 1}}});  // 2 matches
  cands.push_back({5, FingerprintCode{{1, 1, 1, 1}}});   // 2 matches
  auto ranked = rank_suspects(target, cands);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].serial == 30);
  CHECK(ranked[0].matches == 4);
  CHECK(ranked[1].serial == 5);  // ties with serial 20, lower serial first
  CHECK(ranked[1].matches == 2);
  CHECK(ranked[2].serial == 20);
  CHECK(ranked[3].serial == 10);
  CHECK(ranked[3].matches == 0);
}

TEST_CASE("marks and keys survive json round trips") {
  std::vector<MarkedPosition> marks = {{3, 1, 1, 7, 0}, {9, 0, 0, 2, 1}};
  uint64_t skipped = 0;
  auto back = marks_from_json(marks_to_json(marks, 5), &skipped);
  CHECK(skipped == 5);
  REQUIRE(back.size() == 2);
  CHECK(back[1].row == 9);
  CHECK(back[1].bit_index == 2);
  CHECK(back[0].mask_bit == 1);

  FingerprintKey key;
  key.secret = sec("json");
  key.serial = 77;
  key.gamma_inv = 12;
  key.code_bits = 96;
  key.bit_level = 2;
  auto kb = FingerprintKey::from_json(key.to_json());
  CHECK(kb.secret == key.secret);
  CHECK(kb.serial == key.serial);
  CHECK(kb.gamma_inv == key.gamma_inv);
  CHECK(kb.code_bits == key.code_bits);
  CHECK(kb.bit_level == key.bit_level);
}
