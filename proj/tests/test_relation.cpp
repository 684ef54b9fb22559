#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "fpguard/relation.hpp"
#include "oracles.hpp"

using namespace fpguard;

namespace {

SchemaConfig demo_schema() {
  SchemaConfig sc;
  sc.pk_name = "id";
  sc.attributes = {{"age", AttrKind::numeric, 4},
                   {"job", AttrKind::categorical, 0}};
  return sc;
}

RawTable parse(const std::string& csv, const SchemaConfig& sc) {
  std::istringstream in(csv);
  return parse_csv(in, sc);
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io_error;
}

std::filesystem::path tmp_path(const std::string& stem) {
  return std::filesystem::temp_directory_path() /
         ("fpguard_test_" + stem + "_" + std::to_string(::getpid()));
}

}  // namespace

TEST_CASE("csv columns are matched by header name, not position") {
  auto t = parse("job,id,age\nclerk,7,41\nnurse,3,28\n", demo_schema());
  REQUIRE(t.rows() == 2);
  CHECK(t.keys[0].is_int);
  CHECK(t.keys[0].num == 7);
  CHECK(t.cells[0][0] == "41");
  CHECK(t.cells[0][1] == "clerk");
  CHECK(t.cells[1][0] == "28");
}

TEST_CASE("csv shape errors carry precise codes") {
  auto sc = demo_schema();
  CHECK(code_of([&] { parse("id,age\n1,2\n", sc); }) == Errc::schema_mismatch);
  CHECK(code_of([&] { parse("id,age,job,extra\n1,2,c,d\n", sc); }) ==
        Errc::schema_mismatch);
  CHECK(code_of([&] { parse("id,age,job\n1,41\n", sc); }) ==
        Errc::malformed_row);
  CHECK(code_of([&] { parse("id,age,job\n1,41,c\n1,39,d\n", sc); }) ==
        Errc::duplicate_key);
  CHECK(code_of([&] { parse("", sc); }) == Errc::malformed_row);
}

TEST_CASE("numeric codes match the equal-count oracle") {
  std::mt19937_64 rng(11);
  for (uint32_t buckets : {2u, 3u, 4u, 7u}) {
    std::vector<double> values;
    for (int i = 0; i < 200; ++i)
      values.push_back(double(rng() % 50));  // plenty of ties

    std::ostringstream csv;
    csv << "id,age,job\n";
    for (size_t i = 0; i < values.size(); ++i)
      csv << i << "," << values[i] << ",x\n";
    SchemaConfig sc = demo_schema();
    sc.attributes[0].buckets = buckets;
    auto table = parse(csv.str(), sc);
    auto enc = fit_encoding(table);
    auto rel = apply_encoding(table, enc);

    auto expect = oracle::quantile_codes(values, buckets);
    for (size_t i = 0; i < values.size(); ++i)
      CHECK(rel.rows[i][0] == expect[i]);
    CHECK(rel.schema[0].cardinality == enc.attrs[0].cardinality());

    // Representatives decode to the smallest training value of each bucket.
    for (uint32_t c = 0; c < enc.attrs[0].cardinality(); ++c) {
      double rep = std::stod(decode_value(enc.attrs[0], c));
      double smallest = 1e18;
      for (size_t i = 0; i < values.size(); ++i)
        if (expect[i] == c) smallest = std::min(smallest, values[i]);
      CHECK(rep == doctest::Approx(smallest));
    }
  }
}

TEST_CASE("tied numeric columns collapse buckets instead of splitting ties") {
  auto t = parse("id,age,job\n1,5,a\n2,5,a\n3,5,a\n4,5,a\n", demo_schema());
  auto enc = fit_encoding(t);
  auto rel = apply_encoding(t, enc);
  CHECK(enc.attrs[0].cardinality() == 1);
  for (const auto& row : rel.rows) CHECK(row[0] == 0);
}

TEST_CASE("categorical codes run most-frequent first, ties lexicographic") {
  auto t = parse(
      "id,age,job\n1,1,nurse\n2,1,clerk\n3,1,nurse\n4,1,smith\n5,1,clerk\n",
      demo_schema());
  auto enc = fit_encoding(t);
  const auto& inst = enc.attrs[1].categorical.instances;
  REQUIRE(inst.size() == 3);
  CHECK(inst[0] == "clerk");  // 2 occurrences, ties with nurse, lex first
  CHECK(inst[1] == "nurse");
  CHECK(inst[2] == "smith");
  auto rel = apply_encoding(t, enc);
  CHECK(rel.rows[0][1] == 1);
  CHECK(rel.rows[1][1] == 0);
  CHECK(rel.rows[3][1] == 2);
  CHECK(decode_value(enc.attrs[1], 0) == "clerk");
}

TEST_CASE("applying an encoding to unseen instances fails loudly") {
  auto sc = demo_schema();
  auto train = parse("id,age,job\n1,10,a\n2,20,b\n", sc);
  auto enc = fit_encoding(train);
  auto fresh = parse("id,age,job\n3,15,zzz\n", sc);
  CHECK(code_of([&] { apply_encoding(fresh, enc); }) == Errc::unknown_instance);

  auto bad_number = parse("id,age,job\n3,not-a-number,a\n", sc);
  CHECK(code_of([&] { apply_encoding(bad_number, enc); }) == Errc::encode_error);
}

TEST_CASE("encoded relation round trips through csv and schema files") {
  auto t = parse("id,age,job\n9,10,a\n4,20,b\n7,30,a\n", demo_schema());
  auto rel = apply_encoding(t, fit_encoding(t));

  auto csv = tmp_path("rel.csv");
  auto schema = tmp_path("rel.schema.json");
  write_csv_file(rel, csv.string());
  {
    std::ofstream out(schema);
    out << rel.schema_to_json();
  }
  Relation back = read_encoded_csv_file(csv.string(), schema.string());
  CHECK(back.pk_name == rel.pk_name);
  CHECK(back.keys == rel.keys);
  CHECK(back.rows == rel.rows);
  CHECK(back.schema.size() == rel.schema.size());
  std::filesystem::remove(csv);
  std::filesystem::remove(schema);
}

TEST_CASE("encoding map survives json serialization") {
  auto t = parse("id,age,job\n1,10,a\n2,20,b\n3,30,a\n4,40,c\n", demo_schema());
  auto enc = fit_encoding(t);
  auto back = EncodingMap::from_json(enc.to_json());
  REQUIRE(back.attrs.size() == enc.attrs.size());
  CHECK(back.attrs[0].numeric.boundaries == enc.attrs[0].numeric.boundaries);
  CHECK(back.attrs[0].numeric.representatives ==
        enc.attrs[0].numeric.representatives);
  CHECK(back.attrs[1].categorical.instances ==
        enc.attrs[1].categorical.instances);
}

TEST_CASE("validate rejects out-of-domain codes and duplicate keys") {
  Relation rel;
  rel.pk_name = "id";
  rel.schema = {{"a", AttrKind::categorical, 2}};
  rel.keys = {PrimaryKey{true, 1, {}}, PrimaryKey{true, 2, {}}};
  rel.rows = {{0}, {1}};
  CHECK_NOTHROW(rel.validate());

  rel.rows[1][0] = 2;
  CHECK(code_of([&] { rel.validate(); }) == Errc::shape_error);
  rel.rows[1][0] = 1;
  rel.keys[1] = rel.keys[0];
  CHECK(code_of([&] { rel.validate(); }) == Errc::duplicate_key);
}

TEST_CASE("flip_lsb stays in domain and never no-ops") {
  for (uint32_t k_p = 2; k_p <= 9; ++k_p)
    for (uint32_t v = 0; v < k_p; ++v) {
      uint32_t f = flip_lsb(v, k_p);
      CHECK(f < k_p);
      CHECK(f != v);
      // XOR preferred, decrement only at the top of an odd domain.
      if ((v ^ 1u) < k_p)
        CHECK(f == (v ^ 1u));
      else
        CHECK(f == v - 1);
    }
  CHECK(code_of([] { flip_lsb(0, 1); }) == Errc::no_flip_possible);
  CHECK(code_of([] { flip_lsb(5, 4); }) == Errc::invalid_argument);
}

TEST_CASE("flip_lksb falls back to clearing the bit") {
  auto r = flip_lksb(1, 2, 5);  // 1 xor 2 = 3 < 5
  CHECK(r.value == 3);
  CHECK(r.changed);
  r = flip_lksb(3, 2, 5);  // 3 xor 2 = 1
  CHECK(r.value == 1);
  r = flip_lksb(4, 1, 5);  // 4 xor 1 = 5, out of domain; clear bit 0: no-op
  CHECK(r.value == 4);
  CHECK_FALSE(r.changed);
  r = flip_lksb(2, 2, 3);  // 2 xor 2 = 0
  CHECK(r.value == 0);
  CHECK(r.changed);
}

TEST_CASE("set_level_bit honors the domain or skips") {
  // Plain set within domain.
  CHECK(*set_level_bit(0, 1, 1, 4) == 1);
  CHECK(*set_level_bit(3, 2, 0, 4) == 1);
  CHECK(*set_level_bit(2, 2, 1, 4) == 2);  // already set

  // Overflow with a valid fallback: v - mask keeps the requested bit.
  CHECK(*set_level_bit(2, 1, 1, 3) == 1);  // 2|1=3 out; 2-1=1 has bit0=1

  // Overflow with no representation: skip.
  CHECK_FALSE(set_level_bit(1, 2, 1, 3).has_value());  // 1|2=3 out; 1-2<0

  // Whenever a value comes back it is in domain with the requested bit.
  for (uint32_t k_p = 2; k_p <= 17; ++k_p)
    for (uint32_t k = 1; k <= 5; ++k)
      for (uint32_t v = 0; v < k_p; ++v)
        for (uint32_t bit : {0u, 1u}) {
          auto out = set_level_bit(v, k, bit, k_p);
          if (!out) continue;
          CHECK(*out < k_p);
          CHECK(((*out >> (k - 1)) & 1u) == bit);
        }
}

TEST_CASE("primary keys keep integer and text identities distinct") {
  auto a = PrimaryKey::parse("42");
  auto b = PrimaryKey::parse("fortytwo");
  CHECK(a.is_int);
  CHECK_FALSE(b.is_int);
  CHECK(a.bytes().size() == 8);
  CHECK(b.bytes() == std::vector<uint8_t>({'f', 'o', 'r', 't', 'y', 't', 'w',
                                           'o'}));
  CHECK(a.str() == "42");
}
