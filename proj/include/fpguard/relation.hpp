#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fpguard/errors.hpp"

namespace fpguard {

enum class AttrKind { numeric, categorical };

// Schema entry for an encoded relation: values are codes in [0, cardinality).
struct AttributeSpec {
  std::string name;
  AttrKind kind = AttrKind::categorical;
  uint32_t cardinality = 0;
};

// Primary keys are either unsigned integers or text. The byte serialization
// feeds the record-selection PRF, so it is pinned: integers as 8 bytes
// big-endian, text as its UTF-8 bytes.
struct PrimaryKey {
  bool is_int = false;
  uint64_t num = 0;
  std::string text;

  static PrimaryKey parse(const std::string& field);
  std::vector<uint8_t> bytes() const;
  std::string str() const;
  bool operator==(const PrimaryKey&) const = default;
};

// Ingestion schema: declares the primary-key column and, per attribute, the
// kind plus the requested bucket count for numeric columns.
struct AttrConfig {
  std::string name;
  AttrKind kind = AttrKind::categorical;
  uint32_t buckets = 0;  // numeric only; >= 1
};

struct SchemaConfig {
  std::string pk_name;
  std::vector<AttrConfig> attributes;

  static SchemaConfig from_json(const std::string& json_text);
  std::string to_json() const;
};

// Raw CSV contents: text cells, column order normalized to the schema order.
struct RawTable {
  SchemaConfig schema;
  std::vector<PrimaryKey> keys;
  std::vector<std::vector<std::string>> cells;  // cells[row][attr]

  size_t rows() const { return keys.size(); }
};

// Integer-coded relation. rows[i][p] in [0, schema[p].cardinality).
struct Relation {
  std::string pk_name;
  std::vector<AttributeSpec> schema;
  std::vector<PrimaryKey> keys;
  std::vector<std::vector<uint32_t>> rows;

  size_t num_rows() const { return rows.size(); }
  size_t num_attrs() const { return schema.size(); }
  // Throws on code out of domain, shape mismatch, or duplicate names/keys.
  void validate() const;

  std::string schema_to_json() const;
  static std::vector<AttributeSpec> schema_from_json(const std::string& json_text,
                                                     std::string* pk_name);
};

// Per-attribute value coding fitted on a training table. Numeric attributes
// get equal-count bucket boundaries (strictly increasing, each bucket holding
// at least one training value); categorical attributes get codes in
// descending frequency order, ties broken lexicographically.
struct EncodingMap {
  struct NumericCoder {
    std::vector<double> boundaries;       // code(v) = #{b : v >= b}
    std::vector<double> representatives;  // smallest training value per bucket
  };
  struct CategoricalCoder {
    std::vector<std::string> instances;  // index == code
  };
  struct AttrCoder {
    std::string name;
    AttrKind kind;
    NumericCoder numeric;
    CategoricalCoder categorical;
    uint32_t cardinality() const;
  };

  std::vector<AttrCoder> attrs;

  std::string to_json() const;
  static EncodingMap from_json(const std::string& json_text);
};

// CSV ingestion. Header must contain the pk column and every schema
// attribute; extra columns are rejected as a schema mismatch.
RawTable parse_csv(std::istream& in, const SchemaConfig& schema);
RawTable parse_csv_file(const std::string& path, const SchemaConfig& schema);

EncodingMap fit_encoding(const RawTable& table);
Relation apply_encoding(const RawTable& table, const EncodingMap& map);

// Encoded-relation CSV round trip (integer codes, pk first column).
void write_csv(const Relation& rel, std::ostream& out);
void write_csv_file(const Relation& rel, const std::string& path);
Relation read_encoded_csv(std::istream& in, const std::string& pk_name,
                          const std::vector<AttributeSpec>& schema);
Relation read_encoded_csv_file(const std::string& csv_path,
                               const std::string& schema_json_path);

// Decode one code back to a representative raw value (training domain).
std::string decode_value(const EncodingMap::AttrCoder& coder, uint32_t code);

// Domain-safe least-significant-bit flip: v XOR 1, or v-1 when that leaves
// [0, k_p). Requires k_p >= 2; the result always differs from v.
uint32_t flip_lsb(uint32_t v, uint32_t k_p);

// Level-k bit flip: XOR bit (k-1); if out of domain, clear that bit instead,
// which can leave the value unchanged (reported via `changed`).
struct FlipResult {
  uint32_t value;
  bool changed;
};
FlipResult flip_lksb(uint32_t v, uint32_t k, uint32_t k_p);

// Set bit (k-1) of v to bit_value, staying inside [0, k_p). Falls back to
// v - 2^(k-1) when setting the bit overflows the domain and that fallback
// carries the requested bit; returns nullopt when the bit cannot be
// represented at all (caller skips the cell).
std::optional<uint32_t> set_level_bit(uint32_t v, uint32_t k, uint32_t bit_value,
                                      uint32_t k_p);

}  // namespace fpguard
