#include "fpguard/relation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace fpguard {

using nlohmann::json;

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::io_error: return "io_error";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::duplicate_key: return "duplicate_key";
    case Errc::schema_mismatch: return "schema_mismatch";
    case Errc::malformed_row: return "malformed_row";
    case Errc::encode_error: return "encode_error";
    case Errc::unknown_instance: return "unknown_instance";
    case Errc::no_flip_possible: return "no_flip_possible";
    case Errc::inconsistent_joint_set: return "inconsistent_joint_set";
    case Errc::degenerate_attribute: return "degenerate_attribute";
    case Errc::too_many_communities: return "too_many_communities";
    case Errc::empty_candidates: return "empty_candidates";
    case Errc::shape_error: return "shape_error";
    case Errc::degenerate_baseline: return "degenerate_baseline";
    case Errc::degenerate_frequency: return "degenerate_frequency";
    case Errc::constraint_violation: return "constraint_violation";
  }
  return "unknown";
}

PrimaryKey PrimaryKey::parse(const std::string& field) {
  PrimaryKey pk;
  pk.text = field;
  if (!field.empty() && field.find_first_not_of("0123456789") == std::string::npos) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec == std::errc() && ptr == field.data() + field.size()) {
      pk.is_int = true;
      pk.num = v;
      return pk;
    }
  }
  return pk;
}

std::vector<uint8_t> PrimaryKey::bytes() const {
  if (is_int) {
    std::vector<uint8_t> out(8);
    for (int i = 0; i < 8; ++i) out[i] = uint8_t(num >> (56 - 8 * i));
    return out;
  }
  return {text.begin(), text.end()};
}

std::string PrimaryKey::str() const {
  return is_int ? std::to_string(num) : text;
}

static AttrKind kind_from_string(const std::string& s) {
  if (s == "numeric") return AttrKind::numeric;
  if (s == "categorical") return AttrKind::categorical;
  fail(Errc::schema_mismatch, "unknown attribute kind: " + s);
}

static const char* kind_to_string(AttrKind k) {
  return k == AttrKind::numeric ? "numeric" : "categorical";
}

SchemaConfig SchemaConfig::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::schema_mismatch, std::string("schema json: ") + e.what());
  }
  SchemaConfig cfg;
  if (!j.contains("primary_key") || !j.contains("attributes"))
    fail(Errc::schema_mismatch, "schema json needs primary_key and attributes");
  cfg.pk_name = j["primary_key"].get<std::string>();
  for (const auto& a : j["attributes"]) {
    AttrConfig ac;
    ac.name = a.at("name").get<std::string>();
    ac.kind = kind_from_string(a.at("kind").get<std::string>());
    ac.buckets = a.value("buckets", 0u);
    if (ac.kind == AttrKind::numeric && ac.buckets < 1)
      fail(Errc::schema_mismatch, "numeric attribute " + ac.name + " needs buckets >= 1");
    cfg.attributes.push_back(std::move(ac));
  }
  std::set<std::string> names{cfg.pk_name};
  for (const auto& a : cfg.attributes)
    if (!names.insert(a.name).second)
      fail(Errc::schema_mismatch, "duplicate column name: " + a.name);
  return cfg;
}

std::string SchemaConfig::to_json() const {
  json attrs = json::array();
  for (const auto& a : attributes) {
    json e{{"name", a.name}, {"kind", kind_to_string(a.kind)}};
    if (a.kind == AttrKind::numeric) e["buckets"] = a.buckets;
    attrs.push_back(std::move(e));
  }
  return json{{"primary_key", pk_name}, {"attributes", attrs}}.dump(2);
}

void Relation::validate() const {
  if (keys.size() != rows.size())
    fail(Errc::shape_error, "key/row count mismatch");
  std::set<std::string> names{pk_name};
  for (const auto& a : schema) {
    if (a.cardinality < 1)
      fail(Errc::shape_error, "attribute " + a.name + " has zero cardinality");
    if (!names.insert(a.name).second)
      fail(Errc::shape_error, "duplicate attribute name: " + a.name);
  }
  std::unordered_set<std::string> seen;
  seen.reserve(keys.size());
  for (const auto& k : keys)
    if (!seen.insert(k.str()).second)
      fail(Errc::duplicate_key, "duplicate primary key: " + k.str());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != schema.size())
      fail(Errc::shape_error, "row " + std::to_string(i) + " arity mismatch");
    for (size_t p = 0; p < schema.size(); ++p)
      if (rows[i][p] >= schema[p].cardinality)
        fail(Errc::shape_error, "row " + std::to_string(i) + " attribute " +
                                    schema[p].name + " code out of domain");
  }
}

std::string Relation::schema_to_json() const {
  json attrs = json::array();
  for (const auto& a : schema)
    attrs.push_back({{"name", a.name},
                     {"kind", kind_to_string(a.kind)},
                     {"cardinality", a.cardinality}});
  return json{{"primary_key", pk_name}, {"attributes", attrs}}.dump(2);
}

std::vector<AttributeSpec> Relation::schema_from_json(const std::string& json_text,
                                                      std::string* pk_name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::schema_mismatch, std::string("schema json: ") + e.what());
  }
  if (pk_name) *pk_name = j.value("primary_key", "id");
  std::vector<AttributeSpec> out;
  for (const auto& a : j.at("attributes")) {
    AttributeSpec spec;
    spec.name = a.at("name").get<std::string>();
    spec.kind = kind_from_string(a.value("kind", "categorical"));
    spec.cardinality = a.at("cardinality").get<uint32_t>();
    if (spec.cardinality < 1)
      fail(Errc::schema_mismatch, "attribute " + spec.name + " has zero cardinality");
    out.push_back(std::move(spec));
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

RawTable parse_csv(std::istream& in, const SchemaConfig& schema) {
  std::string line;
  if (!std::getline(in, line))
    fail(Errc::malformed_row, "empty csv: missing header");
  auto header = split_csv_line(line);

  std::unordered_map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i)
    if (!col.emplace(header[i], i).second)
      fail(Errc::schema_mismatch, "duplicate csv column: " + header[i]);

  auto require = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end())
      fail(Errc::schema_mismatch, "csv missing column: " + name);
    return it->second;
  };
  size_t pk_col = require(schema.pk_name);
  std::vector<size_t> attr_cols;
  for (const auto& a : schema.attributes) attr_cols.push_back(require(a.name));
  if (header.size() != schema.attributes.size() + 1)
    fail(Errc::schema_mismatch, "csv has columns not in the schema");

  RawTable table;
  table.schema = schema;
  std::unordered_set<std::string> seen;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      fail(Errc::malformed_row,
           "line " + std::to_string(line_no) + ": expected " +
               std::to_string(header.size()) + " fields, got " +
               std::to_string(fields.size()));
    PrimaryKey pk = PrimaryKey::parse(fields[pk_col]);
    if (!seen.insert(pk.str()).second)
      fail(Errc::duplicate_key, "duplicate primary key: " + pk.str());
    std::vector<std::string> row;
    row.reserve(attr_cols.size());
    for (size_t c : attr_cols) row.push_back(fields[c]);
    table.keys.push_back(std::move(pk));
    table.cells.push_back(std::move(row));
  }
  return table;
}

RawTable parse_csv_file(const std::string& path, const SchemaConfig& schema) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  return parse_csv(in, schema);
}

namespace {

double parse_number(const std::string& s, const std::string& attr) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Errc::encode_error, "attribute " + attr + ": not numeric: '" + s + "'");
  }
}

}  // namespace

uint32_t EncodingMap::AttrCoder::cardinality() const {
  return kind == AttrKind::numeric ? uint32_t(numeric.boundaries.size() + 1)
                                   : uint32_t(categorical.instances.size());
}

EncodingMap fit_encoding(const RawTable& table) {
  if (table.rows() == 0)
    fail(Errc::encode_error, "cannot fit an encoding on an empty table");
  EncodingMap map;
  const size_t n = table.rows();
  for (size_t p = 0; p < table.schema.attributes.size(); ++p) {
    const auto& cfg = table.schema.attributes[p];
    EncodingMap::AttrCoder coder;
    coder.name = cfg.name;
    coder.kind = cfg.kind;
    if (cfg.kind == AttrKind::numeric) {
      std::vector<double> vals(n);
      for (size_t i = 0; i < n; ++i)
        vals[i] = parse_number(table.cells[i][p], cfg.name);
      std::sort(vals.begin(), vals.end());
      // Equal-count cuts; a cut inside a run of equal values collapses, so
      // boundaries stay strictly increasing and every bucket is inhabited.
      std::vector<double> bounds;
      for (uint32_t b = 1; b < cfg.buckets; ++b) {
        size_t idx = size_t(uint64_t(b) * n / cfg.buckets);
        if (idx == 0 || idx >= n) continue;
        if (vals[idx - 1] < vals[idx]) {
          double mid = vals[idx - 1] + (vals[idx] - vals[idx - 1]) / 2.0;
          if (bounds.empty() || mid > bounds.back()) bounds.push_back(mid);
        }
      }
      coder.numeric.boundaries = bounds;
      // Smallest training value per bucket; vals is sorted, one forward pass.
      coder.numeric.representatives.assign(bounds.size() + 1, vals.back());
      size_t code = 0;
      for (double v : vals) {
        while (code < bounds.size() && v >= bounds[code]) ++code;
        if (coder.numeric.representatives[code] > v)
          coder.numeric.representatives[code] = v;
      }
    } else {
      std::map<std::string, uint64_t> freq;
      for (size_t i = 0; i < n; ++i) ++freq[table.cells[i][p]];
      std::vector<std::pair<std::string, uint64_t>> order(freq.begin(), freq.end());
      std::stable_sort(order.begin(), order.end(),
                       [](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return a.first < b.first;
                       });
      for (auto& [inst, cnt] : order)
        coder.categorical.instances.push_back(inst);
    }
    map.attrs.push_back(std::move(coder));
  }
  return map;
}

Relation apply_encoding(const RawTable& table, const EncodingMap& map) {
  if (map.attrs.size() != table.schema.attributes.size())
    fail(Errc::schema_mismatch, "encoding map does not match schema");
  Relation rel;
  rel.pk_name = table.schema.pk_name;
  for (const auto& coder : map.attrs)
    rel.schema.push_back({coder.name, coder.kind, coder.cardinality()});
  rel.keys = table.keys;
  rel.rows.reserve(table.rows());
  for (size_t i = 0; i < table.rows(); ++i) {
    std::vector<uint32_t> row(map.attrs.size());
    for (size_t p = 0; p < map.attrs.size(); ++p) {
      const auto& coder = map.attrs[p];
      const std::string& cell = table.cells[i][p];
      if (coder.kind == AttrKind::numeric) {
        double v = parse_number(cell, coder.name);
        uint32_t code = 0;
        for (double b : coder.numeric.boundaries) {
          if (v >= b) ++code;
          else break;
        }
        row[p] = code;
      } else {
        const auto& inst = coder.categorical.instances;
        auto it = std::find(inst.begin(), inst.end(), cell);
        if (it == inst.end())
          fail(Errc::unknown_instance,
               "attribute " + coder.name + ": unknown instance '" + cell + "'");
        row[p] = uint32_t(it - inst.begin());
      }
    }
    rel.rows.push_back(std::move(row));
  }
  return rel;
}

std::string decode_value(const EncodingMap::AttrCoder& coder, uint32_t code) {
  if (code >= coder.cardinality())
    fail(Errc::invalid_argument, "code out of domain for " + coder.name);
  if (coder.kind == AttrKind::numeric) {
    std::ostringstream os;
    os << coder.numeric.representatives[code];
    return os.str();
  }
  return coder.categorical.instances[code];
}

std::string EncodingMap::to_json() const {
  json out = json::array();
  for (const auto& a : attrs) {
    json e{{"name", a.name}, {"kind", kind_to_string(a.kind)}};
    if (a.kind == AttrKind::numeric) {
      e["boundaries"] = a.numeric.boundaries;
      e["representatives"] = a.numeric.representatives;
    } else {
      e["instances"] = a.categorical.instances;
    }
    out.push_back(std::move(e));
  }
  return json{{"attributes", out}}.dump(2);
}

EncodingMap EncodingMap::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::schema_mismatch, std::string("encoding json: ") + e.what());
  }
  EncodingMap map;
  for (const auto& a : j.at("attributes")) {
    EncodingMap::AttrCoder coder;
    coder.name = a.at("name").get<std::string>();
    coder.kind = kind_from_string(a.at("kind").get<std::string>());
    if (coder.kind == AttrKind::numeric) {
      coder.numeric.boundaries = a.at("boundaries").get<std::vector<double>>();
      coder.numeric.representatives =
          a.at("representatives").get<std::vector<double>>();
      for (size_t i = 1; i < coder.numeric.boundaries.size(); ++i)
        if (coder.numeric.boundaries[i] <= coder.numeric.boundaries[i - 1])
          fail(Errc::schema_mismatch, "boundaries not strictly increasing");
    } else {
      coder.categorical.instances = a.at("instances").get<std::vector<std::string>>();
    }
    map.attrs.push_back(std::move(coder));
  }
  return map;
}

void write_csv(const Relation& rel, std::ostream& out) {
  out << rel.pk_name;
  for (const auto& a : rel.schema) out << ',' << a.name;
  out << '\n';
  for (size_t i = 0; i < rel.num_rows(); ++i) {
    out << rel.keys[i].str();
    for (uint32_t v : rel.rows[i]) out << ',' << v;
    out << '\n';
  }
}

void write_csv_file(const Relation& rel, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  write_csv(rel, out);
  if (!out.flush()) fail(Errc::io_error, "short write to " + path);
}

Relation read_encoded_csv(std::istream& in, const std::string& pk_name,
                          const std::vector<AttributeSpec>& schema) {
  SchemaConfig cfg;
  cfg.pk_name = pk_name;
  for (const auto& a : schema)
    cfg.attributes.push_back({a.name, AttrKind::categorical, 0});
  RawTable raw = parse_csv(in, cfg);

  Relation rel;
  rel.pk_name = pk_name;
  rel.schema = schema;
  rel.keys = raw.keys;
  rel.rows.reserve(raw.rows());
  for (size_t i = 0; i < raw.rows(); ++i) {
    std::vector<uint32_t> row(schema.size());
    for (size_t p = 0; p < schema.size(); ++p) {
      const std::string& cell = raw.cells[i][p];
      uint32_t v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        fail(Errc::malformed_row, "row " + std::to_string(i) + " attribute " +
                                      schema[p].name + ": not a code: '" + cell + "'");
      if (v >= schema[p].cardinality)
        fail(Errc::shape_error, "row " + std::to_string(i) + " attribute " +
                                    schema[p].name + ": code out of domain");
      row[p] = v;
    }
    rel.rows.push_back(std::move(row));
  }
  return rel;
}

Relation read_encoded_csv_file(const std::string& csv_path,
                               const std::string& schema_json_path) {
  std::ifstream sj(schema_json_path);
  if (!sj) fail(Errc::io_error, "cannot open " + schema_json_path);
  std::stringstream buf;
  buf << sj.rdbuf();
  std::string pk_name;
  auto schema = Relation::schema_from_json(buf.str(), &pk_name);
  std::ifstream in(csv_path);
  if (!in) fail(Errc::io_error, "cannot open " + csv_path);
  return read_encoded_csv(in, pk_name, schema);
}

uint32_t flip_lsb(uint32_t v, uint32_t k_p) {
  if (k_p < 2)
    fail(Errc::no_flip_possible, "attribute domain has a single value");
  if (v >= k_p) fail(Errc::invalid_argument, "value out of domain");
  uint32_t w = v ^ 1u;
  return w < k_p ? w : v - 1;
}

FlipResult flip_lksb(uint32_t v, uint32_t k, uint32_t k_p) {
  if (k_p < 2)
    fail(Errc::no_flip_possible, "attribute domain has a single value");
  if (v >= k_p) fail(Errc::invalid_argument, "value out of domain");
  if (k < 1 || k > 31) fail(Errc::invalid_argument, "bit level out of range");
  uint32_t mask = 1u << (k - 1);
  uint32_t w = v ^ mask;
  if (w < k_p) return {w, true};
  w = v & ~mask;
  return {w, w != v};
}

std::optional<uint32_t> set_level_bit(uint32_t v, uint32_t k, uint32_t bit_value,
                                      uint32_t k_p) {
  if (v >= k_p) fail(Errc::invalid_argument, "value out of domain");
  if (k < 1 || k > 31) fail(Errc::invalid_argument, "bit level out of range");
  uint32_t mask = 1u << (k - 1);
  uint32_t w = (v & ~mask) | (bit_value ? mask : 0u);
  if (w < k_p) return w;
  // Setting the bit overflowed; v - mask keeps bit (k-1) at 1 whenever it is
  // non-negative with that bit clear in v (for the LSB this is the classic
  // v - 1 fallback, which preserves the requested parity).
  if (v >= mask) {
    uint32_t w2 = v - mask;
    if (((w2 >> (k - 1)) & 1u) == bit_value) return w2;
  }
  return std::nullopt;
}

}  // namespace fpguard
