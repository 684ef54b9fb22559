#include "fpguard/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace fpguard {

using nlohmann::json;

std::string SynthSpec::to_json() const {
  json attrs = json::array();
  for (const auto& a : attributes)
    attrs.push_back({{"name", a.name}, {"cardinality", a.cardinality}});
  return json{{"n_rows", n_rows},
              {"attributes", attrs},
              {"clusters", clusters},
              {"adherence", adherence}}
      .dump();
}

SynthSpec SynthSpec::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("synth spec: ") + e.what());
  }
  SynthSpec spec;
  spec.n_rows = j.at("n_rows").get<uint32_t>();
  for (const auto& a : j.at("attributes")) {
    AttributeSpec attr;
    attr.name = a.at("name").get<std::string>();
    attr.kind = AttrKind::categorical;
    attr.cardinality = a.at("cardinality").get<uint32_t>();
    spec.attributes.push_back(std::move(attr));
  }
  spec.clusters = j.value("clusters", 4u);
  spec.adherence = j.value("adherence", 0.6);
  return spec;
}

SynthSpec make_synth_spec(uint32_t n_rows,
                          const std::vector<uint32_t>& cardinalities,
                          uint32_t clusters, double adherence) {
  SynthSpec spec;
  spec.n_rows = n_rows;
  spec.clusters = clusters;
  spec.adherence = adherence;
  for (size_t p = 0; p < cardinalities.size(); ++p) {
    AttributeSpec attr;
    attr.name = "a" + std::to_string(p);
    attr.kind = AttrKind::categorical;
    attr.cardinality = cardinalities[p];
    spec.attributes.push_back(std::move(attr));
  }
  return spec;
}

namespace {

double unit_real(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

}  // namespace

Relation synth_relation(const SynthSpec& spec, uint64_t seed) {
  if (spec.n_rows < 1) fail(Errc::invalid_argument, "need at least one row");
  if (spec.attributes.empty())
    fail(Errc::invalid_argument, "need at least one attribute");
  if (spec.clusters < 1)
    fail(Errc::invalid_argument, "need at least one cluster");
  if (spec.adherence < 0 || spec.adherence > 1)
    fail(Errc::invalid_argument, "adherence must be in [0,1]");
  for (const auto& a : spec.attributes)
    if (a.cardinality < 1)
      fail(Errc::invalid_argument, "attribute cardinality must be positive");

  const size_t n_attrs = spec.attributes.size();
  std::mt19937_64 rng(seed);

  std::vector<std::vector<uint32_t>> pref(spec.clusters,
                                          std::vector<uint32_t>(n_attrs));
  for (uint32_t g = 0; g < spec.clusters; ++g)
    for (size_t p = 0; p < n_attrs; ++p)
      pref[g][p] = uint32_t(rng() % spec.attributes[p].cardinality);

  Relation rel;
  rel.pk_name = "id";
  rel.schema = spec.attributes;
  rel.rows.assign(spec.n_rows, std::vector<uint32_t>(n_attrs));
  rel.keys.reserve(spec.n_rows);
  for (uint32_t i = 0; i < spec.n_rows; ++i) {
    rel.keys.push_back(PrimaryKey{true, i, {}});
    uint32_t g = uint32_t(rng() % spec.clusters);
    for (size_t p = 0; p < n_attrs; ++p) {
      if (unit_real(rng) < spec.adherence)
        rel.rows[i][p] = pref[g][p];
      else
        rel.rows[i][p] = uint32_t(rng() % spec.attributes[p].cardinality);
    }
  }

  // Relabel so code order is frequency order, as the encoder would emit.
  for (size_t p = 0; p < n_attrs; ++p) {
    const uint32_t k = spec.attributes[p].cardinality;
    std::vector<uint64_t> count(k, 0);
    for (const auto& row : rel.rows) ++count[row[p]];
    std::vector<uint32_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return count[a] > count[b]; });
    std::vector<uint32_t> relabel(k);
    for (uint32_t rank = 0; rank < k; ++rank) relabel[order[rank]] = rank;
    for (auto& row : rel.rows) row[p] = relabel[row[p]];
  }

  rel.validate();
  return rel;
}

}  // namespace fpguard
