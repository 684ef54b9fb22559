#include "fpguard/correlations.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

namespace fpguard {

using nlohmann::json;

size_t JointDistributionSet::pair_index(uint32_t p, uint32_t q) const {
  if (p > q) std::swap(p, q);
  if (p == q || q >= cards.size())
    fail(Errc::invalid_argument, "bad attribute pair");
  // Index into the p<q enumeration ordered by (p, q).
  size_t n = cards.size();
  return size_t(p) * n - size_t(p) * (p + 1) / 2 + (q - p - 1);
}

double JointDistributionSet::at(uint32_t p, uint32_t q, uint32_t a,
                                uint32_t b) const {
  bool swapped = p > q;
  if (swapped) {
    std::swap(p, q);
    std::swap(a, b);
  }
  const auto& m = mats[pair_index(p, q)];
  if (a >= cards[p] || b >= cards[q])
    fail(Errc::invalid_argument, "joint cell out of domain");
  return m[size_t(a) * cards[q] + b];
}

JointDistributionSet joint_distributions(const Relation& rel) {
  if (rel.num_attrs() < 2)
    fail(Errc::invalid_argument, "need at least two attributes");
  if (rel.num_rows() == 0) fail(Errc::invalid_argument, "empty relation");
  JointDistributionSet out;
  for (const auto& a : rel.schema) {
    out.attr_names.push_back(a.name);
    out.cards.push_back(a.cardinality);
  }
  const double inv_m = 1.0 / double(rel.num_rows());
  for (uint32_t p = 0; p + 1 < rel.num_attrs(); ++p) {
    for (uint32_t q = p + 1; q < rel.num_attrs(); ++q) {
      std::vector<double> m(size_t(out.cards[p]) * out.cards[q], 0.0);
      for (const auto& row : rel.rows)
        m[size_t(row[p]) * out.cards[q] + row[q]] += inv_m;
      out.mats.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<double> marginal(const JointDistributionSet& joints, uint32_t p) {
  if (p >= joints.num_attrs())
    fail(Errc::invalid_argument, "attribute index out of range");
  if (joints.num_attrs() < 2)
    fail(Errc::inconsistent_joint_set, "no partner to marginalize against");
  std::vector<double> result;
  bool first = true;
  for (uint32_t q = 0; q < joints.num_attrs(); ++q) {
    if (q == p) continue;
    std::vector<double> marg(joints.cards[p], 0.0);
    for (uint32_t a = 0; a < joints.cards[p]; ++a)
      for (uint32_t b = 0; b < joints.cards[q]; ++b)
        marg[a] += joints.at(p, q, a, b);
    if (first) {
      result = std::move(marg);
      first = false;
    } else {
      for (uint32_t a = 0; a < joints.cards[p]; ++a)
        if (std::abs(marg[a] - result[a]) > 1e-9)
          fail(Errc::inconsistent_joint_set,
               "marginals disagree across partners of attribute " +
                   joints.attr_names[p]);
    }
  }
  return result;
}

double pearson_from_joint(const JointDistributionSet& joints, uint32_t p,
                          uint32_t q) {
  if (p == q) fail(Errc::invalid_argument, "need two distinct attributes");
  double mu_p = 0, mu_q = 0;
  for (uint32_t a = 0; a < joints.cards[p]; ++a)
    for (uint32_t b = 0; b < joints.cards[q]; ++b) {
      double w = joints.at(p, q, a, b);
      mu_p += w * a;
      mu_q += w * b;
    }
  double var_p = 0, var_q = 0, cov = 0;
  for (uint32_t a = 0; a < joints.cards[p]; ++a)
    for (uint32_t b = 0; b < joints.cards[q]; ++b) {
      double w = joints.at(p, q, a, b);
      var_p += w * (a - mu_p) * (a - mu_p);
      var_q += w * (b - mu_q) * (b - mu_q);
      cov += w * (a - mu_p) * (b - mu_q);
    }
  if (var_p <= 0.0 || var_q <= 0.0)
    fail(Errc::degenerate_attribute, "constant attribute has no correlation");
  return cov / std::sqrt(var_p * var_q);
}

std::string JointDistributionSet::to_json() const {
  json pairs = json::array();
  for (uint32_t p = 0; p + 1 < num_attrs(); ++p)
    for (uint32_t q = p + 1; q < num_attrs(); ++q)
      pairs.push_back({{"p", p}, {"q", q}, {"matrix", mats[pair_index(p, q)]}});
  return json{{"attributes", attr_names}, {"cardinalities", cards},
              {"pairs", pairs}}
      .dump();
}

JointDistributionSet JointDistributionSet::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("joints json: ") + e.what());
  }
  JointDistributionSet out;
  out.attr_names = j.at("attributes").get<std::vector<std::string>>();
  out.cards = j.at("cardinalities").get<std::vector<uint32_t>>();
  size_t n = out.cards.size();
  out.mats.assign(n * (n - 1) / 2, {});
  for (const auto& e : j.at("pairs")) {
    uint32_t p = e.at("p").get<uint32_t>();
    uint32_t q = e.at("q").get<uint32_t>();
    auto m = e.at("matrix").get<std::vector<double>>();
    if (p >= q || q >= n || m.size() != size_t(out.cards[p]) * out.cards[q])
      fail(Errc::invalid_argument, "joints json: bad pair entry");
    out.mats[out.pair_index(p, q)] = std::move(m);
  }
  for (const auto& m : out.mats)
    if (m.empty()) fail(Errc::invalid_argument, "joints json: missing pair");
  return out;
}

std::vector<std::vector<uint32_t>> CommunityAssignment::groups() const {
  std::vector<std::vector<uint32_t>> out(count);
  for (uint32_t i = 0; i < membership.size(); ++i) {
    if (membership[i] >= count)
      fail(Errc::invalid_argument, "membership out of range");
    out[membership[i]].push_back(i);
  }
  return out;
}

std::string CommunityAssignment::to_json() const {
  return json{{"count", count}, {"membership", membership}}.dump();
}

CommunityAssignment CommunityAssignment::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("communities json: ") + e.what());
  }
  CommunityAssignment out;
  out.count = j.at("count").get<uint32_t>();
  out.membership = j.at("membership").get<std::vector<uint32_t>>();
  for (uint32_t m : out.membership)
    if (m >= out.count) fail(Errc::invalid_argument, "membership out of range");
  return out;
}

namespace {

double sq_dist(const std::vector<uint32_t>& row, const std::vector<double>& center) {
  double d = 0;
  for (size_t p = 0; p < row.size(); ++p) {
    double diff = double(row[p]) - center[p];
    d += diff * diff;
  }
  return d;
}

struct KmeansRun {
  std::vector<uint32_t> assign;
  double sse = 0;
};

KmeansRun lloyd(const Relation& rel, uint32_t c, uint64_t seed) {
  const size_t m = rel.num_rows();
  const size_t d = rel.num_attrs();
  std::mt19937_64 rng(seed);

  std::vector<std::vector<double>> centers;
  centers.reserve(c);
  {
    size_t first = size_t(rng() % m);
    centers.emplace_back(rel.rows[first].begin(), rel.rows[first].end());
    std::vector<double> nearest(m, std::numeric_limits<double>::max());
    while (centers.size() < c) {
      size_t best = 0;
      double best_d = -1;
      for (size_t i = 0; i < m; ++i) {
        nearest[i] = std::min(nearest[i], sq_dist(rel.rows[i], centers.back()));
        if (nearest[i] > best_d) {
          best_d = nearest[i];
          best = i;
        }
      }
      centers.emplace_back(rel.rows[best].begin(), rel.rows[best].end());
    }
  }

  std::vector<uint32_t> assign(m, 0);
  std::vector<size_t> sizes(c, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool moved = false;
    for (size_t i = 0; i < m; ++i) {
      uint32_t best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (uint32_t k = 0; k < c; ++k) {
        double dist = sq_dist(rel.rows[i], centers[k]);
        if (dist < best_d) {
          best_d = dist;
          best = k;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        moved = true;
      }
    }
    std::fill(sizes.begin(), sizes.end(), 0);
    for (uint32_t a : assign) ++sizes[a];

    // Re-seed any emptied cluster with the farthest member of the largest one.
    for (uint32_t k = 0; k < c; ++k) {
      if (sizes[k] > 0) continue;
      uint32_t largest = uint32_t(std::max_element(sizes.begin(), sizes.end()) -
                                  sizes.begin());
      size_t far_i = 0;
      double far_d = -1;
      for (size_t i = 0; i < m; ++i) {
        if (assign[i] != largest) continue;
        double dist = sq_dist(rel.rows[i], centers[largest]);
        if (dist > far_d) {
          far_d = dist;
          far_i = i;
        }
      }
      assign[far_i] = k;
      --sizes[largest];
      ++sizes[k];
      moved = true;
    }

    for (uint32_t k = 0; k < c; ++k) {
      std::fill(centers[k].begin(), centers[k].end(), 0.0);
    }
    for (size_t i = 0; i < m; ++i)
      for (size_t p = 0; p < d; ++p) centers[assign[i]][p] += rel.rows[i][p];
    for (uint32_t k = 0; k < c; ++k)
      if (sizes[k] > 0)
        for (size_t p = 0; p < d; ++p) centers[k][p] /= double(sizes[k]);

    if (!moved) break;
  }

  KmeansRun run;
  run.assign = std::move(assign);
  for (size_t i = 0; i < m; ++i)
    run.sse += sq_dist(rel.rows[i], centers[run.assign[i]]);
  return run;
}

}  // namespace

CommunityAssignment kmeans_communities(const Relation& rel, uint32_t c,
                                       uint64_t seed) {
  if (c < 1) fail(Errc::invalid_argument, "need at least one community");
  if (c > rel.num_rows())
    fail(Errc::too_many_communities, "more communities than rows");
  CommunityAssignment out;
  out.count = c;
  out.membership = lloyd(rel, c, seed).assign;
  return out;
}

BicResult bic_select_c(const Relation& rel, uint32_t c_min, uint32_t c_max,
                       uint64_t seed) {
  if (c_min < 1 || c_min > c_max)
    fail(Errc::invalid_argument, "bad community range");
  if (c_max > rel.num_rows())
    fail(Errc::too_many_communities, "more communities than rows");
  const double m = double(rel.num_rows());
  const double d = double(rel.num_attrs());
  BicResult result;
  double best = std::numeric_limits<double>::max();
  for (uint32_t c = c_min; c <= c_max; ++c) {
    double sse = lloyd(rel, c, seed).sse;
    double bic = m * d * std::log(std::max(sse, 1e-12) / (m * d)) +
                 double(c) * d * std::log(m);
    result.scores.push_back({c, bic});
    if (bic < best) {
      best = bic;
      result.chosen = c;
    }
  }
  return result;
}

namespace {

uint32_t neq_bytes(uint64_t x, uint64_t y) {
  uint64_t z = x ^ y;
  uint64_t t = (z | ((z & 0x7f7f7f7f7f7f7f7full) + 0x7f7f7f7f7f7f7f7full)) &
               0x8080808080808080ull;
  return uint32_t(std::popcount(t));
}

}  // namespace

uint32_t StatRelationSet::hamming(size_t i, size_t j) const {
  if (!snapshot) fail(Errc::invalid_argument, "no row snapshot");
  if (packed_usable)
    return neq_bytes(packed[i][0], packed[j][0]) +
           neq_bytes(packed[i][1], packed[j][1]);
  uint32_t d = 0;
  for (size_t p = 0; p < n_attrs; ++p) d += uint32_t(rows[i][p] != rows[j][p]);
  return d;
}

double StatRelationSet::s(size_t i, size_t j) const {
  if (i == j) fail(Errc::invalid_argument, "self-similarity is not defined");
  if (comm.membership.at(i) != comm.membership.at(j))
    fail(Errc::invalid_argument, "rows are in different communities");
  if (snapshot) return std::exp(-double(hamming(i, j)));
  uint64_t a = std::min(i, j), b = std::max(i, j);
  const auto& map = edges[comm.membership[i]];
  auto it = map.find((a << 32) | b);
  if (it == map.end())
    fail(Errc::invalid_argument, "pair missing from similarity set");
  return it->second;
}

StatRelationSet stat_relations(const Relation& rel,
                               const CommunityAssignment& comm) {
  if (comm.membership.size() != rel.num_rows())
    fail(Errc::shape_error, "community assignment does not cover the relation");
  StatRelationSet out;
  out.comm = comm;
  out.n_attrs = uint32_t(rel.num_attrs());
  out.snapshot = true;
  out.rows = rel.rows;
  out.packed_usable = rel.num_attrs() <= 16;
  if (out.packed_usable)
    for (const auto& a : rel.schema)
      if (a.cardinality > 256) out.packed_usable = false;
  if (out.packed_usable) {
    out.packed.assign(rel.num_rows(), {0, 0});
    for (size_t i = 0; i < rel.num_rows(); ++i)
      for (size_t p = 0; p < rel.num_attrs(); ++p) {
        // Code 256 still fits: only equality matters, and the slot is unique.
        uint64_t byte = uint64_t(rel.rows[i][p] & 0xff);
        out.packed[i][p / 8] |= byte << (8 * (p % 8));
      }
  }
  return out;
}

std::string StatRelationSet::to_json() const {
  auto groups = comm.groups();
  uint64_t pairs = 0;
  for (const auto& g : groups) pairs += uint64_t(g.size()) * (g.size() - 1) / 2;
  if (pairs > 20'000'000)
    fail(Errc::invalid_argument,
         "similarity set too large to serialize as an edge list");
  json comms = json::array();
  for (uint32_t c = 0; c < comm.count; ++c) {
    json edges_json = json::array();
    const auto& g = groups[c];
    for (size_t a = 0; a < g.size(); ++a)
      for (size_t b = a + 1; b < g.size(); ++b)
        edges_json.push_back({g[a], g[b], s(g[a], g[b])});
    comms.push_back({{"community", c}, {"rows", g}, {"edges", edges_json}});
  }
  return json{{"count", comm.count},
              {"num_rows", comm.membership.size()},
              {"num_attrs", n_attrs},
              {"communities", comms}}
      .dump();
}

StatRelationSet StatRelationSet::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("similarity json: ") + e.what());
  }
  StatRelationSet out;
  out.comm.count = j.at("count").get<uint32_t>();
  out.comm.membership.assign(j.at("num_rows").get<size_t>(), 0);
  out.n_attrs = j.value("num_attrs", 0u);
  out.snapshot = false;
  out.edges.resize(out.comm.count);
  for (const auto& c : j.at("communities")) {
    uint32_t cid = c.at("community").get<uint32_t>();
    if (cid >= out.comm.count) fail(Errc::invalid_argument, "bad community id");
    for (const auto& r : c.at("rows"))
      out.comm.membership.at(r.get<size_t>()) = cid;
    for (const auto& e : c.at("edges")) {
      uint64_t a = e.at(0).get<uint64_t>();
      uint64_t b = e.at(1).get<uint64_t>();
      if (a > b) std::swap(a, b);
      out.edges[cid][(a << 32) | b] = e.at(2).get<double>();
    }
  }
  return out;
}

namespace {

void check_compatible(const StatRelationSet& a, const StatRelationSet& b) {
  if (a.comm.membership != b.comm.membership)
    fail(Errc::shape_error, "similarity sets use different communities");
  if (a.n_attrs != b.n_attrs)
    fail(Errc::shape_error, "similarity sets use different attribute counts");
}

// |e^-d1 - e^-d2| lookup for packed snapshots (hamming <= 16).
struct ExpDiffTable {
  double diff[17][17];
  double val[17];
  ExpDiffTable() {
    for (int i = 0; i <= 16; ++i) val[i] = std::exp(-double(i));
    for (int i = 0; i <= 16; ++i)
      for (int j = 0; j <= 16; ++j) diff[i][j] = std::abs(val[i] - val[j]);
  }
};
const ExpDiffTable& exp_table() {
  static ExpDiffTable t;
  return t;
}

template <typename PairFn>
void for_each_pair(const StatRelationSet& prior, const StatRelationSet& current,
                   PairFn&& fn) {
  auto groups = prior.comm.groups();
  const bool fast = prior.snapshot && current.snapshot &&
                    prior.packed_usable && current.packed_usable;
  const auto& tbl = exp_table();
  for (const auto& g : groups) {
    for (size_t a = 0; a < g.size(); ++a) {
      for (size_t b = a + 1; b < g.size(); ++b) {
        size_t i = g[a], j = g[b];
        double d;
        if (fast) {
          d = tbl.diff[prior.hamming(i, j)][current.hamming(i, j)];
        } else {
          d = std::abs(prior.s(i, j) - current.s(i, j));
        }
        fn(i, j, d);
      }
    }
  }
}

}  // namespace

std::vector<double> row_discrepancies(const StatRelationSet& prior,
                                      const StatRelationSet& current) {
  check_compatible(prior, current);
  std::vector<double> e(prior.comm.membership.size(), 0.0);
  for_each_pair(prior, current, [&](size_t i, size_t j, double d) {
    e[i] += d;
    e[j] += d;
  });
  return e;
}

PairDiffStats stat_pair_violations(const StatRelationSet& prior,
                                   const StatRelationSet& current, double tau) {
  check_compatible(prior, current);
  PairDiffStats stats;
  for_each_pair(prior, current, [&](size_t, size_t, double d) {
    stats.ordered_pairs += 2;
    if (d >= tau) stats.ordered_violations += 2;
  });
  return stats;
}

}  // namespace fpguard
