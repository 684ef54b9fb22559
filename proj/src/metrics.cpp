#include "fpguard/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace fpguard {

using nlohmann::json;

uint32_t num_cmp(const FingerprintCode& embedded,
                 const FingerprintCode& extracted) {
  if (embedded.size() != extracted.size())
    fail(Errc::shape_error, "code lengths differ");
  uint32_t diffs = 0;
  for (size_t l = 0; l < embedded.size(); ++l)
    diffs += embedded.bits[l] != extracted.bits[l];
  return diffs;
}

std::string RobustnessReport::to_json() const {
  json j{{"num_cmp", num_cmp}, {"m0", m0},
         {"uniquely_accusable", uniquely_accusable}};
  if (!uniquely_accusable) j["t"] = t;
  return j.dump();
}

RobustnessReport accusable_rank(const FingerprintCode& extracted,
                                const FingerprintCode& malicious,
                                const std::vector<FingerprintCode>& innocents) {
  RobustnessReport report;
  report.num_cmp = num_cmp(malicious, extracted);
  report.m0 = uint32_t(malicious.size()) - report.num_cmp;
  uint32_t at_least = 0;
  for (const auto& code : innocents) {
    uint32_t matches = uint32_t(code.size()) - num_cmp(code, extracted);
    if (matches >= report.m0) ++at_least;
  }
  if (at_least == 0) {
    report.uniquely_accusable = true;
  } else {
    report.t = double(at_least) / double(innocents.size());
  }
  return report;
}

namespace {

void check_same_shape(const Relation& a, const Relation& b) {
  if (a.num_rows() != b.num_rows() || a.num_attrs() != b.num_attrs())
    fail(Errc::shape_error, "relations have different shapes");
  if (a.keys != b.keys)
    fail(Errc::shape_error, "relations have different keys");
}

}  // namespace

double accuracy(const Relation& pirated, const Relation& original) {
  check_same_shape(pirated, original);
  uint64_t diffs = 0;
  for (size_t i = 0; i < original.num_rows(); ++i)
    for (size_t p = 0; p < original.num_attrs(); ++p)
      diffs += pirated.rows[i][p] != original.rows[i][p];
  return 1.0 - double(diffs) /
                   (double(original.num_rows()) * double(original.num_attrs()));
}

double p_col(const Relation& pirated, const Relation& original,
             double tau_col) {
  if (!(tau_col > 0)) fail(Errc::invalid_argument, "tau must be positive");
  check_same_shape(pirated, original);
  JointDistributionSet now = joint_distributions(pirated);
  JointDistributionSet ref = joint_distributions(original);
  uint64_t cells = 0, kept = 0;
  for (uint32_t p = 0; p + 1 < ref.num_attrs(); ++p)
    for (uint32_t q = p + 1; q < ref.num_attrs(); ++q)
      for (uint32_t a = 0; a < ref.cards[p]; ++a)
        for (uint32_t b = 0; b < ref.cards[q]; ++b) {
          cells += 2;
          if (std::abs(now.at(p, q, a, b) - ref.at(p, q, a, b)) < tau_col)
            kept += 2;
        }
  return double(kept) / double(cells);
}

double p_row(const Relation& pirated, const Relation& original,
             const CommunityAssignment& comm, double tau_row) {
  if (!(tau_row > 0)) fail(Errc::invalid_argument, "tau must be positive");
  check_same_shape(pirated, original);
  StatRelationSet ref = stat_relations(original, comm);
  StatRelationSet now = stat_relations(pirated, comm);
  PairDiffStats stats = stat_pair_violations(ref, now, tau_row);
  if (stats.ordered_pairs == 0) return 1.0;
  return double(stats.ordered_pairs - stats.ordered_violations) /
         double(stats.ordered_pairs);
}

double p_cov(const Relation& pirated, const Relation& original) {
  check_same_shape(pirated, original);
  const size_t n = original.num_attrs();
  const double m = double(original.num_rows());
  std::vector<double> ref(n * n, 0.0), now(n * n, 0.0);
  for (size_t i = 0; i < original.num_rows(); ++i)
    for (size_t p = 0; p < n; ++p)
      for (size_t q = 0; q < n; ++q) {
        ref[p * n + q] += double(original.rows[i][p]) * original.rows[i][q];
        now[p * n + q] += double(pirated.rows[i][p]) * pirated.rows[i][q];
      }
  double base = 0, gap = 0;
  for (size_t i = 0; i < n * n; ++i) {
    double r = ref[i] / m, c = now[i] / m;
    base += r * r;
    gap += (c - r) * (c - r);
  }
  if (base == 0)
    fail(Errc::degenerate_baseline, "original covariance norm is zero");
  return 1.0 - std::sqrt(gap) / std::sqrt(base);
}

namespace {

uint32_t attr_index(const Relation& rel, const std::string& name) {
  for (uint32_t p = 0; p < rel.num_attrs(); ++p)
    if (rel.schema[p].name == name) return p;
  fail(Errc::schema_mismatch, "unknown attribute " + name);
}

double eval_query(const Relation& rel, const StatQuery& query, uint32_t p) {
  const double m = double(rel.num_rows());
  if (query.kind == StatQuery::Kind::frequency_at_least) {
    uint64_t hits = 0;
    for (const auto& row : rel.rows) hits += row[p] >= query.threshold;
    return double(hits) / m;
  }
  double mean = 0;
  for (const auto& row : rel.rows) mean += row[p];
  mean /= m;
  double var = 0;
  for (const auto& row : rel.rows) var += (row[p] - mean) * (row[p] - mean);
  return std::sqrt(var / m);
}

}  // namespace

std::vector<StatDelta> stat_utilities(const Relation& pirated,
                                      const Relation& original,
                                      const std::vector<StatQuery>& queries) {
  check_same_shape(pirated, original);
  std::vector<StatDelta> out;
  for (const auto& query : queries) {
    uint32_t p = attr_index(original, query.attribute);
    StatDelta d;
    if (query.kind == StatQuery::Kind::frequency_at_least)
      d.name = "freq(" + query.attribute + ">=" +
               std::to_string(query.threshold) + ")";
    else
      d.name = "stddev(" + query.attribute + ")";
    d.original = eval_query(original, query, p);
    d.pirated = eval_query(pirated, query, p);
    d.delta = std::abs(d.pirated - d.original);
    out.push_back(std::move(d));
  }
  return out;
}

double conf_gain_col(double tau, double gamma_ratio, uint32_t n_attrs,
                     double freq, const std::vector<uint32_t>& partner_cards) {
  if (!(tau > 0) || n_attrs < 1)
    fail(Errc::invalid_argument, "tau and attribute count must be positive");
  if (!(gamma_ratio > 0) || gamma_ratio >= 1)
    fail(Errc::invalid_argument, "gamma_ratio must be in (0,1)");
  if (!(freq > 0)) fail(Errc::degenerate_frequency, "zero value frequency");
  const double rate = gamma_ratio / double(n_attrs);
  double base = tau / (rate * 2.0 * freq);
  base = std::clamp(base, 0.0, 1.0);
  double prod = 1.0;
  for (uint32_t k : partner_cards) prod *= std::pow(base, double(k));
  return (1.0 - prod) / (rate * freq);
}

double conf_gain_row(double tau, double gamma_ratio, uint32_t n_c) {
  if (tau < 0) fail(Errc::invalid_argument, "tau must be nonnegative");
  if (!(gamma_ratio > 0) || gamma_ratio >= 1)
    fail(Errc::invalid_argument, "gamma_ratio must be in (0,1)");
  if (n_c < 1) fail(Errc::invalid_argument, "community must be nonempty");
  const uint32_t n = n_c - 1;
  const double p = 2.0 * gamma_ratio - gamma_ratio * gamma_ratio;
  const double q = 1.0 - gamma_ratio;
  const uint64_t cap = std::min(uint64_t(tau), uint64_t(n));
  double sum = 0.0, binom = 1.0;
  for (uint64_t j = 0; j <= cap; ++j) {
    if (j > 0) binom *= double(n - j + 1) / double(j);
    sum += binom * std::pow(p, double(j)) * std::pow(q, 2.0 * double(n - j));
  }
  return (1.0 - sum) / gamma_ratio;
}

}  // namespace fpguard
