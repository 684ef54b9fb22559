#include "fpguard/attacks.hpp"

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

namespace fpguard {

using nlohmann::json;

std::string AttackReport::to_json() const {
  json pos = json::array();
  for (const auto& [r, a] : changed_positions) pos.push_back({r, a});
  return json{{"per_chg", per_chg},
              {"rounds_executed", rounds_executed},
              {"changed_positions", pos}}
      .dump();
}

namespace {

double fraction_changed(size_t changed, const Relation& rel) {
  return double(changed) / (double(rel.num_rows()) * double(rel.num_attrs()));
}

}  // namespace

AttackOutcome random_flip_attack(const Relation& rel, double fraction,
                                 uint64_t seed) {
  if (fraction < 0 || fraction > 1)
    fail(Errc::invalid_argument, "fraction must be in [0,1]");
  AttackOutcome out;
  out.relation = rel;
  const size_t total = rel.num_rows() * rel.num_attrs();
  const size_t quota = size_t(fraction * double(total));

  std::vector<uint64_t> cells(total);
  for (size_t i = 0; i < total; ++i) cells[i] = i;
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < quota; ++i) {
    size_t j = i + size_t(rng() % (total - i));
    std::swap(cells[i], cells[j]);
  }
  for (size_t i = 0; i < quota; ++i) {
    uint32_t row = uint32_t(cells[i] / rel.num_attrs());
    uint32_t attr = uint32_t(cells[i] % rel.num_attrs());
    if (rel.schema[attr].cardinality < 2) continue;
    out.relation.rows[row][attr] =
        flip_lsb(out.relation.rows[row][attr], rel.schema[attr].cardinality);
    out.report.changed_positions.emplace_back(row, attr);
  }
  std::sort(out.report.changed_positions.begin(),
            out.report.changed_positions.end());
  out.report.per_chg = fraction_changed(out.report.changed_positions.size(), rel);
  out.report.rounds_executed = quota > 0 ? 1 : 0;
  return out;
}

AttackOutcome column_attack(const Relation& rel,
                            const JointDistributionSet& prior, double tau,
                            uint32_t rounds, uint64_t seed,
                            const RoundObserver& observer) {
  if (!(tau > 0)) fail(Errc::invalid_argument, "tau must be positive");
  if (rounds < 1) fail(Errc::invalid_argument, "need at least one round");
  for (size_t p = 0; p < rel.num_attrs(); ++p)
    if (prior.cards.size() != rel.num_attrs() ||
        prior.cards[p] != rel.schema[p].cardinality)
      fail(Errc::shape_error, "prior joints do not match the schema");

  AttackOutcome out;
  out.relation = rel;
  Relation& cur = out.relation;
  const size_t m = rel.num_rows();
  const uint32_t n_attrs = uint32_t(rel.num_attrs());
  std::mt19937_64 rng(seed);

  std::vector<char> flipped(m * n_attrs, 0);  // accumulated set Z
  std::vector<uint16_t> suspect(m * n_attrs);
  std::vector<uint32_t> tie_buf;

  for (uint32_t round = 1; round <= rounds; ++round) {
    JointDistributionSet now = joint_distributions(cur);
    std::fill(suspect.begin(), suspect.end(), 0);

    for (uint32_t p = 0; p + 1 < n_attrs; ++p) {
      for (uint32_t q = p + 1; q < n_attrs; ++q) {
        const uint32_t kp = prior.cards[p], kq = prior.cards[q];
        bool any = false;
        std::vector<char> hot(size_t(kp) * kq, 0);
        for (uint32_t a = 0; a < kp; ++a)
          for (uint32_t b = 0; b < kq; ++b)
            if (std::abs(prior.at(p, q, a, b) - now.at(p, q, a, b)) >= tau) {
              hot[size_t(a) * kq + b] = 1;
              any = true;
            }
        if (!any) continue;
        for (size_t i = 0; i < m; ++i) {
          if (hot[size_t(cur.rows[i][p]) * kq + cur.rows[i][q]]) {
            ++suspect[i * n_attrs + p];
            ++suspect[i * n_attrs + q];
          }
        }
      }
    }

    uint64_t flips_this_round = 0;
    for (size_t i = 0; i < m; ++i) {
      uint16_t best = 0;
      for (uint32_t p = 0; p < n_attrs; ++p)
        best = std::max(best, suspect[i * n_attrs + p]);
      if (best == 0) continue;
      tie_buf.clear();
      for (uint32_t p = 0; p < n_attrs; ++p)
        if (suspect[i * n_attrs + p] == best) tie_buf.push_back(p);
      uint32_t target =
          tie_buf.size() == 1 ? tie_buf[0] : tie_buf[rng() % tie_buf.size()];
      if (flipped[i * n_attrs + target]) continue;
      if (rel.schema[target].cardinality < 2) continue;
      cur.rows[i][target] =
          flip_lsb(cur.rows[i][target], rel.schema[target].cardinality);
      flipped[i * n_attrs + target] = 1;
      out.report.changed_positions.emplace_back(uint32_t(i), target);
      ++flips_this_round;
    }

    if (flips_this_round == 0) break;
    out.report.rounds_executed = round;
    if (observer) observer(round, cur);
  }

  std::sort(out.report.changed_positions.begin(),
            out.report.changed_positions.end());
  out.report.per_chg = fraction_changed(out.report.changed_positions.size(), rel);
  return out;
}

AttackOutcome row_attack(const Relation& rel, const StatRelationSet& prior,
                         double tau) {
  if (!(tau > 0)) fail(Errc::invalid_argument, "tau must be positive");
  StatRelationSet now = stat_relations(rel, prior.comm);
  std::vector<double> e = row_discrepancies(prior, now);

  AttackOutcome out;
  out.relation = rel;
  for (size_t i = 0; i < e.size(); ++i) {
    if (e[i] < tau) continue;
    for (uint32_t p = 0; p < rel.num_attrs(); ++p) {
      if (rel.schema[p].cardinality < 2) continue;
      out.relation.rows[i][p] =
          flip_lsb(out.relation.rows[i][p], rel.schema[p].cardinality);
      out.report.changed_positions.emplace_back(uint32_t(i), p);
    }
  }
  out.report.per_chg = fraction_changed(out.report.changed_positions.size(), rel);
  out.report.rounds_executed = out.report.changed_positions.empty() ? 0 : 1;
  return out;
}

AttackOutcome integrated_attack(const Relation& rel,
                                const StatRelationSet& s_prior,
                                const JointDistributionSet& j_prior,
                                double tau_row, double tau_col, uint32_t rounds,
                                uint64_t seed, const RoundObserver& observer) {
  AttackOutcome first = row_attack(rel, s_prior, tau_row);
  AttackOutcome second =
      column_attack(first.relation, j_prior, tau_col, rounds, seed, observer);

  AttackOutcome out;
  out.relation = std::move(second.relation);
  auto& pos = out.report.changed_positions;
  pos = std::move(first.report.changed_positions);
  pos.insert(pos.end(), second.report.changed_positions.begin(),
             second.report.changed_positions.end());
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  out.report.per_chg = fraction_changed(pos.size(), rel);
  out.report.rounds_executed = second.report.rounds_executed;
  return out;
}

}  // namespace fpguard
