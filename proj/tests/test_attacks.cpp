#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "fpguard/attacks.hpp"
#include "oracles.hpp"

using namespace fpguard;

namespace {

Relation make_rel(const std::vector<uint32_t>& cards,
                  const std::vector<std::vector<uint32_t>>& rows) {
  Relation rel;
  rel.pk_name = "id";
  for (size_t p = 0; p < cards.size(); ++p)
    rel.schema.push_back({"a" + std::to_string(p), AttrKind::categorical,
                          cards[p]});
  for (size_t i = 0; i < rows.size(); ++i) {
    rel.keys.push_back(PrimaryKey{true, i + 1, {}});
    rel.rows.push_back(rows[i]);
  }
  return rel;
}

Relation random_rel(size_t n, const std::vector<uint32_t>& cards,
                    std::mt19937_64& rng) {
  std::vector<std::vector<uint32_t>> rows(n);
  for (auto& r : rows)
    for (uint32_t c : cards) r.push_back(uint32_t(rng() % c));
  return make_rel(cards, rows);
}

// Leak scenario: the prior is computed on the original, the attacked copy
// carries a few edits.
Relation perturb(const Relation& rel, size_t edits, std::mt19937_64& rng) {
  Relation out = rel;
  for (size_t e = 0; e < edits; ++e) {
    size_t i = rng() % out.num_rows();
    size_t p = rng() % out.num_attrs();
    out.rows[i][p] = uint32_t(rng() % out.schema[p].cardinality);
  }
  return out;
}

CommunityAssignment one_community(size_t n) {
  CommunityAssignment comm;
  comm.count = 1;
  comm.membership.assign(n, 0);
  return comm;
}

}  // namespace

TEST_CASE("random flips hit the exact quota and reproduce") {
  std::mt19937_64 rng(3);
  auto rel = random_rel(4, {4, 4, 4, 4}, rng);
  auto out = random_flip_attack(rel, 0.25, 9);
  CHECK(out.report.changed_positions.size() == 4);
  CHECK(out.report.per_chg == doctest::Approx(0.25));
  CHECK(out.report.rounds_executed == 1);
  size_t diffs = 0;
  for (size_t i = 0; i < 4; ++i)
    for (size_t p = 0; p < 4; ++p) diffs += out.relation.rows[i][p] != rel.rows[i][p];
  CHECK(diffs == 4);
  out.relation.validate();
  CHECK(out.relation.keys == rel.keys);

  auto again = random_flip_attack(rel, 0.25, 9);
  CHECK(again.relation.rows == out.relation.rows);
  CHECK(again.report.changed_positions == out.report.changed_positions);

  auto zero = random_flip_attack(rel, 0.0, 9);
  CHECK(zero.relation.rows == rel.rows);
  CHECK(zero.report.changed_positions.empty());
  CHECK(zero.report.per_chg == 0.0);
  CHECK(zero.report.rounds_executed == 0);
}

TEST_CASE("full-fraction flip changes every flippable cell") {
  std::mt19937_64 rng(5);
  auto rel = random_rel(12, {4, 2, 1, 6}, rng);  // third attribute is constant
  auto out = random_flip_attack(rel, 1.0, 21);
  for (size_t i = 0; i < rel.num_rows(); ++i)
    for (size_t p = 0; p < rel.num_attrs(); ++p) {
      if (rel.schema[p].cardinality < 2)
        CHECK(out.relation.rows[i][p] == rel.rows[i][p]);
      else
        CHECK(out.relation.rows[i][p] != rel.rows[i][p]);
    }
  CHECK(out.report.changed_positions.size() == 12 * 3);
}

TEST_CASE("column attack stands down without a discrepancy") {
  std::mt19937_64 rng(7);
  auto rel = random_rel(30, {3, 4}, rng);
  auto prior = joint_distributions(rel);

  auto exact = column_attack(rel, prior, 1e-4, 5, 11);
  CHECK(exact.relation.rows == rel.rows);
  CHECK(exact.report.changed_positions.empty());
  CHECK(exact.report.rounds_executed == 0);

  auto leaked = perturb(rel, 6, rng);
  auto unreachable = column_attack(leaked, prior, 2.0, 5, 11);
  CHECK(unreachable.relation.rows == leaked.rows);
  CHECK(unreachable.report.rounds_executed == 0);
}

TEST_CASE("column attack matches the line-by-line oracle on small cases") {
  std::mt19937_64 rng(13);
  for (int c = 0; c < 100; ++c) {
    size_t m = 4 + rng() % 5;
    size_t n_attrs = 2 + rng() % 2;
    std::vector<uint32_t> cards;
    for (size_t p = 0; p < n_attrs; ++p) cards.push_back(2 + rng() % 3);
    auto original = random_rel(m, cards, rng);
    auto leaked = perturb(original, 1 + rng() % 3, rng);
    auto prior = joint_distributions(original);
    // Offset keeps tau off the 1/M probability lattice so both sides of the
    // >= comparison see the same outcome despite summation-order ulps.
    double tau = (double(rng() % 3) + 0.37) / double(m);
    uint32_t rounds = 1 + rng() % 4;
    uint64_t seed = rng();

    auto got = column_attack(leaked, prior, tau, rounds, seed);
    auto want = oracle::column_attack(leaked, prior, tau, rounds, seed);
    CHECK(got.relation.rows == want.relation.rows);
    CHECK(got.report.changed_positions == want.changed);
    CHECK(got.report.rounds_executed == want.rounds);
    got.relation.validate();
  }
}

TEST_CASE("column attack never flips a cell twice and stops when done") {
  std::mt19937_64 rng(17);
  auto original = random_rel(60, {2, 3, 4}, rng);
  auto leaked = perturb(original, 12, rng);
  auto prior = joint_distributions(original);

  std::vector<size_t> flips_by_round;
  auto observer = [&](uint32_t round, const Relation& cur) {
    CHECK(round == flips_by_round.size() + 1);
    size_t diffs = 0;
    for (size_t i = 0; i < cur.num_rows(); ++i)
      for (size_t p = 0; p < cur.num_attrs(); ++p)
        diffs += cur.rows[i][p] != leaked.rows[i][p];
    flips_by_round.push_back(diffs);
  };
  auto out = column_attack(leaked, prior, 0.37 / 60.0, 50, 23, observer);

  std::set<std::pair<uint32_t, uint32_t>> unique(
      out.report.changed_positions.begin(), out.report.changed_positions.end());
  CHECK(unique.size() == out.report.changed_positions.size());
  CHECK(out.report.rounds_executed == flips_by_round.size());
  CHECK(out.report.rounds_executed < 50);  // converged before the cap
  for (size_t r = 1; r < flips_by_round.size(); ++r)
    CHECK(flips_by_round[r] > flips_by_round[r - 1]);
  CHECK(out.report.per_chg ==
        doctest::Approx(double(out.report.changed_positions.size()) /
                        double(60 * 3)));

  // Re-running with the cap at the converged count reproduces the output.
  auto capped = column_attack(leaked, prior, 0.37 / 60.0, out.report.rounds_executed,
                              23);
  CHECK(capped.relation.rows == out.relation.rows);
}

TEST_CASE("row attack flags the dispersed record, not its partners") {
  // Prior: three records pairwise two apart, every similarity e^-2. The
  // leaked copy moves record 0 one further step from each partner, so
  // e_0 = 2(e^-2 - e^-3) ~ 0.171 while each partner only accrues ~ 0.086.
  auto prior_rel = make_rel({4, 4, 4}, {{0, 0, 0}, {0, 1, 1}, {0, 2, 2}});
  auto leaked = make_rel({4, 4, 4}, {{3, 0, 0}, {0, 1, 1}, {0, 2, 2}});
  auto comm = one_community(3);
  auto prior = stat_relations(prior_rel, comm);

  auto out = row_attack(leaked, prior, 0.1);
  REQUIRE(out.report.changed_positions.size() == 3);
  CHECK(out.report.changed_positions[0] == std::pair<uint32_t, uint32_t>{0, 0});
  CHECK(out.report.changed_positions[1] == std::pair<uint32_t, uint32_t>{0, 1});
  CHECK(out.report.changed_positions[2] == std::pair<uint32_t, uint32_t>{0, 2});
  CHECK(out.relation.rows[0] == std::vector<uint32_t>{2, 1, 1});
  CHECK(out.relation.rows[1] == leaked.rows[1]);
  CHECK(out.report.rounds_executed == 1);

  auto quiet = row_attack(leaked, prior, 3.0);  // above any reachable sum
  CHECK(quiet.relation.rows == leaked.rows);
  CHECK(quiet.report.rounds_executed == 0);

  auto self = row_attack(leaked, stat_relations(leaked, comm), 0.1);
  CHECK(self.relation.rows == leaked.rows);
}

TEST_CASE("row attack matches the line-by-line oracle on small cases") {
  std::mt19937_64 rng(19);
  for (int c = 0; c < 100; ++c) {
    size_t m = 4 + rng() % 5;
    size_t n_attrs = 2 + rng() % 2;
    std::vector<uint32_t> cards;
    for (size_t p = 0; p < n_attrs; ++p) cards.push_back(2 + rng() % 3);
    auto original = random_rel(m, cards, rng);
    auto leaked = perturb(original, 1 + rng() % 3, rng);
    CommunityAssignment comm;
    comm.count = 1 + uint32_t(rng() % 2);
    for (size_t i = 0; i < m; ++i)
      comm.membership.push_back(uint32_t(rng() % comm.count));
    auto prior = stat_relations(original, comm);
    // Discrepancies are sums of exp() differences; stay away from exact
    // achievable sums by drawing tau off any short rational grid.
    double tau = 0.05 + double(rng() % 400) / 1000.0;

    auto got = row_attack(leaked, prior, tau);
    auto want = oracle::row_attack(leaked, original, comm, tau);
    CHECK(got.relation.rows == want.relation.rows);
    CHECK(got.report.changed_positions == want.changed);
    CHECK(got.report.rounds_executed == want.rounds);
  }
}

TEST_CASE("integrated attack is the composition of row then column") {
  std::mt19937_64 rng(29);
  for (int c = 0; c < 20; ++c) {
    size_t m = 10 + rng() % 20;
    auto original = random_rel(m, {3, 4, 2}, rng);
    auto leaked = perturb(original, 4 + rng() % 4, rng);
    auto comm = one_community(m);
    auto s_prior = stat_relations(original, comm);
    auto j_prior = joint_distributions(original);
    double tau_row = 0.05 + double(rng() % 300) / 1000.0;
    double tau_col = (double(rng() % 2) + 0.37) / double(m);
    uint32_t rounds = 1 + rng() % 3;
    uint64_t seed = rng();

    auto integrated = integrated_attack(leaked, s_prior, j_prior, tau_row,
                                        tau_col, rounds, seed);
    auto row_stage = row_attack(leaked, s_prior, tau_row);
    auto col_stage = column_attack(row_stage.relation, j_prior, tau_col, rounds,
                                   seed);
    CHECK(integrated.relation.rows == col_stage.relation.rows);
    CHECK(integrated.report.rounds_executed == col_stage.report.rounds_executed);

    std::set<std::pair<uint32_t, uint32_t>> want(
        row_stage.report.changed_positions.begin(),
        row_stage.report.changed_positions.end());
    want.insert(col_stage.report.changed_positions.begin(),
                col_stage.report.changed_positions.end());
    std::vector<std::pair<uint32_t, uint32_t>> want_sorted(want.begin(),
                                                           want.end());
    CHECK(integrated.report.changed_positions == want_sorted);
    CHECK(integrated.report.per_chg ==
          doctest::Approx(double(want.size()) / double(m * 3)));
  }
}

TEST_CASE("integrated attack with exact priors and huge thresholds is identity") {
  std::mt19937_64 rng(31);
  auto rel = random_rel(25, {3, 3}, rng);
  auto comm = one_community(25);
  auto out = integrated_attack(rel, stat_relations(rel, comm),
                               joint_distributions(rel), 5.0, 2.0, 4, 7);
  CHECK(out.relation.rows == rel.rows);
  CHECK(out.report.changed_positions.empty());
  CHECK(out.report.per_chg == 0.0);
  CHECK(out.report.rounds_executed == 0);
}

TEST_CASE("attack reports serialize to json") {
  std::mt19937_64 rng(37);
  auto rel = random_rel(20, {4, 4}, rng);
  auto out = random_flip_attack(rel, 0.2, 3);
  auto text = out.report.to_json();
  CHECK(text.find("per_chg") != std::string::npos);
  CHECK(text.find("rounds") != std::string::npos);
  CHECK(text.find("changed") != std::string::npos);
}
