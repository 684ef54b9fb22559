#include "fpguard/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fpguard/transport.hpp"

namespace fpguard {

using nlohmann::json;

std::string DefenseReport::to_json() const {
  json pos = json::array();
  for (const auto& [r, a] : changed_positions) pos.push_back({r, a});
  json attrs = json::array();
  for (const auto& d : attribute_diags) {
    // Full residual histories run to max_iter; the report keeps the tail.
    size_t tail = std::min<size_t>(d.residuals.size(), 8);
    json rtail = json::array();
    for (size_t i = d.residuals.size() - tail; i < d.residuals.size(); ++i)
      rtail.push_back(d.residuals[i]);
    attrs.push_back({{"attribute", d.attribute},
                     {"lambda", d.lambda},
                     {"converged", d.converged},
                     {"iterations", d.iterations},
                     {"residual", d.residual},
                     {"residual_tail", rtail},
                     {"shortfall", d.shortfall},
                     {"applied", d.applied}});
  }
  json comms = json::array();
  for (const auto& s : selections)
    comms.push_back({{"community", s.community},
                     {"selected", s.selected},
                     {"objective", s.objective}});
  return json{{"per_chg", per_chg},
              {"changed_positions", pos},
              {"attributes", attrs},
              {"communities", comms}}
      .dump();
}

namespace {

double fraction_changed(size_t changed, const Relation& rel) {
  return double(changed) / (double(rel.num_rows()) * double(rel.num_attrs()));
}

std::vector<char> fingerprinted_rows(const std::vector<MarkedPosition>& marked,
                                     size_t num_rows) {
  std::vector<char> out(num_rows, 0);
  for (const auto& m : marked) {
    if (m.row >= num_rows) fail(Errc::shape_error, "marked row out of range");
    out[m.row] = 1;
  }
  return out;
}

}  // namespace

DefenseOutcome column_defense(const Relation& rel,
                              const JointDistributionSet& j_prior,
                              const std::vector<MarkedPosition>& marked,
                              double tau, const std::vector<double>& lambdas,
                              uint64_t seed) {
  if (!(tau > 0)) fail(Errc::invalid_argument, "tau must be positive");
  const uint32_t n_attrs = uint32_t(rel.num_attrs());
  if (lambdas.size() != 1 && lambdas.size() != n_attrs)
    fail(Errc::shape_error, "need one lambda, global or per attribute");
  for (double l : lambdas)
    if (!(l > 0)) fail(Errc::invalid_argument, "lambda must be positive");
  if (j_prior.cards.size() != n_attrs)
    fail(Errc::shape_error, "prior joints do not match the schema");
  for (uint32_t p = 0; p < n_attrs; ++p)
    if (j_prior.cards[p] != rel.schema[p].cardinality)
      fail(Errc::shape_error, "prior joints do not match the schema");

  DefenseOutcome out;
  out.relation = rel;
  const size_t m = rel.num_rows();

  JointDistributionSet now = joint_distributions(rel);
  std::vector<char> treat(n_attrs, 0);
  for (uint32_t p = 0; p + 1 < n_attrs; ++p)
    for (uint32_t q = p + 1; q < n_attrs; ++q) {
      double frob = 0;
      for (uint32_t a = 0; a < j_prior.cards[p]; ++a)
        for (uint32_t b = 0; b < j_prior.cards[q]; ++b) {
          double d = j_prior.at(p, q, a, b) - now.at(p, q, a, b);
          frob += d * d;
        }
      if (std::sqrt(frob) > tau) treat[p] = treat[q] = 1;
    }

  std::vector<std::vector<char>> marked_cell(n_attrs,
                                             std::vector<char>(m, 0));
  for (const auto& mk : marked) {
    if (mk.row >= m || mk.attr >= n_attrs)
      fail(Errc::shape_error, "marked position out of range");
    marked_cell[mk.attr][mk.row] = 1;
  }

  std::mt19937_64 rng(seed);
  for (uint32_t p = 0; p < n_attrs; ++p) {
    if (!treat[p]) continue;
    const uint32_t k = rel.schema[p].cardinality;
    std::vector<double> mu(k, 0.0);
    std::vector<uint32_t> column(m);
    for (size_t i = 0; i < m; ++i) {
      column[i] = out.relation.rows[i][p];
      mu[column[i]] += 1.0;
    }
    for (double& v : mu) v /= double(m);
    std::vector<double> nu = marginal(j_prior, p);

    SinkhornDiag diag;
    diag.attribute = p;
    diag.lambda = lambdas.size() == 1 ? lambdas[0] : lambdas[p];
    TransportPlan plan = sinkhorn(mu, nu, abs_cost_matrix(k), diag.lambda);
    diag.converged = plan.converged;
    diag.iterations = plan.iterations;
    diag.residuals = plan.residuals;
    diag.residual = plan.residuals.empty() ? 0.0 : plan.residuals.back();
    if (plan.converged) {
      EditPlan edits =
          sample_edit_plan(plan, column, marked_cell[p], rng());
      for (const auto& [row, value] : edits.edits) {
        out.relation.rows[row][p] = value;
        out.report.changed_positions.emplace_back(uint32_t(row), p);
      }
      diag.shortfall = edits.shortfall;
      diag.applied = true;
    }
    out.report.attribute_diags.push_back(std::move(diag));
  }

  std::sort(out.report.changed_positions.begin(),
            out.report.changed_positions.end());
  out.report.per_chg =
      fraction_changed(out.report.changed_positions.size(), rel);
  return out;
}

double eval_row_objective(const std::vector<uint32_t>& selected,
                          const Relation& before, const Relation& after,
                          const StatRelationSet& prior,
                          const std::vector<MarkedPosition>& marked) {
  if (selected.empty()) return 0.0;
  const size_t m = prior.comm.membership.size();
  if (before.num_rows() != m || after.num_rows() != m)
    fail(Errc::shape_error, "relations do not match the similarity set");

  std::vector<char> fp = fingerprinted_rows(marked, m);
  const uint32_t c = prior.comm.membership.at(selected.front());
  std::unordered_set<uint32_t> sel;
  for (uint32_t i : selected) {
    if (prior.comm.membership.at(i) != c)
      fail(Errc::invalid_argument, "selected rows span communities");
    if (fp[i])
      fail(Errc::constraint_violation, "selected row carries fingerprint marks");
    sel.insert(i);
  }

  StatRelationSet s_before = stat_relations(before, prior.comm);
  StatRelationSet s_after = stat_relations(after, prior.comm);
  double sum_before = 0, sum_after = 0;
  for (uint32_t j = 0; j < m; ++j) {
    if (prior.comm.membership[j] != c || sel.count(j)) continue;
    for (uint32_t i : selected) {
      double sp = prior.s(i, j);
      sum_before += std::abs(sp - s_before.s(i, j));
      sum_after += std::abs(sp - s_after.s(i, j));
    }
  }
  return std::abs(sum_after - sum_before);
}

DefenseOutcome row_defense(const Relation& rel, const StatRelationSet& s_prior,
                           double gamma_ratio,
                           const std::vector<MarkedPosition>& marked) {
  if (!(gamma_ratio > 0) || gamma_ratio > 1)
    fail(Errc::invalid_argument, "gamma_ratio must be in (0,1]");
  const size_t m = rel.num_rows();
  if (s_prior.comm.membership.size() != m)
    fail(Errc::shape_error, "similarity set does not cover the relation");

  StatRelationSet now = stat_relations(rel, s_prior.comm);
  std::vector<double> e = row_discrepancies(s_prior, now);
  std::vector<char> fp = fingerprinted_rows(marked, m);

  DefenseOutcome out;
  out.relation = rel;
  auto groups = s_prior.comm.groups();
  for (uint32_t c = 0; c < groups.size(); ++c) {
    const auto& group = groups[c];
    size_t quota = size_t(std::ceil(double(group.size()) * gamma_ratio));
    std::vector<uint32_t> eligible;
    for (uint32_t i : group)
      if (!fp[i]) eligible.push_back(i);
    std::sort(eligible.begin(), eligible.end(), [&](uint32_t a, uint32_t b) {
      if (e[a] != e[b]) return e[a] > e[b];
      return a < b;
    });
    if (eligible.size() > quota) eligible.resize(quota);
    std::sort(eligible.begin(), eligible.end());

    std::vector<uint32_t> mode(rel.num_attrs());
    for (uint32_t p = 0; p < rel.num_attrs(); ++p) {
      std::vector<uint32_t> count(rel.schema[p].cardinality, 0);
      for (uint32_t i : group) ++count[rel.rows[i][p]];
      mode[p] = uint32_t(std::max_element(count.begin(), count.end()) -
                         count.begin());
    }
    for (uint32_t i : eligible)
      for (uint32_t p = 0; p < rel.num_attrs(); ++p)
        if (out.relation.rows[i][p] != mode[p]) {
          out.relation.rows[i][p] = mode[p];
          out.report.changed_positions.emplace_back(i, p);
        }

    CommunitySelection selection;
    selection.community = c;
    selection.selected = std::move(eligible);
    out.report.selections.push_back(std::move(selection));
  }

  for (auto& selection : out.report.selections)
    selection.objective = eval_row_objective(selection.selected, rel,
                                             out.relation, s_prior, marked);

  std::sort(out.report.changed_positions.begin(),
            out.report.changed_positions.end());
  out.report.per_chg =
      fraction_changed(out.report.changed_positions.size(), rel);
  return out;
}

RobustResult robust_fingerprint(const Relation& rel, const FingerprintKey& key,
                                const StatRelationSet& s_prior,
                                const JointDistributionSet& j_prior,
                                double gamma_ratio, double tau,
                                const std::vector<double>& lambdas,
                                uint64_t seed) {
  InsertResult ins = embed(rel, key);
  DefenseOutcome rows = row_defense(ins.relation, s_prior, gamma_ratio,
                                    ins.marks);
  DefenseOutcome cols =
      column_defense(rows.relation, j_prior, ins.marks, tau, lambdas, seed);

  RobustResult out;
  out.relation = std::move(cols.relation);
  out.marks = std::move(ins.marks);
  out.skipped_marks = ins.skipped;
  auto& pos = out.report.changed_positions;
  pos = std::move(rows.report.changed_positions);
  pos.insert(pos.end(), cols.report.changed_positions.begin(),
             cols.report.changed_positions.end());
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  out.report.per_chg = fraction_changed(pos.size(), rel);
  out.report.attribute_diags = std::move(cols.report.attribute_diags);
  out.report.selections = std::move(rows.report.selections);
  return out;
}

}  // namespace fpguard
