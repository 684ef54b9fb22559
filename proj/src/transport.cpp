#include "fpguard/transport.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fpguard {

CostMatrix abs_cost_matrix(size_t k) {
  if (k == 0) fail(Errc::invalid_argument, "empty cost matrix");
  CostMatrix theta;
  theta.k = k;
  theta.cells.resize(k * k);
  for (size_t a = 0; a < k; ++a)
    for (size_t b = 0; b < k; ++b)
      theta.cells[a * k + b] = std::abs(double(a) - double(b));
  return theta;
}

namespace {

void check_distribution(const std::vector<double>& d, size_t k,
                        const char* what) {
  if (d.size() != k) fail(Errc::shape_error, std::string(what) + " length");
  double sum = 0;
  for (double v : d) {
    if (v < 0) fail(Errc::invalid_argument, std::string(what) + " negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(Errc::invalid_argument, std::string(what) + " does not sum to 1");
}

}  // namespace

TransportPlan sinkhorn(const std::vector<double>& mu,
                       const std::vector<double>& nu, const CostMatrix& theta,
                       double lambda, double tol, uint32_t max_iter) {
  const size_t k = theta.k;
  if (k == 0 || theta.cells.size() != k * k)
    fail(Errc::shape_error, "bad cost matrix");
  check_distribution(mu, k, "mu");
  check_distribution(nu, k, "nu");
  if (!(lambda > 0)) fail(Errc::invalid_argument, "lambda must be positive");
  for (size_t a = 0; a < k; ++a)
    for (size_t b = 0; b < k; ++b) {
      double c = theta.at(a, b);
      if (c < 0 || (a != b && c == 0))
        fail(Errc::invalid_argument, "cost matrix must be positive off diagonal");
    }

  TransportPlan plan;
  plan.k = k;
  plan.mu = mu;
  plan.nu = nu;
  plan.cells.resize(k * k);
  for (size_t i = 0; i < k * k; ++i)
    plan.cells[i] = std::max(std::exp(-lambda * theta.cells[i]), 1e-300);

  auto& g = plan.cells;
  for (uint32_t iter = 0; iter < max_iter; ++iter) {
    for (size_t a = 0; a < k; ++a) {
      double row = 0;
      for (size_t b = 0; b < k; ++b) row += g[a * k + b];
      double scale = row > 0 ? mu[a] / row : 0.0;
      for (size_t b = 0; b < k; ++b) g[a * k + b] *= scale;
    }
    for (size_t b = 0; b < k; ++b) {
      double col = 0;
      for (size_t a = 0; a < k; ++a) col += g[a * k + b];
      double scale = col > 0 ? nu[b] / col : 0.0;
      for (size_t a = 0; a < k; ++a) g[a * k + b] *= scale;
    }
    double resid = 0;
    for (size_t a = 0; a < k; ++a) {
      double row = 0;
      for (size_t b = 0; b < k; ++b) row += g[a * k + b];
      resid = std::max(resid, std::abs(row - mu[a]));
    }
    for (size_t b = 0; b < k; ++b) {
      double col = 0;
      for (size_t a = 0; a < k; ++a) col += g[a * k + b];
      resid = std::max(resid, std::abs(col - nu[b]));
    }
    plan.residuals.push_back(resid);
    plan.iterations = iter + 1;
    if (resid < tol) {
      plan.converged = true;
      break;
    }
  }
  return plan;
}

double transport_cost(const TransportPlan& plan, const CostMatrix& theta) {
  if (plan.k != theta.k || plan.cells.size() != theta.cells.size())
    fail(Errc::shape_error, "plan and cost matrix shapes differ");
  double cost = 0;
  for (size_t i = 0; i < plan.cells.size(); ++i)
    cost += plan.cells[i] * theta.cells[i];
  return cost;
}

double plan_entropy(const TransportPlan& plan) {
  double h = 0;
  for (double v : plan.cells) {
    if (v < 0) fail(Errc::invalid_argument, "negative plan entry");
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

EditPlan sample_edit_plan(const TransportPlan& plan,
                          const std::vector<uint32_t>& values,
                          const std::vector<char>& excluded, uint64_t seed) {
  const size_t k = plan.k;
  if (excluded.size() != values.size())
    fail(Errc::shape_error, "exclusion mask does not cover the column");
  for (uint32_t v : values)
    if (v >= k) fail(Errc::shape_error, "column value outside the plan domain");

  std::vector<std::vector<size_t>> pool(k);
  std::vector<size_t> count(k, 0);
  for (size_t i = 0; i < values.size(); ++i) {
    ++count[values[i]];
    if (!excluded[i]) pool[values[i]].push_back(i);
  }

  EditPlan out;
  std::mt19937_64 rng(seed);
  for (size_t a = 0; a < k; ++a) {
    if (plan.mu[a] <= 0) continue;
    // Demand is sized on every row holding the value; the draw is restricted
    // to non-excluded rows, so protected cells surface as shortfall instead
    // of silently shrinking the plan.
    const double avail = double(count[a]);
    for (size_t b = 0; b < k; ++b) {
      if (b == a) continue;
      long long demand = std::llround(plan.at(a, b) / plan.mu[a] * avail);
      if (demand <= 0) continue;
      size_t take = std::min(size_t(demand), pool[a].size());
      out.shortfall += uint64_t(demand) - take;
      for (size_t n = 0; n < take; ++n) {
        size_t idx = size_t(rng() % pool[a].size());
        out.edits.emplace_back(pool[a][idx], uint32_t(b));
        pool[a][idx] = pool[a].back();
        pool[a].pop_back();
      }
    }
  }
  return out;
}

}  // namespace fpguard
