#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fpguard/errors.hpp"

namespace fpguard {

// k x k cost matrix; off-diagonal entries must be strictly positive.
struct CostMatrix {
  size_t k = 0;
  std::vector<double> cells;  // row-major

  double at(size_t a, size_t b) const { return cells[a * k + b]; }
};

// Theta(a,b) = |a - b|; adjacent codes are the cheapest rewrite.
CostMatrix abs_cost_matrix(size_t k);

// Coupling with row sums mu and column sums nu (within tol when converged).
struct TransportPlan {
  size_t k = 0;
  std::vector<double> cells;  // row-major
  std::vector<double> mu;
  std::vector<double> nu;
  std::vector<double> residuals;  // max-norm marginal gap per full iteration
  bool converged = false;
  uint32_t iterations = 0;

  double at(size_t a, size_t b) const { return cells[a * k + b]; }
};

// Entropy-regularized transport: G0 = exp(-lambda * Theta), then alternating
// row/column rescaling until the marginal residual drops below tol. Never
// throws on non-convergence; the flag and residual history tell the story.
TransportPlan sinkhorn(const std::vector<double>& mu,
                       const std::vector<double>& nu, const CostMatrix& theta,
                       double lambda, double tol = 1e-8,
                       uint32_t max_iter = 10000);

// <G, Theta> Frobenius inner product.
double transport_cost(const TransportPlan& plan, const CostMatrix& theta);

// -sum G log G with 0 log 0 = 0.
double plan_entropy(const TransportPlan& plan);

struct EditPlan {
  std::vector<std::pair<size_t, uint32_t>> edits;  // (position, new value)
  uint64_t shortfall = 0;  // demanded moves with no eligible row left
};

// Realizes the plan's off-diagonal mass as value rewrites: for each (a,b),
// round(G(a,b)/mu(a) * |eligible rows valued a|) rows are drawn without
// replacement (seeded) and retargeted to b. Excluded positions are never
// touched; each position is edited at most once.
EditPlan sample_edit_plan(const TransportPlan& plan,
                          const std::vector<uint32_t>& values,
                          const std::vector<char>& excluded, uint64_t seed);

}  // namespace fpguard
