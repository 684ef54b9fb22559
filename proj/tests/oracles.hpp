#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fpguard/correlations.hpp"
#include "fpguard/fingerprint.hpp"
#include "fpguard/relation.hpp"

// Independent re-executions of the algorithm listings, written against naive
// data structures so the library implementations have something honest to
// disagree with.
namespace oracle {

std::optional<fpguard::FingerprintCode> extract_votes(
    const fpguard::Relation& leaked, const fpguard::FingerprintKey& key,
    std::vector<std::array<uint64_t, 2>>* votes_out = nullptr);

struct AttackResult {
  fpguard::Relation relation;
  std::vector<std::pair<uint32_t, uint32_t>> changed;
  uint32_t rounds = 0;
};

AttackResult column_attack(const fpguard::Relation& rel,
                           const fpguard::JointDistributionSet& prior,
                           double tau, uint32_t rounds, uint64_t seed);

AttackResult row_attack(const fpguard::Relation& rel,
                        const fpguard::Relation& prior_rel,
                        const fpguard::CommunityAssignment& comm, double tau);

AttackResult row_defense(const fpguard::Relation& rel,
                         const fpguard::Relation& prior_rel,
                         const fpguard::CommunityAssignment& comm,
                         double gamma_ratio,
                         const std::vector<fpguard::MarkedPosition>& marked);

// Row discrepancies e_i = sum over same-community partners of
// |s_prior(i,j) - s_current(i,j)|, accumulated in ascending pair order.
std::vector<double> naive_discrepancies(const fpguard::Relation& prior_rel,
                                        const fpguard::Relation& current_rel,
                                        const fpguard::CommunityAssignment& comm);

// (ordered pairs, ordered violations with |delta| >= tau).
std::pair<uint64_t, uint64_t> naive_pair_violations(
    const fpguard::Relation& prior_rel, const fpguard::Relation& current_rel,
    const fpguard::CommunityAssignment& comm, double tau);

// Entropy-regularized objective <G,Theta>_F - H(G)/lambda of a 2x2 plan with
// marginals mu=[mu0,1-mu0], nu=[nu0,1-nu0] and free parameter g = G(0,0).
double objective_2x2(double g, double mu0, double nu0,
                     const std::array<double, 4>& theta, double lambda);

// Fine grid search over the feasible range of g; returns the best objective.
double best_objective_2x2(double mu0, double nu0,
                          const std::array<double, 4>& theta, double lambda,
                          double step = 1e-6);

// Monte-Carlo estimate of the row-defense flag probability: a record is
// flagged when more than floor(tau) of its n_c - 1 community partners have a
// perturbed pair similarity, each pair perturbed independently with
// probability 2*gamma - gamma^2.
double flag_probability_mc(double gamma, uint32_t n_c, double tau,
                           uint32_t samples, uint64_t seed);

// Equal-count bucket codes for a numeric column, matching the encoder
// contract: cut points at ranks b*n/buckets, boundaries only between strictly
// increasing neighbors, code = number of boundaries <= value.
std::vector<uint32_t> quantile_codes(const std::vector<double>& values,
                                     uint32_t buckets);

}  // namespace oracle
